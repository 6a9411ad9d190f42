#pragma once

#include "drillabc/bitrock.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace drillabc {

enum class Split { Calibration, Validation };
enum class SpeedUnit { Rpm, RadPerSec };

SpeedUnit parse_speed_unit(const std::string& s);

struct TorqueSample {
    double speed;   // rad/s
    double torque;  // kN·m
    Split split = Split::Calibration;

    bool operator==(const TorqueSample&) const = default;
};

struct TorqueDataset {
    std::vector<TorqueSample> samples;
    std::string source;
    double w_ref = kReferenceWob;

    std::vector<TorqueSample> calibration() const;
    std::vector<TorqueSample> validation() const;

    bool operator==(const TorqueDataset&) const = default;
};

double rpm_to_rad_per_sec(double rpm);
double rad_per_sec_to_rpm(double w);

// Header row with columns speed, torque_knm and optionally split
// (calibration|validation, default calibration). Leading "# key=value"
// lines carry source and w_ref_kn. Throws DataError naming the line.
TorqueDataset read_csv(const std::filesystem::path& path, SpeedUnit speed_unit = SpeedUnit::RadPerSec);
TorqueDataset parse_csv(const std::string& text, SpeedUnit speed_unit = SpeedUnit::RadPerSec);

// Speeds in rad/s, shortest round-trip number formatting.
void write_csv(const std::filesystem::path& path, const TorqueDataset& dataset);
std::string format_csv(const TorqueDataset& dataset);

// 200 points uniform on [0.5, 15] rad/s.
std::vector<double> default_speed_grid();

// torque + N(0, noise_std²); even indices calibration, odd validation.
TorqueDataset synthesize(const BitRockModel& model, const WobRatio& r, const std::vector<double>& speeds,
                         double noise_std, std::uint64_t seed);

// Shortest decimal that round-trips to the same double.
std::string format_double(double v);

}  // namespace drillabc
