#pragma once

#include "drillabc/abc.hpp"
#include "drillabc/fem.hpp"
#include "drillabc/stability.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace drillabc {

// All numbers use the shortest round-trip representation, LF line endings.

// omega_rad_s,omega_rpm,wob_kn,r,stable,p_unstable
std::string grid_csv(const StabilityGrid& grid);
// omega_rad_s,omega_rpm,wob_kn,r,branch
std::string boundary_csv(const BoundaryCurve& curve, double w_ref);

// model_tag,phi1..phi6,distance; unused phi columns are left empty.
std::string population_csv(const Population& pop);
// Particles only; tolerance and counters live in the manifest.
std::vector<Particle> parse_population_csv(const std::string& text);

// population,tolerance,attempts,accepted,p_m1..p_m4
std::string model_probability_csv(const AbcState& state);
// parameter,bin,lower,upper,count,density,kde
std::string marginals_csv(const PosteriorStats& stats);
std::string correlation_csv(const PosteriorStats& stats);
// speed_rad_s,low,median,high
std::string envelope_csv(const std::vector<EnvelopePoint>& env);
// mode,omega_rad_s,xi
std::string modes_csv(const std::vector<Mode>& modes);

struct SvgSeries {
    std::string label;
    std::vector<std::pair<double, double>> points;
    bool scatter = false;
};

// Standalone line/scatter plot with linear axes, ticks and a legend. A
// non-finite point breaks a line series.
std::string svg_plot(const std::string& title, const std::string& x_label, const std::string& y_label,
                     const std::vector<SvgSeries>& series);

// Creates missing parent directories.
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace drillabc
