#include "drillabc/dataio.hpp"

#include "drillabc/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

namespace drillabc {

SpeedUnit parse_speed_unit(const std::string& s) {
    if (s == "rpm") return SpeedUnit::Rpm;
    if (s == "rad_s") return SpeedUnit::RadPerSec;
    throw DomainError("unknown speed unit '" + s + "' (valid: rpm, rad_s)");
}

std::vector<TorqueSample> TorqueDataset::calibration() const {
    std::vector<TorqueSample> out;
    for (const auto& s : samples) {
        if (s.split == Split::Calibration) out.push_back(s);
    }
    return out;
}

std::vector<TorqueSample> TorqueDataset::validation() const {
    std::vector<TorqueSample> out;
    for (const auto& s : samples) {
        if (s.split == Split::Validation) out.push_back(s);
    }
    return out;
}

double rpm_to_rad_per_sec(double rpm) { return rpm * std::numbers::pi / 30.0; }
double rad_per_sec_to_rpm(double w) { return w * 30.0 / std::numbers::pi; }

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_commas(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_number(const std::string& s, std::size_t line_no, const char* column) {
    double v = 0.0;
    const auto* first = s.data();
    const auto* last = s.data() + s.size();
    if (!s.empty() && *first == '+') ++first;
    auto res = std::from_chars(first, last, v);
    if (s.empty() || res.ec != std::errc() || res.ptr != last) {
        throw DataError("line " + std::to_string(line_no) + ": cannot parse " + column + " value '" + s + "'");
    }
    return v;
}

}  // namespace

TorqueDataset parse_csv(const std::string& text, SpeedUnit speed_unit) {
    TorqueDataset d;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    int speed_col = -1, torque_col = -1, split_col = -1;
    bool have_header = false;
    std::size_t width = 0;

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        if (line[0] == '#') {
            const auto body = trim(line.substr(1));
            const auto eq = body.find('=');
            if (eq == std::string::npos) continue;
            const auto key = trim(body.substr(0, eq));
            const auto value = body.substr(eq + 1);
            if (key == "source") {
                d.source = value;
            } else if (key == "w_ref_kn") {
                d.w_ref = parse_number(trim(value), line_no, "w_ref_kn");
                if (!(d.w_ref > 0.0)) throw DataError("line " + std::to_string(line_no) + ": w_ref_kn must be positive");
            }
            continue;
        }
        const auto cells = split_commas(line);
        if (!have_header) {
            for (std::size_t i = 0; i < cells.size(); ++i) {
                if (cells[i] == "speed") speed_col = static_cast<int>(i);
                else if (cells[i] == "torque_knm") torque_col = static_cast<int>(i);
                else if (cells[i] == "split") split_col = static_cast<int>(i);
            }
            if (speed_col < 0 || torque_col < 0) {
                throw DataError("line " + std::to_string(line_no) + ": header must contain speed and torque_knm");
            }
            have_header = true;
            width = cells.size();
            continue;
        }
        if (cells.size() != width) {
            throw DataError("line " + std::to_string(line_no) + ": expected " + std::to_string(width) + " columns, got " +
                            std::to_string(cells.size()));
        }
        TorqueSample s;
        s.speed = parse_number(cells[static_cast<std::size_t>(speed_col)], line_no, "speed");
        s.torque = parse_number(cells[static_cast<std::size_t>(torque_col)], line_no, "torque_knm");
        if (!std::isfinite(s.speed) || s.speed < 0.0) {
            throw DataError("line " + std::to_string(line_no) + ": speed must be finite and >= 0");
        }
        if (!std::isfinite(s.torque)) throw DataError("line " + std::to_string(line_no) + ": torque must be finite");
        if (speed_unit == SpeedUnit::Rpm) s.speed = rpm_to_rad_per_sec(s.speed);
        if (split_col >= 0) {
            const auto& v = cells[static_cast<std::size_t>(split_col)];
            if (v.empty() || v == "calibration") s.split = Split::Calibration;
            else if (v == "validation") s.split = Split::Validation;
            else throw DataError("line " + std::to_string(line_no) + ": unknown split '" + v + "'");
        }
        d.samples.push_back(s);
    }
    if (!have_header) throw DataError("missing header row");
    return d;
}

TorqueDataset read_csv(const std::filesystem::path& path, SpeedUnit speed_unit) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_csv(ss.str(), speed_unit);
}

std::string format_csv(const TorqueDataset& dataset) {
    std::string out;
    if (!dataset.source.empty()) out += "# source=" + dataset.source + "\n";
    out += "# w_ref_kn=" + format_double(dataset.w_ref) + "\n";
    out += "speed,torque_knm,split\n";
    for (const auto& s : dataset.samples) {
        out += format_double(s.speed);
        out += ',';
        out += format_double(s.torque);
        out += s.split == Split::Calibration ? ",calibration\n" : ",validation\n";
    }
    return out;
}

void write_csv(const std::filesystem::path& path, const TorqueDataset& dataset) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot write " + path.string());
    f << format_csv(dataset);
}

std::vector<double> default_speed_grid() {
    std::vector<double> s(200);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = 0.5 + 14.5 * static_cast<double>(i) / 199.0;
    return s;
}

TorqueDataset synthesize(const BitRockModel& model, const WobRatio& r, const std::vector<double>& speeds,
                         double noise_std, std::uint64_t seed) {
    if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) throw DomainError("synthesize: noise_std must be >= 0");
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    TorqueDataset d;
    d.w_ref = r.wob_ref();
    d.source = "synthetic " + model_name(model.kind()) + " noise_std=" + format_double(noise_std) +
               " seed=" + std::to_string(seed);
    d.samples.reserve(speeds.size());
    for (std::size_t i = 0; i < speeds.size(); ++i) {
        const double e = noise_std * noise(gen);
        d.samples.push_back({speeds[i], torque(model, r, speeds[i]) + e,
                             i % 2 == 0 ? Split::Calibration : Split::Validation});
    }
    return d;
}

}  // namespace drillabc
