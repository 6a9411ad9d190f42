#include "drillabc/export.hpp"

#include "drillabc/dataio.hpp"
#include "drillabc/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace drillabc {

namespace {

const std::string& fd(double v, std::string& buf) {
    buf = format_double(v);
    return buf;
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

double parse_number(const std::string& s, std::size_t line) {
    double v = 0.0;
    const auto* end = s.data() + s.size();
    const auto res = std::from_chars(s.data(), end, v);
    if (res.ec != std::errc() || res.ptr != end) {
        throw DataError("line " + std::to_string(line) + ": cannot parse number '" + s + "'");
    }
    return v;
}

}  // namespace

std::string grid_csv(const StabilityGrid& grid) {
    std::ostringstream os;
    std::string b;
    os << "omega_rad_s,omega_rpm,wob_kn,r,stable,p_unstable\n";
    for (std::size_t i = 0; i < grid.omega_axis.size(); ++i) {
        const double w = grid.omega_axis[i];
        for (std::size_t j = 0; j < grid.wob_axis.size(); ++j) {
            const double wob = grid.wob_axis[j];
            os << fd(w, b) << ',' << fd(rad_per_sec_to_rpm(w), b) << ',' << fd(wob, b) << ','
               << fd(wob / grid.w_ref, b) << ',' << (grid.is_stable(i, j) ? 1 : 0) << ','
               << fd(grid.probability[grid.index(i, j)], b) << '\n';
        }
    }
    return os.str();
}

std::string boundary_csv(const BoundaryCurve& curve, double w_ref) {
    std::ostringstream os;
    std::string b;
    os << "omega_rad_s,omega_rpm,wob_kn,r,branch\n";
    for (const auto& p : curve.points) {
        os << fd(p.omega, b) << ',' << fd(rad_per_sec_to_rpm(p.omega), b) << ',' << fd(p.wob, b) << ','
           << fd(p.wob / w_ref, b) << ',' << p.branch << '\n';
    }
    return os.str();
}

std::string population_csv(const Population& pop) {
    std::ostringstream os;
    std::string b;
    os << "model_tag";
    for (std::size_t j = 1; j <= kMaxParameters; ++j) os << ",phi" << j;
    os << ",distance\n";
    for (const auto& p : pop.particles) {
        os << model_index(p.kind);
        for (std::size_t j = 0; j < kMaxParameters; ++j) {
            os << ',';
            if (j < p.phi.size()) os << fd(p.phi[j], b);
        }
        os << ',' << fd(p.distance, b) << '\n';
    }
    return os.str();
}

std::vector<Particle> parse_population_csv(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    std::size_t n = 0;
    std::vector<Particle> out;
    while (std::getline(is, line)) {
        ++n;
        if (n == 1) {
            if (split_fields(line).size() != kMaxParameters + 2 || line.rfind("model_tag", 0) != 0) {
                throw DataError("line 1: unexpected population header");
            }
            continue;
        }
        if (line.empty()) continue;
        const auto f = split_fields(line);
        if (f.size() != kMaxParameters + 2) throw DataError("line " + std::to_string(n) + ": wrong field count");
        Particle p;
        try {
            p.kind = model_from_index(static_cast<int>(parse_number(f[0], n)));
        } catch (const DomainError& e) {
            throw DataError("line " + std::to_string(n) + ": " + e.what());
        }
        const auto k = parameter_count(p.kind);
        for (std::size_t j = 0; j < kMaxParameters; ++j) {
            const auto& s = f[1 + j];
            if (j < k) {
                p.phi.push_back(parse_number(s, n));
            } else if (!s.empty()) {
                throw DataError("line " + std::to_string(n) + ": extra parameter for " + model_name(p.kind));
            }
        }
        p.distance = parse_number(f.back(), n);
        out.push_back(std::move(p));
    }
    return out;
}

std::string model_probability_csv(const AbcState& state) {
    std::ostringstream os;
    std::string b;
    os << "population,tolerance,attempts,accepted,p_m1,p_m2,p_m3,p_m4\n";
    for (std::size_t g = 1; g <= state.populations.size(); ++g) {
        const auto& pop = state.population(g);
        const auto mp = model_posterior(state, g);
        os << g << ',' << (std::isinf(pop.tolerance) ? std::string("inf") : fd(pop.tolerance, b)) << ','
           << pop.attempts << ',' << pop.particles.size();
        for (auto k : kAllModels) os << ',' << fd(mp.probability(k), b);
        os << '\n';
    }
    return os.str();
}

std::string marginals_csv(const PosteriorStats& stats) {
    std::ostringstream os;
    std::string b;
    os << "parameter,bin,lower,upper,count,density,kde\n";
    for (const auto& m : stats.marginals) {
        const auto bins = m.counts.size();
        const double width = (m.upper - m.lower) / static_cast<double>(bins);
        for (std::size_t i = 0; i < bins; ++i) {
            os << m.name << ',' << i << ',' << fd(m.lower + static_cast<double>(i) * width, b) << ','
               << fd(m.lower + static_cast<double>(i + 1) * width, b) << ',' << m.counts[i] << ','
               << fd(m.density[i], b) << ',' << fd(m.kde[i], b) << '\n';
        }
    }
    return os.str();
}

std::string correlation_csv(const PosteriorStats& stats) {
    std::ostringstream os;
    std::string b;
    os << "parameter";
    for (const auto& m : stats.marginals) os << ',' << m.name;
    os << '\n';
    for (std::size_t i = 0; i < stats.marginals.size(); ++i) {
        os << stats.marginals[i].name;
        for (std::size_t j = 0; j < stats.marginals.size(); ++j) {
            os << ',' << fd(stats.correlation(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)), b);
        }
        os << '\n';
    }
    return os.str();
}

std::string envelope_csv(const std::vector<EnvelopePoint>& env) {
    std::ostringstream os;
    std::string b;
    os << "speed_rad_s,low,median,high\n";
    for (const auto& e : env) {
        os << fd(e.speed, b) << ',' << fd(e.low, b) << ',' << fd(e.median, b) << ',' << fd(e.high, b) << '\n';
    }
    return os.str();
}

std::string modes_csv(const std::vector<Mode>& modes) {
    std::ostringstream os;
    std::string b;
    os << "mode,omega_rad_s,xi\n";
    for (std::size_t i = 0; i < modes.size(); ++i) {
        os << i + 1 << ',' << fd(modes[i].omega_n, b) << ',' << fd(modes[i].xi, b) << '\n';
    }
    return os.str();
}

namespace {

std::string escape_xml(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

std::string fixed(double v, int digits = 2) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string tick_label(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

}  // namespace

std::string svg_plot(const std::string& title, const std::string& x_label, const std::string& y_label,
                     const std::vector<SvgSeries>& series) {
    static const char* const palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"};
    const double width = 720, height = 480, left = 70, right = 170, top = 40, bottom = 60;
    const double pw = width - left - right;
    const double ph = height - top - bottom;

    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& s : series) {
        for (const auto& [x, y] : s.points) {
            if (!std::isfinite(x) || !std::isfinite(y)) continue;
            x0 = std::min(x0, x);
            x1 = std::max(x1, x);
            y0 = std::min(y0, y);
            y1 = std::max(y1, y);
        }
    }
    if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (x1 == x0) x0 -= 0.5, x1 += 0.5;
    if (y1 == y0) y0 -= 0.5, y1 += 0.5;
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;

    auto sx = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
    auto sy = [&](double y) { return top + ph - (y - y0) / (y1 - y0) * ph; };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
       << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << fixed(left + pw / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
       << escape_xml(title) << "</text>\n";
    os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 5; ++t) {
        const double xv = x0 + (x1 - x0) * t / 5.0;
        const double yv = y0 + (y1 - y0) * t / 5.0;
        os << "<line x1=\"" << fixed(sx(xv)) << "\" y1=\"" << fixed(top + ph) << "\" x2=\"" << fixed(sx(xv))
           << "\" y2=\"" << fixed(top + ph + 5) << "\" stroke=\"black\"/>\n";
        os << "<text x=\"" << fixed(sx(xv)) << "\" y=\"" << fixed(top + ph + 18) << "\" text-anchor=\"middle\">"
           << tick_label(xv) << "</text>\n";
        os << "<line x1=\"" << fixed(left - 5) << "\" y1=\"" << fixed(sy(yv)) << "\" x2=\"" << fixed(left)
           << "\" y2=\"" << fixed(sy(yv)) << "\" stroke=\"black\"/>\n";
        os << "<text x=\"" << fixed(left - 8) << "\" y=\"" << fixed(sy(yv) + 4) << "\" text-anchor=\"end\">"
           << tick_label(yv) << "</text>\n";
    }
    os << "<text x=\"" << fixed(left + pw / 2) << "\" y=\"" << fixed(height - 15) << "\" text-anchor=\"middle\">"
       << escape_xml(x_label) << "</text>\n";
    os << "<text transform=\"translate(18," << fixed(top + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
       << escape_xml(y_label) << "</text>\n";

    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const char* colour = palette[k % std::size(palette)];
        if (s.scatter) {
            for (const auto& [x, y] : s.points) {
                if (!std::isfinite(x) || !std::isfinite(y)) continue;
                os << "<circle cx=\"" << fixed(sx(x)) << "\" cy=\"" << fixed(sy(y)) << "\" r=\"2\" fill=\"" << colour
                   << "\"/>\n";
            }
        } else {
            // Non-finite points break the line.
            std::size_t i = 0;
            while (i < s.points.size()) {
                std::size_t j = i;
                while (j < s.points.size() && std::isfinite(s.points[j].first) && std::isfinite(s.points[j].second)) ++j;
                if (j > i) {
                    os << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\" points=\"";
                    for (std::size_t m = i; m < j; ++m) {
                        os << (m > i ? " " : "") << fixed(sx(s.points[m].first)) << ',' << fixed(sy(s.points[m].second));
                    }
                    os << "\"/>\n";
                }
                i = j + 1;
            }
        }
        const double ly = top + 10 + 18.0 * static_cast<double>(k);
        os << "<line x1=\"" << fixed(left + pw + 12) << "\" y1=\"" << fixed(ly) << "\" x2=\"" << fixed(left + pw + 32)
           << "\" y2=\"" << fixed(ly) << "\" stroke=\"" << colour << "\" stroke-width=\"3\"/>\n";
        os << "<text x=\"" << fixed(left + pw + 38) << "\" y=\"" << fixed(ly + 4) << "\">" << escape_xml(s.label)
           << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw DataError("write failed for " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

}  // namespace drillabc
