#include "commands.hpp"

#include "drillabc/abc.hpp"
#include "drillabc/calibration.hpp"
#include "drillabc/dataio.hpp"
#include "drillabc/errors.hpp"
#include "drillabc/export.hpp"
#include "drillabc/fem.hpp"
#include "drillabc/stability.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

namespace drillabc::cli {

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(GenDataConfig, model, params_from, params, noise, seed, wob, w_ref, n_points,
                                   speed_min, speed_max)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(FitConfig, data, speed_unit, models, wob, starts, jitter, seed)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(AbcConfig, data, speed_unit, models, wob, delta, n, eps_floor, max_populations,
                                   seed, stall_rate, stall_window, coverage, bins)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(MapConfig, plant, i_eq, omega_n, xi, n_dp, n_bha, alpha, beta, models,
                                   params_from, fit_file, abc_dir, population, percentile, mixture, omega_min,
                                   omega_max, wob_min_ratio, wob_max_ratio, w_ref, n_omega, n_wob)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(FemModesConfig, n_dp, n_bha, alpha, beta)

namespace fs = std::filesystem;

namespace {

template <typename T>
T strict_from_json(const Json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    const Json reference = T{};
    for (const auto& [key, value] : j.items()) {
        if (!reference.contains(key)) throw ConfigError("unknown config key '" + key + "'");
    }
    for (const auto& [key, value] : reference.items()) {
        if (!j.contains(key)) throw ConfigError("missing config key '" + key + "'");
    }
    try {
        return j.get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad config value: ") + e.what());
    }
}

ModelKind model_arg(const std::string& name) {
    try {
        return parse_model_name(name);
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
}

std::vector<ModelKind> model_list(const std::vector<std::string>& names) {
    if (names.empty()) throw ConfigError("at least one model is required");
    std::vector<ModelKind> out;
    for (const auto& n : names) {
        const auto k = model_arg(n);
        if (std::find(out.begin(), out.end(), k) != out.end()) throw ConfigError("model listed twice: " + n);
        out.push_back(k);
    }
    return out;
}

std::string absolute_or_empty(const std::string& p) {
    return p.empty() ? p : fs::absolute(p).lexically_normal().string();
}

void require(bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
}

SpeedUnit speed_unit_arg(const std::string& s) {
    try {
        return parse_speed_unit(s);
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
}

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = n == 1 ? a : a + (b - a) * i / (n - 1);
    return v;
}

class Outputs {
public:
    Outputs(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

    void write(const std::string& name, const std::string& text) {
        write_text(dir_ / name, text);
        names_.push_back(name);
    }
    const std::vector<std::string>& names() const { return names_; }
    const fs::path& dir() const { return dir_; }

private:
    fs::path dir_;
    std::vector<std::string> names_;
};

std::string fit_table(const std::vector<FitResult>& fits) {
    std::ostringstream os;
    os << "model,converged,evaluations,rho";
    for (std::size_t j = 1; j <= kMaxParameters; ++j) os << ",phi" << j;
    os << '\n';
    for (const auto& f : fits) {
        os << model_name(f.model.kind()) << ',' << (f.converged ? 1 : 0) << ',' << f.iterations << ','
           << format_double(f.metric_value);
        const auto p = f.model.params();
        for (std::size_t j = 0; j < kMaxParameters; ++j) {
            os << ',';
            if (j < p.size()) os << format_double(p[j]);
        }
        os << '\n';
    }
    return os.str();
}

std::vector<BitRockModel> read_fit_table(const fs::path& path) {
    std::istringstream is(read_text(path));
    std::string line;
    std::vector<BitRockModel> out;
    std::size_t n = 0;
    while (std::getline(is, line)) {
        ++n;
        if (n == 1 || line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) f.push_back(cell);
        if (line.back() == ',') f.emplace_back();
        if (f.size() < 5) throw DataError(path.string() + " line " + std::to_string(n) + ": too few fields");
        const auto kind = parse_model_name(f[0]);
        std::vector<double> p;
        for (std::size_t j = 0; j < parameter_count(kind); ++j) {
            double v = 0.0;
            const auto& s = f.at(4 + j);
            const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
            if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
                throw DataError(path.string() + " line " + std::to_string(n) + ": bad parameter '" + s + "'");
            }
            p.push_back(v);
        }
        out.emplace_back(kind, p);
    }
    return out;
}

TorqueDataset load(const std::string& path, const std::string& unit) {
    return read_csv(path, speed_unit_arg(unit));
}

WobRatio ratio_for(const TorqueDataset& d, double wob) { return WobRatio(wob > 0.0 ? wob : d.w_ref, d.w_ref); }

std::vector<FitResult> fit_models(const TorqueDataset& d, const WobRatio& r, const std::vector<ModelKind>& kinds,
                                  int starts, double jitter, std::uint64_t seed) {
    std::vector<FitResult> fits;
    for (auto k : kinds) {
        const auto p0 = published_estimate(k).params();
        fits.push_back(fit_multistart(d, k, r, std::vector<double>(p0.begin(), p0.end()), starts, jitter, seed));
    }
    return fits;
}

Json json_number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

void run_gen_data(const GenDataConfig& c, Outputs& out, Json& info, std::ostream& log) {
    const auto kind = model_arg(c.model);
    const BitRockModel model = c.params_from == "paper" ? published_estimate(kind) : BitRockModel(kind, c.params);
    const auto speeds = linspace(c.speed_min, c.speed_max, c.n_points);
    auto d = synthesize(model, WobRatio(c.wob, c.w_ref), speeds, c.noise, c.seed);
    out.write("data.csv", format_csv(d));
    info["samples"] = d.samples.size();
    log << "wrote " << d.samples.size() << " samples of " << model_name(kind) << '\n';
}

void run_fit(const FitConfig& c, Outputs& out, Json& info, std::ostream& log) {
    const auto d = load(c.data, c.speed_unit);
    const auto r = ratio_for(d, c.wob);
    const auto fits = fit_models(d, r, model_list(c.models), c.starts, c.jitter, c.seed);
    out.write("fit.csv", fit_table(fits));
    for (const auto& f : fits) {
        log << model_name(f.model.kind()) << "  rho=" << format_double(f.metric_value)
            << (f.converged ? "" : "  (not converged)") << "\n   ";
        const auto names = parameter_names(f.model.kind());
        for (std::size_t j = 0; j < names.size(); ++j) log << ' ' << names[j] << '=' << format_double(f.model.params()[j]);
        log << '\n';
    }
    info["r"] = r.ratio();
}

void write_abc_bundle(const AbcState& state, const std::vector<FitResult>& fits, const TorqueDataset& d,
                      const AbcConfig& c, const WobRatio& r, Outputs& out, Json& info) {
    for (std::size_t g = 1; g <= state.populations.size(); ++g) {
        out.write("population_" + std::to_string(g) + ".csv", population_csv(state.population(g)));
    }
    out.write("model_probabilities.csv", model_probability_csv(state));

    Json tol = Json::array();
    for (double t : state.tolerances()) tol.push_back(json_number_or_null(t));
    info["populations"] = state.populations.size();
    info["tolerances"] = tol;
    info["termination"] = state.termination == Termination::FloorReached ? "floor_reached" : "max_populations";
    Json priors = Json::object();
    for (const auto& p : state.priors) priors[model_name(p.kind)] = {{"lower", p.lower}, {"upper", p.upper}};
    info["priors"] = priors;

    if (state.populations.empty()) return;
    const auto g = state.populations.size();
    std::vector<SvgSeries> prob_series;
    for (auto k : model_list(c.models)) {
        SvgSeries s{model_name(k), {}, false};
        for (std::size_t h = 1; h <= g; ++h) s.points.emplace_back(double(h), model_posterior(state, h).probability(k));
        prob_series.push_back(std::move(s));
    }
    out.write("model_probabilities.svg", svg_plot("Model probabilities", "population", "P(M|y)", prob_series));

    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& s : d.samples) lo = std::min(lo, s.speed), hi = std::max(hi, s.speed);
    const auto speeds = linspace(lo, hi, 200);
    std::ostringstream cov;
    cov << "model,validation_points,inside,fraction\n";
    for (std::size_t i = 0; i < fits.size(); ++i) {
        const auto k = fits[i].model.kind();
        const auto& prior = state.priors[i];
        const auto mp = model_posterior(state, g);
        const auto count = mp.counts[static_cast<std::size_t>(model_index(k) - 1)];
        const auto name = model_name(k);
        if (count >= 2) {
            const auto stats = posterior_stats(state, g, prior, c.bins);
            out.write("marginals_" + name + ".csv", marginals_csv(stats));
            out.write("correlation_" + name + ".csv", correlation_csv(stats));
        }
        if (count >= 50) {
            const auto env = predictive_envelope(state, g, k, speeds, c.coverage, r);
            out.write("envelope_" + name + ".csv", envelope_csv(env));
            SvgSeries low{"low", {}, false}, med{"median", {}, false}, high{"high", {}, false};
            SvgSeries cal{"calibration", {}, true}, val{"validation", {}, true};
            for (const auto& e : env) {
                low.points.emplace_back(e.speed, e.low);
                med.points.emplace_back(e.speed, e.median);
                high.points.emplace_back(e.speed, e.high);
            }
            for (const auto& s : d.samples) {
                (s.split == Split::Calibration ? cal : val).points.emplace_back(s.speed, s.torque);
            }
            out.write("envelope_" + name + ".svg",
                      svg_plot(name + " predictive envelope", "bit speed (rad/s)", "torque (kN m)",
                               {low, med, high, cal, val}));
            const auto validation = d.validation();
            std::vector<double> vs;
            for (const auto& s : validation) vs.push_back(s.speed);
            const auto venv = predictive_envelope(state, g, k, vs, c.coverage, r);
            std::size_t inside = 0;
            for (std::size_t j = 0; j < validation.size(); ++j) {
                inside += (validation[j].torque >= venv[j].low && validation[j].torque <= venv[j].high) ? 1 : 0;
            }
            cov << name << ',' << validation.size() << ',' << inside << ','
                << format_double(validation.empty() ? 0.0 : double(inside) / double(validation.size())) << '\n';
        }
    }
    out.write("envelope_coverage.csv", cov.str());
}

void run_abc(const AbcConfig& c, Outputs& out, Json& info, std::ostream& log) {
    const auto d = load(c.data, c.speed_unit);
    const auto r = ratio_for(d, c.wob);
    const auto kinds = model_list(c.models);
    const auto fits = fit_models(d, r, kinds, 1, 0.1, c.seed);
    out.write("fits.csv", fit_table(fits));

    const auto priors = build_priors(fits, c.delta);
    ModelPrior mp;
    mp.probability.fill(0.0);
    for (auto k : kinds) mp.probability[static_cast<std::size_t>(model_index(k) - 1)] = 1.0 / double(kinds.size());
    double sum = 0.0;
    for (double p : mp.probability) sum += p;
    // Put any rounding residue on the first listed model so the prior sums to 1.
    mp.probability[static_cast<std::size_t>(model_index(kinds.front()) - 1)] += 1.0 - sum;

    AbcOptions opt;
    opt.n = c.n;
    opt.eps_floor = c.eps_floor;
    opt.max_populations = c.max_populations;
    opt.seed = c.seed;
    opt.stall_rate = c.stall_rate;
    opt.stall_window = c.stall_window;

    try {
        const auto state = run(d, r, priors, mp, opt);
        write_abc_bundle(state, fits, d, c, r, out, info);
        info["status"] = "ok";
        log << "populations: " << state.populations.size() << ", final P(M|y):";
        const auto post = model_posterior(state, state.populations.size());
        for (auto k : kAllModels) log << ' ' << model_name(k) << '=' << format_double(post.probability(k));
        log << '\n';
    } catch (const AbcStallError& e) {
        write_abc_bundle(e.partial(), fits, d, c, r, out, info);
        info["status"] = "stalled";
        info["stall_tolerance"] = e.tolerance();
        throw;
    }
}

StabilityMap run_one_map(const BitRockModel& m, const Plant& plant, const GridSpec& spec, const std::string& src) {
    return map_deterministic(m, plant, spec, src);
}

std::vector<std::pair<double, double>> rpm_kn(const BoundaryCurve& b) {
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < b.points.size(); ++i) {
        const auto& p = b.points[i];
        if (i > 0 && p.branch != b.points[i - 1].branch) pts.emplace_back(NAN, NAN);
        pts.emplace_back(rad_per_sec_to_rpm(p.omega), p.wob);
    }
    return pts;
}

void run_map(const MapConfig& c, Outputs& out, Json& info, std::ostream& log) {
    const Plant plant = c.plant == "lumped"
                            ? Plant(from_modal(c.i_eq, c.omega_n, c.xi))
                            : Plant(assemble(DrillStringGeometry::field_string(), c.n_dp, c.n_bha, c.alpha, c.beta));
    GridSpec spec;
    spec.omega_min = c.omega_min;
    spec.omega_max = c.omega_max;
    spec.wob_min = c.wob_min_ratio * c.w_ref;
    spec.wob_max = c.wob_max_ratio * c.w_ref;
    spec.w_ref = c.w_ref;
    spec.n_omega = c.n_omega;
    spec.n_wob = c.n_wob;

    const auto kinds = model_list(c.models);
    std::vector<BitRockModel> models;
    if (c.params_from == "paper") {
        for (auto k : kinds) models.push_back(published_estimate(k));
    } else {
        const auto fitted = read_fit_table(c.fit_file);
        for (auto k : kinds) {
            const auto it = std::find_if(fitted.begin(), fitted.end(), [&](const auto& m) { return m.kind() == k; });
            if (it == fitted.end()) throw DataError(c.fit_file + " has no row for " + model_name(k));
            models.push_back(*it);
        }
    }

    std::vector<SvgSeries> det_series;
    Json boundaries = Json::object();
    for (const auto& m : models) {
        const auto name = model_name(m.kind());
        const auto map = run_one_map(m, plant, spec, name);
        out.write("grid_" + name + ".csv", grid_csv(map.grid));
        out.write("boundary_" + name + ".csv", boundary_csv(map.boundary, spec.w_ref));
        det_series.push_back({name, rpm_kn(map.boundary), false});
        boundaries[name] = {{"points", map.boundary.points.size()},
                            {"monotone", map.boundary.monotone},
                            {"multivalued", map.boundary.multivalued}};
        log << name << ": " << map.boundary.points.size() << " boundary points"
            << (map.boundary.multivalued ? " (multi-valued)" : "") << '\n';
    }
    out.write("map_deterministic.svg",
              svg_plot("Stability boundaries", "table speed (RPM)", "weight on bit (kN)", det_series));
    info["boundaries"] = boundaries;

    if (c.abc_dir.empty()) return;
    const fs::path abc(c.abc_dir);
    const auto abc_manifest = Json::parse(read_text(abc / "manifest.json"));
    const auto total = abc_manifest.at("result").at("populations").get<std::uint64_t>();
    const auto g = c.population == 0 ? total : c.population;
    if (g < 1 || g > total) throw ConfigError("population " + std::to_string(g) + " not in " + c.abc_dir);
    const auto particles = parse_population_csv(read_text(abc / ("population_" + std::to_string(g) + ".csv")));
    std::map<ModelKind, std::vector<BitRockModel>> sets;
    for (const auto& p : particles) sets[p.kind].push_back(BitRockModel::unvalidated(p.kind, p.phi));
    info["population"] = g;

    std::vector<SvgSeries> sto_series = det_series;
    for (auto k : kinds) {
        const auto name = model_name(k);
        const auto& set = sets[k];
        if (set.size() < 100) {
            log << name << ": " << set.size() << " particles, skipping stochastic map\n";
            continue;
        }
        const auto map = map_stochastic(set, plant, spec, c.percentile, name + " posterior");
        out.write("grid_" + name + "_stochastic.csv", grid_csv(map.grid));
        out.write("boundary_" + name + "_stochastic.csv", boundary_csv(map.boundary, spec.w_ref));
        sto_series.push_back({name + " P=" + format_double(c.percentile), rpm_kn(map.boundary), false});
    }
    if (!c.mixture.empty()) {
        std::vector<MixtureComponent> comps;
        for (const auto& [name, w] : c.mixture) comps.push_back({sets[model_arg(name)], w});
        const auto map = map_mixture(comps, plant, spec, c.percentile, "mixture");
        out.write("grid_mixture.csv", grid_csv(map.grid));
        out.write("boundary_mixture.csv", boundary_csv(map.boundary, spec.w_ref));
        sto_series.push_back({"mixture", rpm_kn(map.boundary), false});
    }
    out.write("map_stochastic.svg",
              svg_plot("Stochastic stability boundaries", "table speed (RPM)", "weight on bit (kN)", sto_series));
}

void run_fem_modes(const FemModesConfig& c, Outputs& out, Json& info, std::ostream& log) {
    const auto model = assemble(DrillStringGeometry::field_string(), c.n_dp, c.n_bha, c.alpha, c.beta);
    const auto modes = modal_properties(model);
    out.write("modes.csv", modes_csv(modes));
    log << "mode  omega_n (rad/s)  xi\n";
    for (std::size_t i = 0; i < modes.size(); ++i) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "%4zu  %15.4f  %.4f\n", i + 1, modes[i].omega_n, modes[i].xi);
        log << buf;
    }
    info["modes"] = modes.size();
}

}  // namespace

std::string command_name(const Config& config) {
    static const char* const names[] = {"gen-data", "fit", "abc", "map", "fem-modes"};
    return names[config.index()];
}

Json config_to_json(const Config& config) {
    return std::visit([](const auto& c) { return Json(c); }, config);
}

Config config_from_json(const std::string& command, const Json& json) {
    if (command == "gen-data") return strict_from_json<GenDataConfig>(json);
    if (command == "fit") return strict_from_json<FitConfig>(json);
    if (command == "abc") return strict_from_json<AbcConfig>(json);
    if (command == "map") return strict_from_json<MapConfig>(json);
    if (command == "fem-modes") return strict_from_json<FemModesConfig>(json);
    throw ConfigError("unknown command '" + command + "' (valid: gen-data, fit, abc, map, fem-modes)");
}

Config normalize(Config config) {
    std::visit(
        [](auto& c) {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, GenDataConfig>) {
                model_arg(c.model);
                require(c.params_from == "paper" || c.params_from == "explicit",
                        "--params-from must be 'paper' or 'explicit'");
                if (c.params_from == "explicit") {
                    try {
                        BitRockModel(model_arg(c.model), c.params);
                    } catch (const DomainError& e) {
                        throw ConfigError(e.what());
                    }
                } else {
                    require(c.params.empty(), "--params given with --params-from paper");
                }
                require(c.noise >= 0.0 && std::isfinite(c.noise), "--noise must be >= 0");
                require(c.wob > 0.0 && c.w_ref > 0.0, "--wob and --w-ref must be > 0");
                require(c.n_points >= 1, "--n-points must be >= 1");
                require(c.speed_min >= 0.0 && c.speed_max >= c.speed_min, "need 0 <= speed-min <= speed-max");
            } else if constexpr (std::is_same_v<T, FitConfig>) {
                require(!c.data.empty(), "--data is required");
                c.data = absolute_or_empty(c.data);
                speed_unit_arg(c.speed_unit);
                model_list(c.models);
                require(c.wob >= 0.0, "--wob must be >= 0");
                require(c.starts >= 1, "--starts must be >= 1");
                require(c.jitter >= 0.0, "--jitter must be >= 0");
            } else if constexpr (std::is_same_v<T, AbcConfig>) {
                require(!c.data.empty(), "--data is required");
                c.data = absolute_or_empty(c.data);
                speed_unit_arg(c.speed_unit);
                model_list(c.models);
                require(c.wob >= 0.0, "--wob must be >= 0");
                require(c.delta > 0.0 && c.delta < 1.0, "--delta must lie in (0, 1)");
                require(c.n >= 1, "--n must be >= 1");
                require(c.eps_floor > 0.0, "--eps-floor must be > 0");
                require(c.max_populations >= 1, "--max-populations must be >= 1");
                require(c.stall_rate >= 0.0 && c.stall_window >= 1, "bad stall settings");
                require(c.coverage >= 0.0 && c.coverage <= 1.0, "--coverage must lie in [0, 1]");
                require(c.bins >= 1, "--bins must be >= 1");
            } else if constexpr (std::is_same_v<T, MapConfig>) {
                require(c.plant == "lumped" || c.plant == "fem", "--plant must be 'lumped' or 'fem'");
                require(c.i_eq > 0.0 && c.omega_n > 0.0 && c.xi > 0.0, "lumped parameters must be > 0");
                require(c.n_dp >= 1 && c.n_bha >= 1, "element counts must be >= 1");
                require(c.alpha >= 0.0 && c.beta >= 0.0, "damping coefficients must be >= 0");
                model_list(c.models);
                require(c.params_from == "paper" || c.params_from == "fit", "--params-from must be 'paper' or 'fit'");
                require(c.params_from == "paper" || !c.fit_file.empty(), "--params-from fit needs --fit-file");
                c.fit_file = absolute_or_empty(c.fit_file);
                c.abc_dir = absolute_or_empty(c.abc_dir);
                require(c.percentile > 0.0 && c.percentile < 1.0, "--percentile must lie in (0, 1)");
                require(c.mixture.empty() || !c.abc_dir.empty(), "--mixture needs --abc-dir");
                for (const auto& [name, w] : c.mixture) {
                    model_arg(name);
                    require(w >= 0.0, "mixture weights must be >= 0");
                }
                require(c.omega_min > 0.0 && c.omega_max > c.omega_min, "need 0 < omega-min < omega-max");
                require(c.wob_min_ratio > 0.0 && c.wob_max_ratio > c.wob_min_ratio, "need 0 < wob ratio range");
                require(c.w_ref > 0.0, "--w-ref must be > 0");
                require(c.n_omega >= 2 && c.n_wob >= 2, "grid resolution must be >= 2");
            } else {
                require(c.n_dp >= 1 && c.n_bha >= 1, "element counts must be >= 1");
                require(c.alpha >= 0.0 && c.beta >= 0.0, "damping coefficients must be >= 0");
            }
        },
        config);
    return config;
}

RunResult execute(const Config& raw, const fs::path& out_dir, std::ostream& log) {
    const Config config = normalize(raw);
    const auto start = std::chrono::steady_clock::now();
    Outputs out(out_dir);
    Json info = Json::object();

    RunResult result;
    auto finish = [&](const std::string& status) {
        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        Json m;
        m["tool"] = "drillabc";
        m["version"] = kToolVersion;
        m["command"] = command_name(config);
        m["config"] = config_to_json(config);
        m["threads"] = omp_get_max_threads();
        m["status"] = status;
        m["wall_time_s"] = wall;
        m["outputs"] = out.names();
        m["result"] = info;
        write_text(out.dir() / "manifest.json", m.dump(2) + "\n");
        result.outputs = out.names();
        result.manifest = m;
    };

    try {
        std::visit(
            [&](const auto& c) {
                using T = std::decay_t<decltype(c)>;
                if constexpr (std::is_same_v<T, GenDataConfig>) run_gen_data(c, out, info, log);
                else if constexpr (std::is_same_v<T, FitConfig>) run_fit(c, out, info, log);
                else if constexpr (std::is_same_v<T, AbcConfig>) run_abc(c, out, info, log);
                else if constexpr (std::is_same_v<T, MapConfig>) run_map(c, out, info, log);
                else run_fem_modes(c, out, info, log);
            },
            config);
    } catch (const std::exception& e) {
        finish(info.contains("status") ? info["status"].get<std::string>() : "failed");
        throw;
    }
    info.erase("status");
    finish("ok");
    return result;
}

RunResult rerun(const fs::path& manifest, const fs::path& out_dir, std::ostream& log) {
    Json m;
    try {
        m = Json::parse(read_text(manifest));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("cannot parse manifest " + manifest.string() + ": " + e.what());
    }
    static const std::set<std::string> known{"tool",   "version",     "command", "config", "threads",
                                             "status", "wall_time_s", "outputs", "result"};
    for (const auto& [key, value] : m.items()) {
        if (!known.count(key)) throw ConfigError("unknown manifest key '" + key + "'");
    }
    if (!m.contains("command") || !m.contains("config")) throw ConfigError("manifest lacks command or config");
    return execute(config_from_json(m["command"].get<std::string>(), m["config"]), out_dir, log);
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const DomainError*>(&e)) return 2;
    if (dynamic_cast<const NumericError*>(&e)) return 3;
    if (dynamic_cast<const DataError*>(&e) || dynamic_cast<const InsufficientSampleError*>(&e)) return 4;
    if (dynamic_cast<const std::filesystem::filesystem_error*>(&e)) return 4;
    return 1;
}

}  // namespace drillabc::cli
