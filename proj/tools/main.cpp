#include "commands.hpp"

#include <CLI11.hpp>
#include <omp.h>

#include <iostream>

using namespace drillabc::cli;

namespace {

std::map<std::string, double> parse_mixture(const std::string& text) {
    std::map<std::string, double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw ConfigError("--mixture expects model=weight pairs, got '" + item + "'");
        try {
            std::size_t used = 0;
            const double w = std::stod(item.substr(eq + 1), &used);
            if (used != item.size() - eq - 1) throw std::invalid_argument(item);
            out[item.substr(0, eq)] = w;
        } catch (const std::logic_error&) {
            throw ConfigError("--mixture: bad weight in '" + item + "'");
        }
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bit-rock model calibration, ABC model selection and torsional stability maps"};
    app.require_subcommand(1);

    std::string out_dir = "out";
    int threads = 0;
    app.add_option("--out-dir,-o", out_dir, "Output directory")->capture_default_str();
    app.add_option("--threads", threads, "Worker threads (0: all available)")->check(CLI::NonNegativeNumber);

    GenDataConfig gen;
    auto* g = app.add_subcommand("gen-data", "Synthetic torque-vs-speed dataset");
    g->add_option("--model", gen.model, "m1..m4")->capture_default_str();
    g->add_option("--params-from", gen.params_from, "paper | explicit")->capture_default_str();
    g->add_option("--params", gen.params, "Comma-separated parameters (with --params-from explicit)")->delimiter(',');
    g->add_option("--noise", gen.noise, "Noise standard deviation, kN m")->capture_default_str();
    g->add_option("--seed", gen.seed)->capture_default_str();
    g->add_option("--wob", gen.wob, "Weight on bit, kN")->capture_default_str();
    g->add_option("--w-ref", gen.w_ref, "Reference weight on bit, kN")->capture_default_str();
    g->add_option("--n-points", gen.n_points)->capture_default_str();
    g->add_option("--speed-min", gen.speed_min, "rad/s")->capture_default_str();
    g->add_option("--speed-max", gen.speed_max, "rad/s")->capture_default_str();

    FitConfig fit;
    auto* f = app.add_subcommand("fit", "Least-squares fit of the bit-rock models");
    f->add_option("--data", fit.data)->required();
    f->add_option("--speed-unit", fit.speed_unit, "rad_s | rpm")->capture_default_str();
    f->add_option("--models", fit.models)->delimiter(',');
    f->add_option("--wob", fit.wob, "Weight on bit of the data, kN (default: the file's w_ref)");
    f->add_option("--starts", fit.starts)->capture_default_str();
    f->add_option("--jitter", fit.jitter)->capture_default_str();
    f->add_option("--seed", fit.seed)->capture_default_str();

    AbcConfig abc;
    auto* a = app.add_subcommand("abc", "ABC rejection sampling with model selection");
    a->add_option("--data", abc.data)->required();
    a->add_option("--speed-unit", abc.speed_unit, "rad_s | rpm")->capture_default_str();
    a->add_option("--models", abc.models)->delimiter(',');
    a->add_option("--wob", abc.wob, "Weight on bit of the data, kN (default: the file's w_ref)");
    a->add_option("--delta", abc.delta, "Prior half-width factor")->capture_default_str();
    a->add_option("--n", abc.n, "Particles per population")->capture_default_str();
    a->add_option("--eps-floor", abc.eps_floor)->capture_default_str();
    a->add_option("--max-populations", abc.max_populations)->capture_default_str();
    a->add_option("--seed", abc.seed)->capture_default_str();
    a->add_option("--stall-rate", abc.stall_rate)->capture_default_str();
    a->add_option("--stall-window", abc.stall_window)->capture_default_str();
    a->add_option("--coverage", abc.coverage, "Envelope coverage")->capture_default_str();
    a->add_option("--bins", abc.bins)->capture_default_str();

    MapConfig map;
    std::string mixture;
    auto* m = app.add_subcommand("map", "Stability maps over table speed and weight on bit");
    m->add_option("--plant", map.plant, "lumped | fem")->capture_default_str();
    m->add_option("--i-eq", map.i_eq)->capture_default_str();
    m->add_option("--omega-n", map.omega_n)->capture_default_str();
    m->add_option("--xi", map.xi)->capture_default_str();
    m->add_option("--n-dp", map.n_dp)->capture_default_str();
    m->add_option("--n-bha", map.n_bha)->capture_default_str();
    m->add_option("--alpha", map.alpha)->capture_default_str();
    m->add_option("--beta", map.beta)->capture_default_str();
    m->add_option("--models", map.models)->delimiter(',');
    m->add_option("--params-from", map.params_from, "paper | fit")->capture_default_str();
    m->add_option("--fit-file", map.fit_file, "fit.csv from the fit command");
    m->add_option("--abc-dir", map.abc_dir, "Output directory of an abc run");
    m->add_option("--population", map.population, "Population to use (0: last)")->capture_default_str();
    m->add_option("--percentile", map.percentile)->capture_default_str();
    m->add_option("--mixture", mixture, "Weights such as m2=0.4,m3=0.6");
    m->add_option("--omega-min", map.omega_min, "rad/s")->capture_default_str();
    m->add_option("--omega-max", map.omega_max, "rad/s")->capture_default_str();
    m->add_option("--wob-min-ratio", map.wob_min_ratio)->capture_default_str();
    m->add_option("--wob-max-ratio", map.wob_max_ratio)->capture_default_str();
    m->add_option("--w-ref", map.w_ref, "kN")->capture_default_str();
    m->add_option("--n-omega", map.n_omega)->capture_default_str();
    m->add_option("--n-wob", map.n_wob)->capture_default_str();

    FemModesConfig fem;
    auto* e = app.add_subcommand("fem-modes", "Natural frequencies and damping ratios of the FE model");
    e->add_option("--n-dp", fem.n_dp)->capture_default_str();
    e->add_option("--n-bha", fem.n_bha)->capture_default_str();
    e->add_option("--alpha", fem.alpha)->capture_default_str();
    e->add_option("--beta", fem.beta)->capture_default_str();

    std::string manifest;
    auto* r = app.add_subcommand("rerun", "Repeat a run from its manifest.json");
    r->add_option("manifest", manifest)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? 0 : 2;
    }

    try {
        if (threads > 0) omp_set_num_threads(threads);
        if (*r) {
            rerun(manifest, out_dir, std::cout);
            return 0;
        }
        Config config;
        if (*g) config = gen;
        else if (*f) config = fit;
        else if (*a) config = abc;
        else if (*e) config = fem;
        else {
            if (!mixture.empty()) map.mixture = parse_mixture(mixture);
            config = map;
        }
        execute(config, out_dir, std::cout);
        return 0;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return exit_code_for(ex);
    }
}
