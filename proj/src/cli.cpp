#include "ergoid/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "ergoid/config.hpp"
#include "ergoid/errors.hpp"
#include "ergoid/experiments.hpp"
#include "ergoid/format.hpp"
#include "ergoid/report.hpp"
#include "ergoid/seeding.hpp"
#include "ergoid/sensing.hpp"

namespace ergoid {

namespace {

namespace fs = std::filesystem;

/// Flags shared by every subcommand.
struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::size_t> threads;
    std::string format = "csv";
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config, "TOML configuration file")->check(CLI::ExistingFile);
    cmd->add_option("--seed", c.seed, "Master seed (overrides the configuration)");
    cmd->add_option("--out", c.out, "Output directory");
    cmd->add_option("--threads", c.threads, "Worker threads, 0 = all cores");
    cmd->add_option("--format", c.format, "Result format")->check(CLI::IsMember({"csv", "json"}));
}

ExperimentConfig resolve_config(const Common& c) {
    ExperimentConfig cfg = c.config.empty() ? ExperimentConfig{} : load_config(c.config);
    if (c.seed) cfg.seed = *c.seed;
    if (c.out) cfg.output = *c.out;
    if (c.threads) cfg.threads = *c.threads;
    return cfg;
}

fs::path prepare_dir(const std::string& dir) {
    fs::path p(dir);
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec) throw ExperimentError("cannot create output directory " + dir + ": " + ec.message());
    return p;
}

template <class Writer>
void write_file(const fs::path& path, Writer&& writer) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ExperimentError("cannot open " + path.string() + " for writing");
    writer(os);
    os.flush();
    if (!os) throw ExperimentError("failed writing " + path.string());
}

void write_json(const fs::path& path, const nlohmann::json& j) {
    write_file(path, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
}

nlohmann::json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot read " + path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw UsageError("malformed JSON in " + path + ": " + e.what());
    }
}

void write_coefficients_csv(std::ostream& os, const TrigPoly* truth, const CVector& estimate,
                            const FrequencySet& freqs) {
    os << (truth ? "freq,re,im,true_re,true_im\n" : "freq,re,im\n");
    for (std::size_t i = 0; i < freqs.size(); ++i) {
        const int n = freqs.frequency(i);
        const cplx a = estimate(static_cast<Eigen::Index>(i));
        os << n << ',' << format_double(a.real()) << ',' << format_double(a.imag());
        if (truth) {
            const cplx t = truth->coeff(n);
            os << ',' << format_double(t.real()) << ',' << format_double(t.imag());
        }
        os << '\n';
    }
}

// ---- simulate ---------------------------------------------------------------

struct SimulateArgs {
    Common common;
    std::string map_file;
    std::optional<std::size_t> sparsity;
    std::optional<int> nmax;
    std::optional<double> dc;
    std::optional<double> budget;
    std::optional<double> x0;
    std::optional<std::size_t> burn_in;
    std::optional<std::size_t> length;
    std::optional<std::size_t> bins;
};

int run_simulate(const SimulateArgs& a, std::ostream& out) {
    auto cfg = resolve_config(a.common);
    if (a.nmax) cfg.max_freq = *a.nmax;
    if (a.dc) cfg.dc_value = *a.dc;
    if (a.budget) cfg.amplitude_budget = *a.budget;
    if (a.burn_in) cfg.burn_in = *a.burn_in;
    if (a.length) cfg.density_length = *a.length;
    if (a.bins) cfg.density_bins = *a.bins;

    const TrigPoly map = a.map_file.empty()
                             ? random_sparse_map(a.sparsity.value_or(cfg.sparsity.front()), FrequencySet(cfg.max_freq),
                                                 cfg.dc_value, cfg.amplitude_budget, derive_seed(cfg.seed, 0))
                             : trigpoly_from_json(read_json(a.map_file));
    double x0 = 0.0;
    if (a.x0) {
        x0 = *a.x0;
    } else {
        std::mt19937_64 rng(derive_seed(cfg.seed, 1));
        x0 = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    }
    const auto traj = simulate(map, x0, cfg.burn_in, cfg.density_length);
    const auto est = estimate_density(traj, cfg.density_bins);

    const auto dir = prepare_dir(cfg.output);
    write_json(dir / "map.json", to_json(map));
    if (a.common.format == "json") {
        nlohmann::json j{{"x0", traj.x0},
                         {"burn_in", traj.burn_in_discarded},
                         {"states", traj.states},
                         {"density", est.densities()},
                         {"xi_h", density_lower_bound(est)}};
        write_json(dir / "simulation.json", j);
    } else {
        write_file(dir / "trajectory.csv", [&](std::ostream& os) { write_trajectory_csv(os, traj); });
        write_file(dir / "density.csv", [&](std::ostream& os) { write_density_csv(os, est); });
    }
    out << "simulated " << traj.states.size() << " states, xi_h = " << format_double(density_lower_bound(est))
        << ", written to " << dir.string() << '\n';
    return exit_ok;
}

// ---- identify ---------------------------------------------------------------

struct IdentifyArgs {
    Common common;
    std::string observations;
    std::optional<std::size_t> sparsity;
    std::optional<std::size_t> samples;
    std::optional<double> sigma;
    std::optional<double> lambda;
    std::optional<int> nmax;
};

int run_identify(const IdentifyArgs& a, std::ostream& out) {
    auto cfg = resolve_config(a.common);
    if (a.nmax) cfg.max_freq = *a.nmax;
    if (a.lambda) cfg.lambda = *a.lambda;
    const FrequencySet freqs(cfg.max_freq);
    const auto dir = prepare_dir(cfg.output);

    if (!a.observations.empty()) {
        if (!a.sigma && !cfg.lambda) throw UsageError("identify from observations needs --sigma or --lambda");
        std::ifstream in(a.observations);
        if (!in) throw UsageError("cannot read " + a.observations);
        auto obs = read_observations_csv(in);
        obs.noise_sigma = a.sigma.value_or(0.0);
        const auto sol = identify_from_observations(obs, cfg);
        if (a.common.format == "json") {
            write_json(dir / "solution.json", to_json(sol, freqs));
        } else {
            write_file(dir / "coefficients.csv",
                       [&](std::ostream& os) { write_coefficients_csv(os, nullptr, sol.coeffs, freqs); });
        }
        out << "lambda = " << format_double(sol.lambda) << ", support size " << support_of(sol.coeffs).size()
            << ", kkt residual " << format_double(sol.kkt_residual) << (sol.converged ? "" : " (not converged)")
            << '\n';
        return exit_ok;
    }

    CellSpec cell{a.sparsity.value_or(cfg.sparsity.front()), a.samples.value_or(cfg.samples.front()),
                  a.sigma.value_or(cfg.sigma.front())};
    cfg.validate();
    const auto result = run_identification(cfg, cell, trial_seed(cfg.seed, 0, 0));
    if (a.common.format == "json") {
        write_json(dir / "identify.json", to_json(result));
    } else {
        write_file(dir / "identify.csv", [&](std::ostream& os) { write_trials_csv(os, {result}); });
        write_file(dir / "coefficients.csv",
                   [&](std::ostream& os) { write_coefficients_csv(os, &*result.map, result.solution.coeffs, freqs); });
    }
    out << "l1 error " << format_double(result.l1_error) << ", support "
        << (result.support_recovered ? "recovered" : "not recovered") << ", xi_h " << format_double(result.xi_h)
        << '\n';
    return exit_ok;
}

// ---- certify ----------------------------------------------------------------

struct CertifyArgs {
    Common common;
    std::string density;
    std::string density_csv;
    std::string map_file;
    std::optional<int> nmax;
    CertifyOptions opts;
};

int run_certify(const CertifyArgs& a, std::ostream& out) {
    auto cfg = resolve_config(a.common);
    if (a.nmax) cfg.max_freq = *a.nmax;
    const FrequencySet freqs(cfg.max_freq);
    const int sources = !a.density.empty() + !a.density_csv.empty() + !a.map_file.empty();
    if (sources != 1) throw UsageError("certify needs exactly one of --density, --density-csv, --map");

    CMatrix v;
    double xi_h = 0.0;
    if (!a.density.empty()) {
        // Only the uniform density has a closed form here.
        v = covariance_from_density([](int m) { return m == 0 ? cplx{1.0, 0.0} : cplx{}; }, freqs).V;
        xi_h = 1.0;
    } else {
        std::optional<DensityEstimate> est;
        if (!a.density_csv.empty()) {
            std::ifstream in(a.density_csv);
            if (!in) throw UsageError("cannot read " + a.density_csv);
            est = read_density_csv(in);
        } else {
            const auto map = trigpoly_from_json(read_json(a.map_file));
            std::mt19937_64 rng(derive_seed(cfg.seed, 1));
            const double x0 = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
            est = estimate_density(simulate(map, x0, cfg.burn_in, cfg.density_length), cfg.density_bins);
        }
        v = covariance_from_density(*est, freqs).V;
        xi_h = density_lower_bound(*est);
    }

    auto opts = a.opts;
    opts.seed = cfg.seed;
    opts.c2 = cfg.c2;
    const auto report = to_json(certify_covariance(v, xi_h, opts));
    const auto dir = prepare_dir(cfg.output);
    write_json(dir / "certify.json", report);
    out << report.dump(2) << '\n';
    return exit_ok;
}

// ---- phase-diagram ------------------------------------------------------------

struct PhaseArgs {
    Common common;
    std::string fit;
};

int run_phase(const PhaseArgs& a, std::ostream& out) {
    const auto cfg = resolve_config(a.common);
    std::optional<FitAxis> axis;
    if (!a.fit.empty()) axis = parse_fit_axis(a.fit);
    const auto pd = run_phase_diagram(cfg);
    const auto dir = prepare_dir(cfg.output);
    if (a.common.format == "json") {
        nlohmann::json trials = nlohmann::json::array();
        for (const auto& t : pd.trials) trials.push_back(to_json(t));
        nlohmann::json cells = nlohmann::json::array();
        for (const auto& c : pd.summaries) cells.push_back(to_json(c));
        write_json(dir / "trials.json", trials);
        write_json(dir / "cells.json", cells);
    } else {
        write_file(dir / "trials.csv", [&](std::ostream& os) { write_trials_csv(os, pd.trials); });
        write_file(dir / "cells.csv", [&](std::ostream& os) { write_cells_csv(os, pd.summaries); });
    }
    std::size_t failures = 0;
    for (const auto& c : pd.summaries) failures += c.failures;
    out << pd.trials.size() << " trials in " << pd.cells.size() << " cells (" << failures << " failed), written to "
        << dir.string() << '\n';
    if (axis) {
        const auto fit = fit_error_scaling(pd.summaries, *axis);
        nlohmann::json j{{"axis", to_string(fit.axis)},
                         {"slope", fit.slope},
                         {"intercept", fit.intercept},
                         {"half_width_95", fit.half_width},
                         {"points", fit.points}};
        write_json(dir / "fit.json", j);
        out << "slope along " << to_string(fit.axis) << ": " << format_double(fit.slope) << " +/- "
            << format_double(fit.half_width) << '\n';
    }
    return exit_ok;
}

}  // namespace

void configure_logging() {
    auto logger = spdlog::get("ergoid");
    if (!logger) {
        logger = spdlog::stderr_color_mt("ergoid");
        spdlog::set_default_logger(logger);
    }
    auto level = spdlog::level::warn;
    if (const char* env = std::getenv("ERGOID_LOG")) {
        const std::string name(env);
        if (name == "error" || name == "warn" || name == "info" || name == "debug") {
            level = spdlog::level::from_str(name);
        }
    }
    spdlog::set_level(level);
}

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    configure_logging();
    CLI::App app{"Recover sparse circle maps from a single trajectory"};
    app.name(args.empty() ? "ergoid" : args.front());
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* sim_cmd = app.add_subcommand("simulate", "Iterate a map and write its trajectory and density");
    add_common(sim_cmd, sim.common);
    sim_cmd->add_option("--map", sim.map_file, "Map JSON (default: draw one from the generator)")
        ->check(CLI::ExistingFile);
    sim_cmd->add_option("--sparsity", sim.sparsity, "Generator sparsity s (odd)");
    sim_cmd->add_option("--nmax", sim.nmax, "Largest frequency");
    sim_cmd->add_option("--dc", sim.dc, "Generator DC value");
    sim_cmd->add_option("--budget", sim.budget, "Generator amplitude budget");
    sim_cmd->add_option("--x0", sim.x0, "Initial state");
    sim_cmd->add_option("--burn-in", sim.burn_in, "Discarded iterations");
    sim_cmd->add_option("--length", sim.length, "Kept iterations");
    sim_cmd->add_option("--bins", sim.bins, "Histogram bins");

    IdentifyArgs id;
    auto* id_cmd = app.add_subcommand("identify", "Recover a map, end to end or from an observation CSV");
    add_common(id_cmd, id.common);
    id_cmd->add_option("--observations", id.observations, "CSV with columns x,y")->check(CLI::ExistingFile);
    id_cmd->add_option("--sparsity", id.sparsity, "Sparsity s of the generated map");
    id_cmd->add_option("--samples", id.samples, "Number of observations M");
    id_cmd->add_option("--sigma", id.sigma, "Noise level sigma");
    id_cmd->add_option("--lambda", id.lambda, "Explicit Lasso parameter");
    id_cmd->add_option("--nmax", id.nmax, "Largest frequency");

    CertifyArgs cert;
    auto* cert_cmd = app.add_subcommand("certify", "Check the recovery conditions for a density");
    add_common(cert_cmd, cert.common);
    cert_cmd->add_option("--density", cert.density, "Closed-form density")->check(CLI::IsMember({"uniform"}));
    cert_cmd->add_option("--density-csv", cert.density_csv, "Histogram CSV from simulate")
        ->check(CLI::ExistingFile);
    cert_cmd->add_option("--map", cert.map_file, "Map JSON; its histogram is estimated")->check(CLI::ExistingFile);
    cert_cmd->add_option("--nmax", cert.nmax, "Largest frequency");
    cert_cmd->add_option("--sparsity", cert.opts.sparsity, "s for the sample-size bound and RE estimate");
    cert_cmd->add_option("--max-s", cert.opts.max_s, "Largest s in the rho_min table");
    cert_cmd->add_option("--p", cert.opts.p, "Cone parameter p");
    cert_cmd->add_option("--delta", cert.opts.delta, "delta of the ell formula");
    cert_cmd->add_option("--kappa-samples", cert.opts.kappa_samples, "Monte-Carlo samples for kappa");

    PhaseArgs ph;
    auto* ph_cmd = app.add_subcommand("phase-diagram", "Run the (s, M, sigma) grid from the configuration");
    add_common(ph_cmd, ph.common);
    ph_cmd->add_option("--fit", ph.fit, "Fit the log-log error slope along M, sigma or s")
        ->check(CLI::IsMember({"M", "sigma", "s"}));

    std::vector<const char*> argv;
    for (const auto& s : args) argv.push_back(s.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_usage;
    }

    try {
        if (sim_cmd->parsed()) return run_simulate(sim, out);
        if (id_cmd->parsed()) return run_identify(id, out);
        if (cert_cmd->parsed()) return run_certify(cert, out);
        if (ph_cmd->parsed()) return run_phase(ph, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_failure;
    }
    return exit_usage;
}

int cli_main(int argc, const char* const* argv) {
    std::vector<std::string> args(argv, argv + argc);
    return cli_main(args, std::cout, std::cerr);
}

}  // namespace ergoid
