// Acceptance run: one PASS/FAIL line per criterion.
//
// Exit status is 1 when any criterion fails. With --report it is 0 as long
// as every selected criterion was evaluated, so the run can sit in ctest
// while a criterion is known to be red.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ergoid/cli.hpp"
#include "ergoid/config.hpp"
#include "ergoid/dynamics.hpp"
#include "ergoid/errors.hpp"
#include "ergoid/experiments.hpp"
#include "ergoid/format.hpp"
#include "ergoid/lasso.hpp"
#include "ergoid/seeding.hpp"
#include "ergoid/sensing.hpp"
#include "ergoid/spectra.hpp"

using namespace ergoid;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int digits = 4) {
    std::ostringstream os;
    os.precision(digits);
    os << v;
    return os.str();
}

struct Verdict {
    int id;
    bool pass;
    std::string detail;
};

/// Shared state for the solver and normalization criteria, which audit the
/// systems and solutions produced by the other suites.
struct Audit {
    std::size_t solves = 0;
    std::size_t converged = 0;
    double worst_converged_kkt = 0.0;
    std::size_t instrumented = 0;
    std::size_t sweeps_checked = 0;
    std::size_t monotone_violations = 0;
    double largest_raw_increase = 0.0;
    std::size_t systems = 0;
    double worst_diag_deviation = 0.0;

    void solution(const LassoSolution& sol) {
        ++solves;
        if (sol.converged) {
            ++converged;
            worst_converged_kkt = std::max(worst_converged_kkt, sol.kkt_residual);
        }
    }

    void system(const MeasurementSystem& sys) {
        ++systems;
        const CMatrix gram = empirical_gram(sys);
        for (Eigen::Index i = 0; i < gram.rows(); ++i) {
            worst_diag_deviation = std::max(worst_diag_deviation, std::abs(gram(i, i) - cplx{1.0, 0.0}));
        }
    }

    /// Objective must not increase between consecutive sweeps at the same
    /// lambda, up to a relative 1e-14 for rounding in the running residual.
    void trace(const LassoSolution& sol) {
        ++instrumented;
        for (std::size_t k = 1; k < sol.trace.size(); ++k) {
            const auto& prev = sol.trace[k - 1];
            const auto& cur = sol.trace[k];
            if (prev.lambda != cur.lambda) continue;
            ++sweeps_checked;
            const double rise = cur.objective - prev.objective;
            largest_raw_increase = std::max(largest_raw_increase, rise);
            if (rise > 1e-14 * std::max(1.0, std::abs(prev.objective))) ++monotone_violations;
        }
    }
};

/// Rebuilds every trial's system for the normalization audit and re-solves
/// the first `instrumented` trials of each cell with the objective trace on.
void audit_phase_diagram(const ExperimentConfig& cfg, const PhaseDiagram& pd, std::size_t instrumented, Audit& audit) {
    const FrequencySet freqs(cfg.max_freq);
    for (const auto& t : pd.trials) {
        if (t.failed) continue;
        audit.solution(t.solution);
        const auto inst = prepare_trial(cfg, t.cell, t.seed);
        const auto sys = build_measurement(inst.observations, freqs);
        audit.system(sys);
        if (t.trial_index < instrumented) {
            auto lc = solver_config(cfg, inst.lambda);
            lc.record_objective = true;
            audit.trace(solve_lasso(sys, lc));
        }
    }
}

std::size_t count_failures(const PhaseDiagram& pd) {
    return static_cast<std::size_t>(std::count_if(pd.trials.begin(), pd.trials.end(),
                                                  [](const TrialResult& t) { return t.failed; }));
}

// ---- 1: noiseless exact recovery -------------------------------------------

Verdict noiseless_recovery(std::uint64_t seed, std::size_t threads, Audit& audit) {
    ExperimentConfig cfg;
    cfg.seed = seed;
    cfg.threads = threads;
    cfg.max_freq = 15;
    cfg.dc_value = 0.5;
    cfg.amplitude_budget = 0.3;
    // With budget 0.3 every orbit stays inside [0.2, 0.8], so the full-circle
    // minimum density is 0 and the circle screen would reject every map.
    cfg.screen = ScreenRegion::orbit_hull;
    cfg.sparsity = {5};
    cfg.samples = {400};
    cfg.sigma = {0.0};
    cfg.trials = 100;
    cfg.validate();

    const auto t0 = Clock::now();
    const auto pd = run_phase_diagram(cfg);
    const double elapsed = seconds_since(t0);
    std::size_t ok = 0;
    std::size_t support_only = 0;
    for (const auto& t : pd.trials) {
        if (t.failed) continue;
        ok += t.success;
        support_only += t.support_recovered;
    }
    audit_phase_diagram(cfg, pd, 10, audit);
    const bool pass = ok >= 95 && elapsed < 300.0;
    return {1, pass,
            std::to_string(ok) + "/100 exact recoveries (need >= 95), support alone " + std::to_string(support_only) +
                ", " + std::to_string(count_failures(pd)) + " screen failures, " + fmt(elapsed, 3) +
                " s (limit 300 s)"};
}

// ---- 2: agreement with the l0 oracle -----------------------------------------

Verdict l0_agreement(std::uint64_t seed, Audit& audit) {
    const FrequencySet freqs(4);
    // Uniform sampling has density 1, so xi_h = 1 in the sample-size bound.
    const std::size_t samples = sample_size_bound(2, freqs.size(), 1.0, 1.0);
    const auto t0 = Clock::now();
    std::size_t agree = 0;
    std::size_t oracle_is_truth = 0;
    constexpr std::size_t instances = 50;
    for (std::size_t t = 0; t < instances; ++t) {
        std::mt19937_64 rng(trial_seed(seed, 2, t));
        std::uniform_int_distribution<int> pick(1, 4);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        const int n = pick(rng);
        const cplx a = std::polar(0.1 + 0.4 * u(rng), two_pi * u(rng));
        const TrigPoly truth(freqs, {{n, a}, {-n, std::conj(a)}});
        ObservationSet obs;
        for (std::size_t m = 0; m < samples; ++m) {
            obs.x.push_back(u(rng));
            obs.y.push_back(truth(obs.x.back()).real());
        }
        const auto sys = build_measurement(obs, freqs);
        audit.system(sys);
        const auto oracle = l0_oracle(sys, 2);
        LassoConfig lc;
        lc.lambda = 1e-8;
        lc.record_objective = true;
        const auto sol = solve_lasso(sys, lc);
        audit.solution(sol);
        audit.trace(sol);
        agree += support_of(sol.coeffs, lc.lambda) == oracle.support;
        oracle_is_truth += oracle.support == support_of(truth.dense());
    }
    const double elapsed = seconds_since(t0);
    const bool pass = agree == instances && elapsed < 60.0;
    return {2, pass,
            std::to_string(agree) + "/50 supports agree (need 50) at M = " + std::to_string(samples) +
                ", l0 support equals truth in " + std::to_string(oracle_is_truth) + "/50, " + fmt(elapsed, 3) +
                " s (limit 60 s)"};
}

// ---- 3 and 4: covariance certificates ----------------------------------------

/// Histogram density with mean 1 and minimum exactly xi.
DensityEstimate random_density(std::mt19937_64& rng, double xi) {
    std::uniform_int_distribution<std::size_t> bins_dist(8, 64);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const std::size_t bins = bins_dist(rng);
    std::vector<double> w(bins);
    for (auto& v : w) v = u(rng);
    const double lowest = *std::min_element(w.begin(), w.end());
    double mean = 0.0;
    for (auto& v : w) mean += (v -= lowest);
    mean /= static_cast<double>(bins);
    std::vector<double> masses(bins);
    for (std::size_t b = 0; b < bins; ++b) {
        const double density = mean > 0.0 ? xi + (1.0 - xi) * w[b] / mean : 1.0;
        masses[b] = density / static_cast<double>(bins);
    }
    return DensityEstimate(std::move(masses), 0);
}

std::pair<Verdict, Verdict> certificates(std::uint64_t seed) {
    const FrequencySet wide(10);
    const FrequencySet narrow(5);
    std::size_t lemma1 = 0;
    std::size_t lemma2 = 0;
    double worst1 = std::numeric_limits<double>::infinity();
    double worst2 = std::numeric_limits<double>::infinity();
    constexpr std::size_t densities = 100;
    for (std::size_t t = 0; t < densities; ++t) {
        std::mt19937_64 rng(trial_seed(seed, 3, t));
        const double xi = std::uniform_real_distribution<double>(0.1, 1.0)(rng);
        const auto est = random_density(rng, xi);
        const double xi_h = density_lower_bound(est);

        const auto c1 = lemma1_certificate(covariance_from_density(est, wide).V, xi_h);
        lemma1 += c1.holds;
        worst1 = std::min(worst1, c1.lambda_min - xi_h);

        const CMatrix v = covariance_from_density(est, narrow).V;
        bool all = true;
        for (std::size_t s = 1; s <= 3; ++s) {
            const auto c2 = lemma2_certificate(v, xi_h, s);
            all = all && c2.holds;
            worst2 = std::min(worst2, c2.rho_min - xi_h);
        }
        lemma2 += all;
    }
    return {{3, lemma1 == densities,
             std::to_string(lemma1) + "/100 densities with lambda_min(V) >= xi_h - 1e-9 at N = 21, smallest margin " +
                 fmt(worst1)},
            {4, lemma2 == densities,
             std::to_string(lemma2) + "/100 densities with rho_min(s, V^1/2) >= xi_h - 1e-9 for s = 1..3 at N = 11, "
                                      "smallest margin " +
                 fmt(worst2)}};
}

// ---- 5 and 6: error scaling --------------------------------------------------

ExperimentConfig scaling_config(std::uint64_t seed, std::size_t threads) {
    ExperimentConfig cfg;
    cfg.seed = seed;
    cfg.threads = threads;
    cfg.sparsity = {3};
    cfg.trials = 50;
    return cfg;
}

std::string medians(const PhaseDiagram& pd) {
    std::string out;
    for (const auto& c : pd.summaries) out += (out.empty() ? "" : " ") + fmt(c.median_l1_error, 3);
    return out;
}

Verdict scaling_in_samples(std::uint64_t seed, std::size_t threads, Audit& audit) {
    auto cfg = scaling_config(seed, threads);
    cfg.samples = {256, 512, 1024, 2048, 4096};
    cfg.sigma = {0.05};
    cfg.validate();
    const auto t0 = Clock::now();
    const auto pd = run_phase_diagram(cfg);
    const double elapsed = seconds_since(t0);
    audit_phase_diagram(cfg, pd, 5, audit);
    const auto fit = fit_error_scaling(pd.summaries, FitAxis::samples);
    const bool pass = fit.slope >= -0.65 && fit.slope <= -0.35 && elapsed < 1800.0;
    return {5, pass,
            "slope " + fmt(fit.slope) + " +/- " + fmt(fit.half_width, 2) + " (need [-0.65, -0.35]), medians " +
                medians(pd) + ", " + std::to_string(count_failures(pd)) + " failed trials, " + fmt(elapsed, 3) +
                " s (limit 1800 s)"};
}

Verdict scaling_in_sigma(std::uint64_t seed, std::size_t threads, Audit& audit) {
    auto cfg = scaling_config(seed, threads);
    cfg.samples = {2048};
    cfg.sigma = {0.01, 0.02, 0.04, 0.08};
    cfg.validate();
    const auto pd = run_phase_diagram(cfg);
    audit_phase_diagram(cfg, pd, 5, audit);
    const auto fit = fit_error_scaling(pd.summaries, FitAxis::sigma);
    const bool pass = fit.slope >= 0.8 && fit.slope <= 1.2;
    return {6, pass,
            "slope " + fmt(fit.slope) + " +/- " + fmt(fit.half_width, 2) + " (need [0.8, 1.2]), medians " +
                medians(pd) + ", " + std::to_string(count_failures(pd)) + " failed trials"};
}

// ---- 9: restricted eigenvalue estimate ---------------------------------------

Verdict restricted_eigenvalue(std::uint64_t seed, Audit& audit) {
    ExperimentConfig cfg;
    cfg.seed = seed;
    cfg.max_freq = 15;
    cfg.screen = ScreenRegion::circle;
    // The screen accepts values strictly above the threshold; this admits xi_h = 0.3.
    cfg.xi_threshold = std::nextafter(0.3, 0.0);
    const FrequencySet freqs(cfg.max_freq);
    std::size_t ok = 0;
    double worst_ratio = 0.0;
    constexpr std::size_t trials = 100;
    for (std::size_t t = 0; t < trials; ++t) {
        const auto seed_t = trial_seed(seed, 9, t);
        // The trajectory length does not depend on M below the density
        // length, so both calls screen and accept the same map.
        const auto probe = prepare_trial(cfg, {3, 1, 0.0}, seed_t);
        const std::size_t samples = 4 * sample_size_bound(3, freqs.size(), probe.xi_h, 1.0);
        const auto inst = prepare_trial(cfg, {3, samples, 0.0}, seed_t);
        const auto sys = build_measurement(inst.observations, freqs);
        audit.system(sys);
        const CMatrix x = sys.matrix() / std::sqrt(static_cast<double>(samples));
        const auto est = re_estimate_monte_carlo(x, 3, 3.0, 2000, derive_seed(seed_t, 1));
        const double limit = 2.0 / std::sqrt(inst.xi_h);
        ok += est.kappa_estimate <= limit;
        worst_ratio = std::max(worst_ratio, est.kappa_estimate / limit);
    }
    return {9, ok >= 90,
            std::to_string(ok) + "/100 maps with kappa estimate <= 2 xi_h^-1/2 (need >= 90), largest kappa/limit " +
                fmt(worst_ratio)};
}

// ---- 10: determinism of the CLI ------------------------------------------------

bool same_files(const fs::path& a, const fs::path& b, std::size_t& compared) {
    std::set<std::string> names_a, names_b;
    for (const auto& e : fs::directory_iterator(a)) names_a.insert(e.path().filename().string());
    for (const auto& e : fs::directory_iterator(b)) names_b.insert(e.path().filename().string());
    if (names_a != names_b || names_a.empty()) return false;
    for (const auto& name : names_a) {
        std::ifstream fa(a / name, std::ios::binary), fb(b / name, std::ios::binary);
        const std::string ca((std::istreambuf_iterator<char>(fa)), {});
        const std::string cb((std::istreambuf_iterator<char>(fb)), {});
        if (ca != cb) return false;
        ++compared;
    }
    return true;
}

Verdict determinism(std::uint64_t seed) {
    const fs::path root = fs::temp_directory_path() / "ergoid_acceptance_determinism";
    fs::remove_all(root);
    fs::create_directories(root);
    {
        std::ofstream cfg(root / "grid.toml");
        cfg << "threads = 2\n[map]\nnmax = 6\n[dynamics]\ndensity_length = 20000\n"
               "[grid]\nsparsity = [3, 5]\nsamples = [128, 256]\nsigma = [0.0, 0.05]\ntrials = 3\n";
    }
    const std::string config = (root / "grid.toml").string();
    const std::string seed_arg = std::to_string(seed);
    std::ostringstream sink;
    bool ran = true;
    for (const char* run : {"a", "b"}) {
        const std::string out = (root / run).string();
        for (const std::string format : {"csv", "json"}) {
            ran = ran && cli_main({"ergoid", "identify", "--config", config, "--seed", seed_arg, "--sigma", "0.05",
                                   "--samples", "256", "--format", format, "--out", out + "/identify"},
                                  sink, sink) == exit_ok;
            ran = ran && cli_main({"ergoid", "phase-diagram", "--config", config, "--seed", seed_arg, "--format",
                                   format, "--out", out + "/phase-" + format},
                                  sink, sink) == exit_ok;
        }
    }
    std::size_t compared = 0;
    bool same = ran;
    for (const char* dir : {"identify", "phase-csv", "phase-json"}) {
        same = same && same_files(root / "a" / dir, root / "b" / dir, compared);
    }
    fs::remove_all(root);
    return {10, same,
            ran ? std::to_string(compared) + " output files compared across two identify and phase-diagram runs, " +
                      (same ? "all byte-identical" : "some differ")
                : "a CLI run failed: " + sink.str()};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance run"};
    std::uint64_t seed = 20240601;
    std::size_t threads = 0;
    bool report = false;
    std::vector<int> only;
    app.add_option("--seed", seed, "Master seed");
    app.add_option("--threads", threads, "Worker threads for the phase diagrams, 0 = all cores");
    app.add_option("--only", only, "Evaluate only these criteria")->check(CLI::Range(1, 10));
    app.add_flag("--report", report, "Exit 0 once every selected criterion has been evaluated");
    CLI11_PARSE(app, argc, argv);
    configure_logging();

    const auto selected = [&](int id) { return only.empty() || std::find(only.begin(), only.end(), id) != only.end(); };
    const auto print = [](const Verdict& v) {
        std::cout << "criterion " << (v.id < 10 ? " " : "") << v.id << ": " << (v.pass ? "PASS" : "FAIL") << "  "
                  << v.detail << std::endl;
    };

    Audit audit;
    std::vector<Verdict> verdicts;
    const auto record = [&](Verdict v) {
        std::cerr << "evaluated criterion " << v.id << std::endl;
        verdicts.push_back(std::move(v));
    };
    try {
        const bool audited = selected(7) || selected(8);
        if (selected(1) || audited) {
            auto v = noiseless_recovery(seed, threads, audit);
            if (selected(1)) record(std::move(v));
        }
        if (selected(2) || audited) {
            auto v = l0_agreement(seed, audit);
            if (selected(2)) record(std::move(v));
        }
        if (selected(3) || selected(4)) {
            auto [c3, c4] = certificates(seed);
            if (selected(3)) record(std::move(c3));
            if (selected(4)) record(std::move(c4));
        }
        if (selected(5) || audited) {
            auto v = scaling_in_samples(seed, threads, audit);
            if (selected(5)) record(std::move(v));
        }
        if (selected(6) || audited) {
            auto v = scaling_in_sigma(seed, threads, audit);
            if (selected(6)) record(std::move(v));
        }
        if (selected(9) || selected(8)) {
            auto v = restricted_eigenvalue(seed, audit);
            if (selected(9)) record(std::move(v));
        }
        if (selected(7)) {
            const bool pass = audit.worst_converged_kkt <= 1e-8 && audit.monotone_violations == 0;
            record({7, pass,
                    std::to_string(audit.converged) + "/" + std::to_string(audit.solves) +
                        " solves converged, worst converged kkt " + fmt(audit.worst_converged_kkt, 3) +
                        " (limit 1e-8); " + std::to_string(audit.instrumented) + " traced solves, " +
                        std::to_string(audit.sweeps_checked) + " sweep pairs, " +
                        std::to_string(audit.monotone_violations) + " increases, largest raw rise " +
                        fmt(audit.largest_raw_increase, 3)});
        }
        if (selected(8)) {
            record({8, audit.worst_diag_deviation <= 1e-12,
                    std::to_string(audit.systems) + " systems, max |diag(G*G/M) - 1| = " +
                        fmt(audit.worst_diag_deviation, 3) + " (limit 1e-12)"});
        }
        if (selected(10)) record(determinism(seed));
    } catch (const std::exception& e) {
        std::cout << "acceptance aborted: " << e.what() << std::endl;
        return 2;
    }

    std::sort(verdicts.begin(), verdicts.end(), [](const Verdict& a, const Verdict& b) { return a.id < b.id; });
    for (const auto& v : verdicts) print(v);
    const auto passed = std::count_if(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.pass; });
    std::cout << "summary: " << passed << "/" << verdicts.size() << " criteria pass";
    std::string failed;
    for (const auto& v : verdicts) {
        if (!v.pass) failed += (failed.empty() ? "" : ", ") + std::to_string(v.id);
    }
    if (!failed.empty()) std::cout << " (failing: " << failed << ")";
    std::cout << std::endl;
    if (report) return 0;
    return passed == static_cast<long>(verdicts.size()) ? 0 : 1;
}
