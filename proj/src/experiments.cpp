#include "ergoid/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <mutex>
#include <ostream>
#include <random>
#include <thread>

#include <boost/math/distributions/students_t.hpp>
#include <spdlog/spdlog.h>

#include "ergoid/errors.hpp"
#include "ergoid/format.hpp"
#include "ergoid/seeding.hpp"
#include "ergoid/sensing.hpp"

namespace ergoid {

namespace {

constexpr double nan = std::numeric_limits<double>::quiet_NaN();

// Sub-stream layout of a trial seed: attempt a draws its map from stream 2a
// and its initial state from 2a + 1; noise uses the last stream.
constexpr std::uint64_t noise_stream = std::numeric_limits<std::uint64_t>::max();

std::size_t trajectory_length(const ExperimentConfig& cfg, std::size_t samples) {
    const auto strategy = cfg.strategy();
    std::size_t needed = samples + 1;
    if (strategy.kind == SamplingStrategy::Kind::strided) needed = (samples - 1) * strategy.stride + 2;
    return std::max(cfg.density_length, needed);
}

double median(std::vector<double> v) {
    if (v.empty()) return nan;
    std::sort(v.begin(), v.end());
    const std::size_t mid = v.size() / 2;
    return v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

std::string csv_double(double v) { return std::isnan(v) ? "nan" : format_double(v); }

nlohmann::json json_double(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

}  // namespace

double screen_statistic(const DensityEstimate& est, ScreenRegion region, double lo, double hi) {
    if (region == ScreenRegion::circle) return density_lower_bound(est);
    const std::size_t bins = est.bin_count();
    const double width = hi - lo;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < bins; ++b) {
        const double left = static_cast<double>(b) / static_cast<double>(bins);
        const double right = static_cast<double>(b + 1) / static_cast<double>(bins);
        if (left >= lo && right <= hi) best = std::min(best, est.density(b) * width);
    }
    return std::isfinite(best) ? best : 0.0;
}

double trial_lambda(const ExperimentConfig& cfg, const CellSpec& cell) {
    if (cfg.lambda) return *cfg.lambda;
    const FrequencySet freqs(cfg.max_freq);
    const double rule = lambda_rule(cell.sigma, freqs.size(), cell.samples, cfg.lambda_constant);
    return rule > 0.0 ? rule : cfg.noiseless_lambda;
}

TrialInstance prepare_trial(const ExperimentConfig& cfg, const CellSpec& cell, std::uint64_t seed) {
    const FrequencySet freqs(cfg.max_freq);
    TrialInstance inst;
    std::optional<Trajectory> accepted;
    double best_screen = -1.0;
    for (std::size_t attempt = 0; attempt < cfg.max_retries && !accepted; ++attempt) {
        TrigPoly map = random_sparse_map(cell.sparsity, freqs, cfg.dc_value, cfg.amplitude_budget,
                                         derive_seed(seed, 2 * attempt));
        if (!validate_circle_map(map, cfg.grid_points).valid) continue;
        std::mt19937_64 rng(derive_seed(seed, 2 * attempt + 1));
        const double x0 = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        Trajectory traj = simulate(map, x0, cfg.burn_in, trajectory_length(cfg, cell.samples));
        const auto est = estimate_density(traj, cfg.density_bins);
        const auto [lo, hi] = std::minmax_element(traj.states.begin(), traj.states.end());
        const double screen = screen_statistic(est, cfg.screen, *lo, *hi);
        best_screen = std::max(best_screen, screen);
        inst.map_attempts = attempt + 1;
        if (screen > cfg.xi_threshold) {
            inst.xi_h = density_lower_bound(est);
            inst.screen_value = screen;
            accepted = std::move(traj);
        }
    }
    if (!accepted) {
        throw ExperimentError("no generated map passed the " + to_string(cfg.screen) + " density screen (xi > " +
                              format_double(cfg.xi_threshold) + ") in " + std::to_string(cfg.max_retries) +
                              " attempts; best screen value " + format_double(std::max(best_screen, 0.0)));
    }
    inst.map = accepted->map;
    inst.observations = sample_observations(*accepted, cell.samples, cfg.strategy(), cell.sigma,
                                            derive_seed(seed, noise_stream));
    inst.lambda = trial_lambda(cfg, cell);
    return inst;
}

LassoConfig solver_config(const ExperimentConfig& cfg, double lambda) {
    LassoConfig lc;
    lc.lambda = lambda;
    lc.tolerance = cfg.tolerance;
    lc.max_iterations = cfg.max_iterations;
    lc.symmetrize_output = cfg.symmetrize;
    return lc;
}

TrialResult run_identification(const ExperimentConfig& cfg, const CellSpec& cell, std::uint64_t seed) {
    const auto start = std::chrono::steady_clock::now();
    const FrequencySet freqs(cfg.max_freq);
    const auto inst = prepare_trial(cfg, cell, seed);
    TrialResult result;
    result.seed = seed;
    result.cell = cell;
    result.map = inst.map;
    result.map_attempts = inst.map_attempts;
    result.xi_h = inst.xi_h;
    result.screen_value = inst.screen_value;
    result.lambda = inst.lambda;

    const auto sys = build_measurement(inst.observations, freqs);
    result.solution = solve_lasso(sys, solver_config(cfg, result.lambda));
    if (!result.solution.converged) {
        spdlog::warn("lasso did not converge for seed {} (kkt {})", seed, result.solution.kkt_residual);
    }

    const CVector truth = result.map->dense();
    const CVector diff = result.solution.coeffs - truth;
    // Summed in ascending frequency order, like wiener_norm, so both agree bit for bit.
    result.l1_error = 0.0;
    for (Eigen::Index i = 0; i < diff.size(); ++i) result.l1_error += std::abs(diff(i));
    result.wiener_error = wiener_norm(TrigPoly::from_dense(freqs, diff, false));
    result.support_recovered = support_of(result.solution.coeffs, result.lambda) == support_of(truth);
    result.success = result.support_recovered &&
                     (cell.sigma > 0.0 || result.l1_error <= noiseless_error_tolerance);
    if (cfg.record_timing) {
        result.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    }
    return result;
}

LassoSolution identify_from_observations(const ObservationSet& obs, const ExperimentConfig& cfg) {
    const FrequencySet freqs(cfg.max_freq);
    const auto sys = build_measurement(obs, freqs);
    return solve_lasso(sys, solver_config(cfg, trial_lambda(cfg, CellSpec{1, obs.size(), obs.noise_sigma})));
}

std::vector<CellSpec> grid_cells(const ExperimentConfig& cfg) {
    std::vector<CellSpec> cells;
    for (auto s : cfg.sparsity)
        for (auto m : cfg.samples)
            for (auto sigma : cfg.sigma) cells.push_back({s, m, sigma});
    return cells;
}

CellSummary summarize_cell(std::size_t cell_index, const CellSpec& cell,
                           const std::vector<TrialResult>& trials, std::size_t n_cols) {
    CellSummary out;
    out.cell_index = cell_index;
    out.cell = cell;
    std::vector<double> errors;
    std::vector<double> ratios;
    std::size_t successes = 0;
    const double rate = cell.sigma * std::sqrt(std::log(static_cast<double>(n_cols)) /
                                               static_cast<double>(cell.samples));
    for (const auto& t : trials) {
        if (t.cell_index != cell_index) continue;
        ++out.trials;
        if (t.failed) {
            ++out.failures;
            continue;
        }
        successes += t.success;
        errors.push_back(t.l1_error);
        if (rate > 0.0 && t.xi_h > 0.0) {
            ratios.push_back(t.l1_error * t.xi_h / (static_cast<double>(cell.sparsity) * rate));
        }
    }
    out.success_rate = out.trials ? static_cast<double>(successes) / static_cast<double>(out.trials) : 0.0;
    out.median_l1_error = median(errors);
    out.c3_empirical = median(ratios);
    return out;
}

PhaseDiagram run_phase_diagram(const ExperimentConfig& cfg) {
    cfg.validate();
    PhaseDiagram pd;
    pd.cells = grid_cells(cfg);
    const std::size_t total = pd.cells.size() * cfg.trials;
    pd.trials.resize(total);

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t task = next++; task < total; task = next++) {
            const std::size_t cell = task / cfg.trials;
            const std::size_t trial = task % cfg.trials;
            const auto seed = trial_seed(cfg.seed, cell, trial);
            TrialResult r;
            try {
                r = run_identification(cfg, pd.cells[cell], seed);
            } catch (const Error& e) {
                r = TrialResult{};
                r.seed = seed;
                r.cell = pd.cells[cell];
                r.failed = true;
                r.failure = e.what();
                spdlog::warn("cell {} trial {} failed: {}", cell, trial, e.what());
            }
            r.cell_index = cell;
            r.trial_index = trial;
            // Each task owns its slot, so no lock is needed.
            pd.trials[task] = std::move(r);
        }
    };

    std::size_t threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, std::max<std::size_t>(total, 1));
    {
        std::vector<std::jthread> pool;
        for (std::size_t i = 1; i < threads; ++i) pool.emplace_back(worker);
        worker();
    }

    const std::size_t n_cols = FrequencySet(cfg.max_freq).size();
    for (std::size_t c = 0; c < pd.cells.size(); ++c) {
        pd.summaries.push_back(summarize_cell(c, pd.cells[c], pd.trials, n_cols));
    }
    return pd;
}

std::string to_string(FitAxis axis) {
    switch (axis) {
        case FitAxis::samples: return "M";
        case FitAxis::sigma: return "sigma";
        case FitAxis::sparsity: return "s";
    }
    return "?";
}

FitAxis parse_fit_axis(const std::string& name) {
    if (name == "M") return FitAxis::samples;
    if (name == "sigma") return FitAxis::sigma;
    if (name == "s") return FitAxis::sparsity;
    throw UsageError("unknown fit axis '" + name + "' (expected M, sigma or s)");
}

ScalingFit fit_error_scaling(const std::vector<CellSummary>& cells, FitAxis axis) {
    if (cells.size() < 4) throw FitError("scaling fit needs at least 4 grid points");
    auto value = [axis](const CellSpec& c) {
        switch (axis) {
            case FitAxis::samples: return static_cast<double>(c.samples);
            case FitAxis::sigma: return c.sigma;
            case FitAxis::sparsity: return static_cast<double>(c.sparsity);
        }
        return 0.0;
    };
    const CellSpec& ref = cells.front().cell;
    std::vector<double> xs;
    std::vector<double> ys;
    for (const auto& c : cells) {
        const bool same_s = axis == FitAxis::sparsity || c.cell.sparsity == ref.sparsity;
        const bool same_m = axis == FitAxis::samples || c.cell.samples == ref.samples;
        const bool same_sigma = axis == FitAxis::sigma || c.cell.sigma == ref.sigma;
        if (!(same_s && same_m && same_sigma)) {
            throw FitError("cells vary along an axis other than " + to_string(axis));
        }
        if (!(c.median_l1_error > 0.0)) {
            throw FitError("nonpositive or missing median error on the " + to_string(axis) + " axis");
        }
        if (!(value(c.cell) > 0.0)) throw FitError("nonpositive " + to_string(axis) + " value");
        xs.push_back(std::log(value(c.cell)));
        ys.push_back(std::log(c.median_l1_error));
    }
    const auto n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    if (!(sxx > 0.0)) throw FitError("axis values must not all coincide");

    ScalingFit fit;
    fit.axis = axis;
    fit.points = xs.size();
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double sse = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double r = ys[i] - fit.intercept - fit.slope * xs[i];
        sse += r * r;
    }
    const boost::math::students_t dist(n - 2.0);
    const double t = boost::math::quantile(boost::math::complement(dist, 0.025));
    fit.half_width = t * std::sqrt(sse / (n - 2.0) / sxx);
    return fit;
}

void write_trials_csv(std::ostream& os, const std::vector<TrialResult>& trials) {
    os << trials_csv_header << '\n';
    for (const auto& t : trials) {
        os << t.cell.sparsity << ',' << t.cell.samples << ',' << format_double(t.cell.sigma) << ','
           << t.trial_index << ',' << t.seed << ',';
        if (t.failed) {
            os << "nan,nan,0,nan,nan,nan," << format_double(t.wall_ms) << '\n';
            continue;
        }
        os << csv_double(t.l1_error) << ',' << csv_double(t.wiener_error) << ',' << (t.support_recovered ? 1 : 0)
           << ',' << csv_double(t.solution.kkt_residual) << ',' << csv_double(t.xi_h) << ','
           << csv_double(t.lambda) << ',' << format_double(t.wall_ms) << '\n';
    }
}

void write_cells_csv(std::ostream& os, const std::vector<CellSummary>& cells) {
    os << "s,M,sigma,trials,failures,success_rate,median_l1_error,c3_empirical\n";
    for (const auto& c : cells) {
        os << c.cell.sparsity << ',' << c.cell.samples << ',' << format_double(c.cell.sigma) << ',' << c.trials
           << ',' << c.failures << ',' << format_double(c.success_rate) << ',' << csv_double(c.median_l1_error)
           << ',' << csv_double(c.c3_empirical) << '\n';
    }
}

nlohmann::json to_json(const TrialResult& t) {
    nlohmann::json j{{"s", t.cell.sparsity},  {"M", t.cell.samples}, {"sigma", t.cell.sigma},
                     {"cell", t.cell_index},  {"trial", t.trial_index}, {"seed", t.seed},
                     {"failed", t.failed}};
    if (t.failed) {
        j["failure"] = t.failure;
        return j;
    }
    const FrequencySet freqs = t.map->freqs();
    j["map"] = to_json(*t.map);
    j["map_attempts"] = t.map_attempts;
    j["xi_h"] = json_double(t.xi_h);
    j["screen_value"] = json_double(t.screen_value);
    j["lambda"] = t.lambda;
    j["solution"] = to_json(t.solution, freqs);
    j["l1_error"] = json_double(t.l1_error);
    j["wiener_error"] = json_double(t.wiener_error);
    j["support_recovered"] = t.support_recovered;
    j["success"] = t.success;
    j["wall_ms"] = t.wall_ms;
    return j;
}

nlohmann::json to_json(const CellSummary& c) {
    return {{"s", c.cell.sparsity},
            {"M", c.cell.samples},
            {"sigma", c.cell.sigma},
            {"trials", c.trials},
            {"failures", c.failures},
            {"success_rate", c.success_rate},
            {"median_l1_error", json_double(c.median_l1_error)},
            {"c3_empirical", json_double(c.c3_empirical)}};
}

}  // namespace ergoid
