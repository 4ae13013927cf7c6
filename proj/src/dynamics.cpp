#include "ergoid/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "ergoid/errors.hpp"
#include "ergoid/format.hpp"

namespace ergoid {

DensityEstimate::DensityEstimate(std::vector<double> bin_masses, std::size_t sample_count)
    : masses_(std::move(bin_masses)), sample_count_(sample_count) {
    if (masses_.empty()) throw ParameterError("density estimate needs at least one bin");
    for (double m : masses_) {
        if (!(m >= 0.0)) throw ParameterError("bin masses must be nonnegative");
    }
}

std::vector<double> DensityEstimate::densities() const {
    std::vector<double> out(masses_.size());
    for (std::size_t b = 0; b < masses_.size(); ++b) out[b] = density(b);
    return out;
}

std::string SamplingStrategy::tag() const {
    switch (kind) {
        case Kind::consecutive: return "consecutive";
        case Kind::strided: return "strided(" + std::to_string(stride) + ")";
        case Kind::uniform_indices: return "uniform_indices";
    }
    return "unknown";
}

SamplingStrategy SamplingStrategy::parse(const std::string& name, std::size_t stride) {
    if (name == "consecutive") return consecutive();
    if (name == "strided") {
        if (stride < 1) throw ParameterError("strided sampling needs stride >= 1");
        return strided(stride);
    }
    if (name == "uniform_indices") return uniform_indices();
    throw ParameterError("unknown sampling strategy '" + name + "'");
}

Trajectory simulate(const TrigPoly& map, double x0, std::size_t burn_in, std::size_t length) {
    if (!(x0 >= 0.0 && x0 < 1.0)) throw ParameterError("initial state must lie in [0, 1)");
    const auto verdict = validate_circle_map(map);
    if (!verdict.valid) {
        std::ostringstream msg;
        msg << "map is not a valid circle map: f(" << *verdict.violation_x
            << ") = " << *verdict.violation_value;
        throw ParameterError(msg.str());
    }

    Trajectory traj{{}, burn_in, x0, map};
    traj.states.reserve(length);
    double x = x0;
    const std::size_t total = burn_in + length;
    for (std::size_t k = 0; k < total; ++k) {
        if (k >= burn_in) traj.states.push_back(x);
        if (k + 1 == total) break;
        double next = map(x).real();
        if (next == 1.0) next = 0.0;
        if (!(next >= 0.0 && next < 1.0)) throw DynamicsError(k + 1, next);
        x = next;
    }
    return traj;
}

DensityEstimate estimate_density(std::span<const double> states, std::size_t bins) {
    if (bins == 0) throw ParameterError("density estimate needs at least one bin");
    if (states.size() < bins) {
        throw ParameterError("trajectory of length " + std::to_string(states.size()) +
                             " is shorter than the bin count " + std::to_string(bins));
    }
    std::vector<std::size_t> counts(bins, 0);
    for (double x : states) {
        auto b = static_cast<std::size_t>(x * static_cast<double>(bins));
        counts[std::min(b, bins - 1)]++;
    }
    std::vector<double> masses(bins);
    const auto n = static_cast<double>(states.size());
    for (std::size_t b = 0; b < bins; ++b) masses[b] = static_cast<double>(counts[b]) / n;
    return DensityEstimate(std::move(masses), states.size());
}

DensityEstimate estimate_density(const Trajectory& traj, std::size_t bins) {
    return estimate_density(std::span<const double>(traj.states), bins);
}

double density_lower_bound(const DensityEstimate& est) {
    const auto d = est.densities();
    return *std::min_element(d.begin(), d.end());
}

ObservationSet sample_observations(const Trajectory& traj, std::size_t count,
                                   SamplingStrategy strategy, double sigma, std::uint64_t seed) {
    if (count == 0) throw ParameterError("need at least one observation");
    if (!(sigma >= 0.0)) throw ParameterError("noise sigma must be nonnegative");
    const std::size_t length = traj.states.size();
    // Index j needs a successor j + 1 inside the trajectory.
    const std::size_t last_index = length == 0 ? 0 : length - 1;

    std::vector<std::size_t> indices;
    indices.reserve(count);
    std::mt19937_64 rng(seed);
    switch (strategy.kind) {
        case SamplingStrategy::Kind::consecutive:
            if (length < count + 1) {
                throw ParameterError("trajectory too short for " + std::to_string(count) +
                                     " consecutive observations");
            }
            for (std::size_t m = 0; m < count; ++m) indices.push_back(m);
            break;
        case SamplingStrategy::Kind::strided:
            if (strategy.stride < 1) throw ParameterError("strided sampling needs stride >= 1");
            if (length < (count - 1) * strategy.stride + 2) {
                throw ParameterError("trajectory too short for " + std::to_string(count) +
                                     " observations at stride " + std::to_string(strategy.stride));
            }
            for (std::size_t m = 0; m < count; ++m) indices.push_back(m * strategy.stride);
            break;
        case SamplingStrategy::Kind::uniform_indices: {
            if (last_index < count) {
                throw ParameterError("trajectory too short for " + std::to_string(count) +
                                     " distinct observation indices");
            }
            std::vector<std::size_t> all(last_index);
            std::iota(all.begin(), all.end(), std::size_t{0});
            std::sample(all.begin(), all.end(), std::back_inserter(indices), count, rng);
            break;
        }
    }

    ObservationSet obs;
    obs.noise_sigma = sigma;
    obs.strategy = strategy;
    obs.seed = seed;
    obs.x.reserve(count);
    obs.y.reserve(count);
    std::normal_distribution<double> noise(0.0, 1.0);
    for (std::size_t j : indices) {
        obs.x.push_back(traj.states[j]);
        double y = traj.states[j + 1];
        if (sigma > 0.0) y += sigma * noise(rng);
        obs.y.push_back(y);
    }
    return obs;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
    os << "step,x\n";
    for (std::size_t k = 0; k < traj.states.size(); ++k) {
        os << traj.burn_in_discarded + k << ',' << format_double(traj.states[k]) << '\n';
    }
}

void write_observations_csv(std::ostream& os, const ObservationSet& obs) {
    os << "x,y\n";
    for (std::size_t m = 0; m < obs.size(); ++m) {
        os << format_double(obs.x[m]) << ',' << format_double(obs.y[m]) << '\n';
    }
}

void write_density_csv(std::ostream& os, const DensityEstimate& est) {
    os << "bin_left,bin_right,density\n";
    const auto bins = static_cast<double>(est.bin_count());
    for (std::size_t b = 0; b < est.bin_count(); ++b) {
        os << format_double(static_cast<double>(b) / bins) << ','
           << format_double(static_cast<double>(b + 1) / bins) << ','
           << format_double(est.density(b)) << '\n';
    }
}

namespace {

std::vector<std::vector<double>> read_numeric_csv(std::istream& is, const std::string& header,
                                                  std::size_t columns) {
    std::string line;
    if (!std::getline(is, line) || line != header) {
        throw ParameterError("expected CSV header '" + header + "'");
    }
    std::vector<std::vector<double>> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t used = 0;
                row.push_back(std::stod(cell, &used));
                if (used != cell.size()) throw std::invalid_argument(cell);
            } catch (const std::exception&) {
                throw ParameterError("malformed CSV value '" + cell + "'");
            }
        }
        if (row.size() != columns) throw ParameterError("CSV row has wrong column count: " + line);
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

ObservationSet read_observations_csv(std::istream& is) {
    ObservationSet obs;
    for (const auto& row : read_numeric_csv(is, "x,y", 2)) {
        if (!(row[0] >= 0.0 && row[0] < 1.0)) throw ParameterError("observation x outside [0, 1)");
        obs.x.push_back(row[0]);
        obs.y.push_back(row[1]);
    }
    if (obs.x.empty()) throw ParameterError("observation file has no rows");
    return obs;
}

DensityEstimate read_density_csv(std::istream& is) {
    const auto rows = read_numeric_csv(is, "bin_left,bin_right,density", 3);
    if (rows.empty()) throw ParameterError("density file has no rows");
    std::vector<double> masses;
    const auto bins = static_cast<double>(rows.size());
    for (std::size_t b = 0; b < rows.size(); ++b) {
        const double width = rows[b][1] - rows[b][0];
        if (std::abs(width - 1.0 / bins) > 1e-12) {
            throw ParameterError("density file must use equal-width bins covering [0, 1)");
        }
        masses.push_back(rows[b][2] / bins);
    }
    return DensityEstimate(std::move(masses), 0);
}

DynamicsError::DynamicsError(std::size_t step, double value)
    : Error("orbit left [0, 1) at step " + std::to_string(step) + " (value " +
            format_double(value) + ")"),
      step_(step),
      value_(value) {}

}  // namespace ergoid
