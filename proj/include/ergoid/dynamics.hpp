#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ergoid/trigpoly.hpp"

namespace ergoid {

/// Orbit x_{k+1} = f(x_k) on [0, 1) after discarding a burn-in segment.
struct Trajectory {
    std::vector<double> states;
    std::size_t burn_in_discarded = 0;
    double x0 = 0.0;
    TrigPoly map;
};

/// Piecewise-constant density estimate on B equal-width bins of [0, 1).
class DensityEstimate {
public:
    DensityEstimate(std::vector<double> bin_masses, std::size_t sample_count);

    std::size_t bin_count() const noexcept { return masses_.size(); }
    std::size_t sample_count() const noexcept { return sample_count_; }
    std::span<const double> masses() const noexcept { return masses_; }
    double density(std::size_t bin) const { return static_cast<double>(masses_.size()) * masses_.at(bin); }
    std::vector<double> densities() const;

private:
    std::vector<double> masses_;
    std::size_t sample_count_;
};

struct SamplingStrategy {
    enum class Kind { consecutive, strided, uniform_indices };

    Kind kind = Kind::consecutive;
    std::size_t stride = 1;

    static SamplingStrategy consecutive() { return {Kind::consecutive, 1}; }
    static SamplingStrategy strided(std::size_t k) { return {Kind::strided, k}; }
    static SamplingStrategy uniform_indices() { return {Kind::uniform_indices, 1}; }

    std::string tag() const;
    static SamplingStrategy parse(const std::string& name, std::size_t stride = 1);
};

/// Pairs (x_j, y_j) with y_j = f(x_j) + eta_j. Stored column-wise.
struct ObservationSet {
    std::vector<double> x;
    std::vector<double> y;
    double noise_sigma = 0.0;
    SamplingStrategy strategy;
    std::uint64_t seed = 0;

    std::size_t size() const noexcept { return x.size(); }
};

inline constexpr std::size_t default_burn_in = 1000;
inline constexpr std::size_t default_density_length = 100000;
inline constexpr std::size_t default_density_bins = 64;
inline constexpr double default_xi_threshold = 0.05;

/// Iterates the map burn_in + length times from x0 (x0 itself counts as the
/// first state) and keeps the last `length` states. A computed value of
/// exactly 1 is identified with 0; anything else outside [0, 1) throws
/// DynamicsError. The map must pass validate_circle_map.
Trajectory simulate(const TrigPoly& map, double x0, std::size_t burn_in, std::size_t length);

DensityEstimate estimate_density(std::span<const double> states, std::size_t bins);
DensityEstimate estimate_density(const Trajectory& traj, std::size_t bins);

/// Empirical xi_h: minimum bin density.
double density_lower_bound(const DensityEstimate& est);

ObservationSet sample_observations(const Trajectory& traj, std::size_t count,
                                   SamplingStrategy strategy, double sigma, std::uint64_t seed);

void write_trajectory_csv(std::ostream& os, const Trajectory& traj);
void write_observations_csv(std::ostream& os, const ObservationSet& obs);
void write_density_csv(std::ostream& os, const DensityEstimate& est);

/// Reads the `x,y` CSV written by write_observations_csv.
ObservationSet read_observations_csv(std::istream& is);
/// Reads the `bin_left,bin_right,density` CSV written by write_density_csv.
DensityEstimate read_density_csv(std::istream& is);

}  // namespace ergoid
