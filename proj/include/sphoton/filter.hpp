#pragma once

// Monte-Carlo unravelling of the counting filter: the a-posteriori state and
// its three companion operators, advanced by a Bernoulli jump draw per step
// and an explicit Euler drift otherwise.

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sphoton/operators.hpp"
#include "sphoton/trajectories.hpp"

namespace sphoton {

struct FilterState {
    Operator2 rho; ///< a-posteriori state
    Operator2 rho01;
    Operator2 rho10; ///< rho01^dagger
    Operator2 rho00;
    double t = 0.0;
    double k = 0.0; ///< jump intensity at t
    int jumps = 0;
};

enum class FilterMode {
    normalized, ///< the published filter: compensated drift, trace renormalized
    linear,     ///< unnormalized no-jump propagation (tests of linearity)
};

/// rho = rho00 = rho0, cross terms zero, k evaluated at t = 0.
FilterState initial_filter_state(const AtomModel &model);

/// Tr(L^dag L rho + L rho10 xi^* + rho01 L^dag xi + rho00 |xi|^2), clipped to
/// 0 when it is negative by no more than 1e-12.
double intensity(const FilterState &s, const AtomModel &model, Complex xi);

/// One step of length dt. Jumps iff u < k dt. xi is taken from the right of
/// s.t so that a step starting on a breakpoint sees the new segment.
FilterState filter_step(const FilterState &s, const AtomModel &model, double dt, double u,
                        FilterMode mode = FilterMode::normalized);

/// Both candidate successors of a step: the state after a jump (meaningful
/// only if k > 0) and after the drift.
struct StepBranches {
    FilterState jump;
    FilterState drift;
    double jump_probability = 0.0;
};
StepBranches filter_branches(const FilterState &s, const AtomModel &model, double dt);

struct SdeConfig {
    double dt = 1e-3;
    double t_end = 10.0;
    std::size_t n_traj = 10000;
    std::uint64_t seed0 = 1;
    /// Sample times; each is snapped to the nearest step. Empty means t_end only.
    std::vector<double> output_grid;
    /// 0 selects std::thread::hardware_concurrency().
    unsigned threads = 0;

    void validate() const;
};

struct TrajectoryRecord {
    std::uint64_t seed = 0;
    std::vector<double> jump_times;
    std::vector<FilterState> samples; ///< one per output time
    double integrated_intensity = 0.0;
};

/// Deterministic in (model, cfg, seed). Throws NumericError if a third jump
/// would be recorded.
TrajectoryRecord run_trajectory(const AtomModel &model, const SdeConfig &cfg, std::uint64_t seed);

/// Key of trajectory i of an ensemble started from seed0.
std::uint64_t trajectory_seed(std::uint64_t seed0, std::uint64_t i);

struct InvariantViolations {
    std::uint64_t three_jumps = 0;
    std::uint64_t negative_intensity = 0; ///< k below -1e-12 before clipping
    std::uint64_t not_psd = 0;            ///< min eigenvalue of rho below -1e-8
    std::uint64_t total() const { return three_jumps + negative_intensity + not_psd; }
};

struct EnsembleSample {
    double t = 0.0;
    Operator2 mean;
    /// Standard error of the real and imaginary parts, entry by entry.
    Operator2 stderr_;
    std::array<std::uint64_t, 3> counts{}; ///< trajectories with 0, 1, 2 jumps by t
    double mean_jumps = 0.0;
    double mean_jumps_stderr = 0.0;
    double mean_integrated_intensity = 0.0; ///< average of int_0^t k ds
    double integrated_intensity_stderr = 0.0;
};

struct EnsembleResult {
    std::vector<EnsembleSample> samples;
    std::size_t n_traj = 0;
    InvariantViolations violations;
    double max_jump_probability = 0.0; ///< largest k dt met on any step
    std::vector<std::string> warnings;
};

/// Trajectories are processed in fixed blocks merged in index order, so the
/// result does not depend on the thread count.
EnsembleResult ensemble_average(const AtomModel &model, const SdeConfig &cfg);

/// Long-format CSV (traj, t, 8 real entries of rho, k, jumps).
void write_trajectories_csv(const std::filesystem::path &path,
                            const std::vector<TrajectoryRecord> &records);

} // namespace sphoton
