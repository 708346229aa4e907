#pragma once

// Repeated-interactions picture: the field is a chain of bath qubits that
// meet the atom one at a time for a time tau, each measured in its {|0>, |1>}
// basis right after the collision. The conditional state of the atom and the
// unread part of the chain is carried by the pair (alpha, beta).

#include <cstdint>
#include <filesystem>
#include <vector>

#include "sphoton/operators.hpp"
#include "sphoton/trajectories.hpp"

namespace sphoton {

/// Blocks A_{e'e} = <e'| V |e> of the collision unitary on bath (x) atom.
struct CollisionBlocks {
    Operator2 A00, A01, A10, A11;
    Operator4 V;
};

/// V = exp(-i tau H) with H = 1 (x) H_S + i (sigma+ (x) L - sigma- (x) L^dag) / sqrt(tau).
CollisionBlocks build_blocks(const ModelParams &params, double tau);
/// Same with raw rates; Gamma = 0 gives the decoupled limit.
CollisionBlocks build_blocks(double Gamma, double Delta0, double tau);

/// xi sampled at the left end of every interval [k tau, (k + 1) tau) over the
/// whole pulse support and rescaled so that sum tau |xi_k|^2 = 1.
class DiscretePulse {
  public:
    DiscretePulse(const PulseEnvelope &pulse, double tau, std::size_t min_steps = 0);

    double tau() const noexcept { return tau_; }
    std::size_t size() const noexcept { return xi_.size(); }
    /// xi_k; zero past the sampled range.
    Complex xi(std::size_t k) const noexcept { return k < xi_.size() ? xi_[k] : Complex{}; }
    /// sum_{k >= j} tau |xi_k|^2
    double tail(std::size_t j) const noexcept { return j < tail_.size() ? tail_[j] : 0.0; }
    /// Factor applied to the raw samples.
    double scale() const noexcept { return scale_; }

  private:
    double tau_;
    double scale_ = 1.0;
    std::vector<Complex> xi_;
    std::vector<double> tail_;
};

struct CollisionConfig {
    double tau = 1e-3;
    std::size_t n_steps = 0;
    PulseEnvelope pulse = PulseEnvelope::vacuum();
    ModelParams params{1.0, 0.0};
    Ket2 psi0 = Ket2::ground();
};

struct CollisionState {
    Ket2 alpha;
    Ket2 beta;
    std::size_t j = 0;
    double tail_weight = 1.0; ///< sum_{k >= j} tau |xi_k|^2
    std::vector<std::uint8_t> outcomes;
    /// Probability of the record so far. The pair itself is kept normalized:
    /// |beta|^2 + tail_weight |alpha|^2 = 1.
    double record_weight = 1.0;
};

CollisionState initial_collision_state(const Ket2 &psi0, const DiscretePulse &pulse);

/// Unnormalized successors for outcome 0 and 1 with their record weights
/// |beta'|^2 + tail_next |alpha'|^2.
struct CollisionBranches {
    Ket2 alpha[2];
    Ket2 beta[2];
    double weight[2] = {0.0, 0.0};
};
CollisionBranches collision_branches(const CollisionState &s, const CollisionBlocks &blocks,
                                     Complex xi_j, double tau, double tail_next);

/// Draws the outcome (1 iff u < weight1 / (weight0 + weight1)) and renormalizes.
/// Throws DegenerateState if both weights vanish.
CollisionState collision_step(const CollisionState &s, const CollisionBlocks &blocks, Complex xi_j,
                              double tau, double tail_next, double u);
/// Variant that derives the next tail weight as tail_weight - tau |xi_j|^2.
CollisionState collision_step(const CollisionState &s, const CollisionBlocks &blocks, Complex xi_j,
                              double tau, double u);

struct ChainResult {
    std::vector<std::uint8_t> outcomes;
    std::vector<double> record_weights; ///< after each step
    std::vector<CollisionState> samples; ///< at the requested steps, outcomes cleared
};

/// Deterministic in (cfg, seed). Samples at sample_steps (each <= n_steps).
ChainResult run_chain(const CollisionConfig &cfg, std::uint64_t seed,
                      const std::vector<std::size_t> &sample_steps = {});

/// Unnormalized pair on the all-zero record at each requested step.
struct ZeroRecordSample {
    std::size_t step = 0;
    Ket2 alpha, beta;
    double weight = 0.0; ///< probability of no click up to this step
};
std::vector<ZeroRecordSample> propagate_zero_record(const CollisionConfig &cfg,
                                                    const std::vector<std::size_t> &steps);

struct ConvergenceRow {
    double tau = 0.0;
    double max_error = 0.0;
};
struct ConvergenceResult {
    std::vector<ConvergenceRow> rows;
    double fitted_order = 0.0; ///< least-squares slope of log error against log tau
};

/// All-zero record against the closed-form no-click pair on grid_points
/// equally spaced times in (0, t_end]. Requires a pure initial state and a
/// decreasing tau_list.
ConvergenceResult convergence_study(const AtomModel &model, const std::vector<double> &tau_list,
                                    double t_end, std::size_t grid_points = 20);

/// CSV with columns (step, outcome, record_weight).
void write_outcomes_csv(const std::filesystem::path &path, const ChainResult &chain);

} // namespace sphoton
