#pragma once

// Unconditional (a-priori) dynamics of the atom: the Lindblad generator, the
// hierarchy of coupled master equations driven by the single-photon field,
// its closed-form solution, and its reconstruction from the counting
// representation (average over all detection records).

#include <vector>

#include "sphoton/operators.hpp"
#include "sphoton/trajectories.hpp"

namespace sphoton {

/// L rho = -i [H_S, rho] - 1/2 {L^dagger L, rho} + L rho L^dagger. Linear, so it
/// is applied to the non-Hermitian cross terms of the hierarchy as well.
class Lindbladian {
  public:
    explicit Lindbladian(const ModelParams &params);

    Operator2 apply(const Operator2 &rho) const;
    /// Matrix of the map on column-stacked vec(rho): vec(L rho) = S vec(rho).
    Operator4 superoperator() const;
    /// exp(L t) rho by exponentiating the 4x4 superoperator.
    Operator2 propagate(const Operator2 &rho, double t) const;

    const Operator2 &hamiltonian() const noexcept { return h_; }
    const Operator2 &coupling() const noexcept { return l_; }

  private:
    Operator2 h_;
    Operator2 l_;
    Operator2 ldl_;
};

Operator2 lindblad_apply(const ModelParams &params, const Operator2 &rho);

struct HierarchyState {
    Operator2 varrho;   ///< the a-priori state
    Operator2 varrho01;
    Operator2 varrho10; ///< always varrho01^dagger
    Operator2 varrho00; ///< exp(L t) rho0
    double t = 0.0;
};

struct HierarchyOptions {
    /// 0 selects min(1e-3 / Gamma, 2e-3 / Omega).
    double max_step = 0.0;
    /// Trace and Hermiticity drift that aborts the integration.
    double drift_limit = 1e-6;
};

/// Classic RK4 on the coupled linear system, fixed step, with the step grid
/// aligned to every output time and every pulse breakpoint.
std::vector<HierarchyState> integrate_hierarchy(const AtomModel &model,
                                                const std::vector<double> &t_grid,
                                                const HierarchyOptions &opt = {});

/// Right-hand side of the a-priori equation for a given hierarchy state.
Operator2 hierarchy_rate(const AtomModel &model, const HierarchyState &s, Complex xi);

/// Closed-form a-priori state at time t.
Operator2 apriori_closed_form(const AtomModel &model, double t);

/// Excitation probability Gamma e^{-Gamma t} |I(t)|^2 for an atom starting in |g>.
double excitation_prob(const AtomModel &model, double t);

/// a-priori state as rho_{t|0} + int rho_{t|t1} + int int rho_{t|t2,t1}. Mixed
/// rho0 is split into its eigen-ensemble.
Operator2 apriori_from_counting(const AtomModel &model, double t, double quad_tol = 1e-10);

/// Verification route through the exponential-form solution: nested
/// propagators exp(L (t - s)) integrated by quadrature.
HierarchyState apriori_exponential_form(const AtomModel &model, double t, double quad_tol = 1e-10);

} // namespace sphoton
