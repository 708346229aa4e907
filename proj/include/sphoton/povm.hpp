#pragma once

// Photon-count statistics on [0, t]: the three-element POVM {M_0, M_1, M_2},
// count probabilities, the first two moments and the Mandel Q parameter.

#include <optional>

#include "sphoton/operators.hpp"
#include "sphoton/trajectories.hpp"

namespace sphoton {

struct PovmSet {
    Operator2 m0, m1, m2;
    double t = 0.0;
};

/// Closed forms built from tail(t), I(t) and J(t). All elements are diagonal.
PovmSet povm(const AtomModel &model, double t);

/// Same elements from their defining single and double integrals, evaluated by
/// nested quadrature. Slow; kept for cross-checks.
PovmSet povm_unsimplified(const AtomModel &model, double t, double quad_tol = 1e-11);

struct CountStatistics {
    double p0 = 1.0, p1 = 0.0, p2 = 0.0;
    double mean = 0.0;
    double second_moment = 0.0;
    /// Empty where the mean vanishes (t = 0).
    std::optional<double> mandel_q;
};

/// P_t(m) = Tr(M_m rho0) with the moments from their closed forms, checked
/// against sum m^k P_t(m). Throws NumericError if the two disagree beyond 1e-9.
CountStatistics count_probs(const AtomModel &model, double t);

/// (second_moment - mean^2) / mean - 1. Throws UndefinedStatistic for mean == 0.
double mandel_q(const CountStatistics &stats);

struct AppendixResiduals {
    double a1 = 0.0, a2 = 0.0, a3 = 0.0;
    double t = 0.0;
    double max() const { return std::max(a1, std::max(a2, a3)); }
};

/// The three integral identities behind POVM completeness. Left sides by
/// direct nested quadrature, right sides from the closed overlap integrals.
AppendixResiduals verify_appendix_identities(const AtomModel &model, double t,
                                             double quad_tol = 1e-11);

} // namespace sphoton
