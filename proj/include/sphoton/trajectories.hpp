#pragma once

// Closed-form a-posteriori description of a two-level atom driven by a
// single-photon wavepacket under direct photon counting: conditional vector
// pairs (alpha, beta) for zero, one and two detections, the conditional
// operators built from them, and the detection-time densities.
//
// At most two photons can ever be counted (one from the wavepacket, one from
// an initially excited atom), so no record with three or more detections
// exists here. That cap is specific to this model.

#include <optional>
#include <vector>

#include "sphoton/operators.hpp"
#include "sphoton/pulses.hpp"

namespace sphoton {

/// Atom + wavepacket. H_S = -Delta0 sigma_z and L = sqrt(Gamma) sigma_- are
/// derived from params and never stored.
class AtomModel {
  public:
    AtomModel(ModelParams params, PulseEnvelope pulse, const Ket2 &psi0);
    /// Accepts any density operator. psi0() is populated when rho0 is pure.
    AtomModel(ModelParams params, PulseEnvelope pulse, const Operator2 &rho0);

    const ModelParams &params() const noexcept { return params_; }
    const PulseEnvelope &pulse() const noexcept { return pulse_; }
    const Operator2 &rho0() const noexcept { return rho0_; }
    const std::optional<Ket2> &psi0() const noexcept { return psi0_; }

    double rho_gg() const { return rho0_(0, 0).real(); }
    double rho_ee() const { return rho0_(1, 1).real(); }

    Operator2 hamiltonian() const;
    Operator2 coupling() const;

    /// Same atom/pulse with a different initial state.
    AtomModel with_state(const Ket2 &psi) const { return {params_, pulse_, psi}; }
    AtomModel with_state(const Operator2 &rho) const { return {params_, pulse_, rho}; }

  private:
    ModelParams params_;
    PulseEnvelope pulse_;
    Operator2 rho0_;
    std::optional<Ket2> psi0_;
};

/// Unnormalized conditional vectors after a detection record on [0, t].
struct ConditionalPair {
    Ket2 alpha;                     ///< atom has not met the photon yet
    Ket2 beta;                      ///< atom has already met the photon
    double t = 0.0;
    std::vector<double> detections; ///< strictly increasing, all <= t
};

/// No detection on [0, t]. Requires a pure initial state.
ConditionalPair cond_zero(const AtomModel &model, double t);
/// Exactly one detection at t1, 0 < t1 <= t.
ConditionalPair cond_one(const AtomModel &model, double t, double t1);
/// Detections at t1 < t2 <= t; alpha vanishes identically.
ConditionalPair cond_two(const AtomModel &model, double t, double t1, double t2);

/// |alpha><alpha| tail(t) + |beta><beta|. Its trace is the probability (or
/// probability density) of the detection record.
Operator2 cond_operator(const ConditionalPair &pair, const PulseEnvelope &pulse);

/// Probability of no detection on [0, t], for any initial state.
double prob_no_count(const AtomModel &model, double t);

/// Density of the first (and only-so-far) detection at t1.
///
/// Only the populations of rho0 enter: for a pure initial state the cross
/// terms cancel between the alpha and beta contributions, so initial
/// coherences never change this density.
double p_one(const AtomModel &model, double t1);

/// Joint density of detections at t1 < t2. Only the excited population of
/// rho0 contributes. At t1 == t2 the continuous extension is returned.
double p_two(const AtomModel &model, double t1, double t2);

struct MeanTimeOptions {
    double abs_tol = 1e-10;
};

/// Mean time of the m-th detection, m in {1, 2}. m = 2 requires the atom to
/// start fully excited (two counts are then certain).
double mean_time(const AtomModel &model, int m, const MeanTimeOptions &opt = {});

/// Horizon beyond which both the pulse tail and exp(-Gamma t) are below 1e-12.
double detection_horizon(const AtomModel &model);

} // namespace sphoton
