#pragma once

// Single-photon wavepacket envelopes xi_t and the integrals of xi that recur
// in every closed-form expression for the driven two-level atom.

#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include "sphoton/operators.hpp"

namespace sphoton {

/// Atom/field coupling constants. Units: inverse time; hbar = 1.
class ModelParams {
  public:
    /// Gamma > 0 is the decay rate, delta0 = (omega_c - omega_0) / 2.
    ModelParams(double Gamma, double delta0);

    double Gamma() const noexcept { return gamma_rate_; }
    double Delta0() const noexcept { return delta0_; }
    /// gamma = -2 i Delta0 + Gamma / 2
    Complex gamma() const noexcept { return {0.5 * gamma_rate_, -2.0 * delta0_}; }

  private:
    double gamma_rate_;
    double delta0_;
};

enum class Normalization {
    require,     ///< reject envelopes whose norm is off by more than 1e-9
    renormalize, ///< rescale so the norm is exactly one
    waive,       ///< accept as is (tests of the vacuum limit only)
};

/// Envelope of the single-photon wavepacket. Immutable after construction.
class PulseEnvelope {
  public:
    enum class Kind { square, exponential, tabulated, vacuum };

    /// xi_t = sqrt(Omega / 2) on [0, 2 / Omega], zero afterwards.
    static PulseEnvelope square(double omega);
    /// xi_t = sqrt(Omega) exp(-Omega t / 2).
    static PulseEnvelope exponential(double omega);
    /// Linearly interpolated samples; zero outside the grid. Times strictly
    /// increasing and non-negative.
    static PulseEnvelope tabulated(std::vector<double> times, std::vector<Complex> values,
                                   Normalization policy = Normalization::require);
    /// Two- or three-column CSV (t, re xi[, im xi]); optional header line.
    static PulseEnvelope from_csv(const std::filesystem::path &path,
                                  Normalization policy = Normalization::require);
    /// xi = 0 everywhere: the field carries no photon. Not normalized.
    static PulseEnvelope vacuum();

    Kind kind() const noexcept { return kind_; }
    /// Bandwidth parameter of the analytic presets (0 for the others).
    double omega() const noexcept { return omega_; }

    /// xi_t. Throws InvalidArgument for t < 0.
    Complex eval(double t) const;
    /// One-sided limits, used by integrators that step up to a breakpoint.
    Complex eval_from_above(double t) const;
    Complex eval_from_below(double t) const;

    /// int_t^inf |xi_s|^2 ds
    double tail(double t) const;
    /// int_0^t |xi_s|^2 ds, computed without cancellation against 1.
    double weight_before(double t) const;
    /// Smallest T with tail(T) <= 1e-12, up to the preset rules.
    double support_end() const noexcept { return support_end_; }
    /// Points where xi is not smooth. Integrators split there.
    std::span<const double> breakpoints() const noexcept { return breaks_; }

    /// int_0^t xi_s exp(z s) ds for arbitrary complex z.
    Complex overlap(Complex z, double t) const;
    /// int_0^t dt1 conj(xi_t1) exp(a t1) int_0^t1 ds xi_s exp(-a s).
    Complex nested_overlap(Complex a, double t) const;
    /// Same integral by one adaptive ODE sweep that advances the inner integral
    /// alongside the outer one. Works for every envelope kind.
    Complex nested_overlap_sweep(Complex a, double t, double rel_tol = 1e-11) const;

    const std::vector<double> &grid_times() const noexcept;
    const std::vector<Complex> &grid_values() const noexcept;

  private:
    struct Table;

    PulseEnvelope() = default;
    Complex eval_unchecked(double t) const;

    Kind kind_ = Kind::vacuum;
    double omega_ = 0.0;
    double support_end_ = 0.0;
    std::vector<double> breaks_;
    std::shared_ptr<const Table> table_;
};

/// I(t) = int_0^t xi_s exp(gamma s) ds.
Complex overlap_I(const PulseEnvelope &p, const ModelParams &m, double t);
/// J(t) = int_0^t dt1 conj(xi_t1) exp(conj(gamma) t1) int_0^t1 ds xi_s exp(-conj(gamma) s).
Complex overlap_J(const PulseEnvelope &p, const ModelParams &m, double t);
/// K(t) = int_0^t dt1 conj(xi_t1) exp(-gamma t1) int_0^t1 ds xi_s exp(gamma s),
/// the nested factor of the <g|rho|e> coherence.
Complex overlap_K(const PulseEnvelope &p, const ModelParams &m, double t);

namespace detail {
/// exp(z) - 1 without cancellation for small |z|.
Complex expm1(Complex z);
/// (exp(z) - 1) / z
Complex phi1(Complex z);
/// (exp(z) - 1 - z) / z^2
Complex phi2(Complex z);
} // namespace detail

} // namespace sphoton
