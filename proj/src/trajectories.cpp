#include "sphoton/trajectories.hpp"

#include <cmath>
#include <string>

#include "sphoton/errors.hpp"
#include "sphoton/quadrature.hpp"

namespace sphoton {

namespace {

constexpr double kPureThreshold = 1e-10;

const Ket2 &require_pure(const AtomModel &model, const char *who) {
    if (!model.psi0())
        throw UnsupportedState(std::string(who) +
                               ": conditional vectors need a pure initial state; use the "
                               "POVM or a-priori routes for mixed states");
    return *model.psi0();
}

} // namespace

AtomModel::AtomModel(ModelParams params, PulseEnvelope pulse, const Ket2 &psi0)
    : params_(params), pulse_(std::move(pulse)) {
    if (!is_finite(psi0) || std::abs(psi0.norm2() - 1.0) > Tolerances{}.ket_norm * 100)
        throw InvalidArgument("AtomModel: psi0 must be a normalized ket");
    psi0_ = psi0;
    rho0_ = outer(psi0, psi0);
}

AtomModel::AtomModel(ModelParams params, PulseEnvelope pulse, const Operator2 &rho0)
    : params_(params), pulse_(std::move(pulse)), rho0_(rho0) {
    if (!is_density_operator(rho0))
        throw InvalidArgument("AtomModel: rho0 is not a density operator");
    const auto eig = eigen_hermitian(rho0);
    if (eig.values[1] >= 1.0 - kPureThreshold)
        psi0_ = eig.vectors[1];
}

Operator2 AtomModel::hamiltonian() const { return -params_.Delta0() * ops::sigma_z(); }

Operator2 AtomModel::coupling() const { return std::sqrt(params_.Gamma()) * ops::sigma_minus(); }

ConditionalPair cond_zero(const AtomModel &model, double t) {
    const Ket2 &psi = require_pure(model, "cond_zero");
    if (!(t >= 0.0))
        throw InvalidArgument("cond_zero: t must be non-negative");
    const double G = model.params().Gamma();
    const double D = model.params().Delta0();
    const Complex decay = std::exp(Complex(-0.5 * G, D) * t); // exp((i D - G/2) t)
    ConditionalPair out;
    out.t = t;
    out.alpha = {std::exp(Complex(0.0, -D * t)) * psi.g, decay * psi.e};
    out.beta = {0.0, -std::sqrt(G) * decay * overlap_I(model.pulse(), model.params(), t) * psi.g};
    return out;
}

ConditionalPair cond_one(const AtomModel &model, double t, double t1) {
    const Ket2 &psi = require_pure(model, "cond_one");
    if (!(t1 > 0.0 && t1 <= t))
        throw InvalidArgument("cond_one: requires 0 < t1 <= t");
    const double G = model.params().Gamma();
    const double D = model.params().Delta0();
    const Complex gamma = model.params().gamma();
    const Complex phase = std::exp(Complex(0.0, -D * t));
    const Complex xi1 = model.pulse().eval(t1);
    const Complex I1 = overlap_I(model.pulse(), model.params(), t1);
    const Complex It = overlap_I(model.pulse(), model.params(), t);
    const Complex e1 = std::exp(-gamma * t1);

    ConditionalPair out;
    out.t = t;
    out.detections = {t1};
    out.alpha = {std::sqrt(G) * phase * e1 * psi.e, 0.0};
    // photon taken from the field | absorbed before t1 and re-emitted at t1
    const Complex ground = xi1 - G * e1 * I1;
    // field photon counted while the atom stays excited | atom emits at t1,
    // then absorbs the field photon on (t1, t]
    const Complex excited = std::exp(-gamma * t) * (xi1 - G * e1 * (It - I1));
    out.beta = {phase * ground * psi.g, phase * excited * psi.e};
    return out;
}

ConditionalPair cond_two(const AtomModel &model, double t, double t1, double t2) {
    const Ket2 &psi = require_pure(model, "cond_two");
    if (!(t1 > 0.0 && t1 < t2 && t2 <= t))
        throw InvalidArgument("cond_two: requires 0 < t1 < t2 <= t");
    const double G = model.params().Gamma();
    const double D = model.params().Delta0();
    const Complex gamma = model.params().gamma();
    const Complex I1 = overlap_I(model.pulse(), model.params(), t1);
    const Complex I2 = overlap_I(model.pulse(), model.params(), t2);
    // exp(-gamma (t1 + t2)) folded into each term to keep magnitudes bounded
    const Complex amp = model.pulse().eval(t1) * std::exp(-gamma * t2) +
                        model.pulse().eval(t2) * std::exp(-gamma * t1) -
                        G * std::exp(-gamma * (t1 + t2)) * (I2 - I1);
    ConditionalPair out;
    out.t = t;
    out.detections = {t1, t2};
    out.alpha = {0.0, 0.0};
    out.beta = {std::sqrt(G) * std::exp(Complex(0.0, -D * t)) * amp * psi.e, 0.0};
    return out;
}

Operator2 cond_operator(const ConditionalPair &pair, const PulseEnvelope &pulse) {
    Operator2 r = outer(pair.beta, pair.beta);
    const double w = pulse.tail(pair.t);
    if (w != 0.0)
        r += w * outer(pair.alpha, pair.alpha);
    return r;
}

double prob_no_count(const AtomModel &model, double t) {
    if (!(t >= 0.0))
        throw InvalidArgument("prob_no_count: t must be non-negative");
    const double G = model.params().Gamma();
    const double E = std::exp(-G * t);
    const double I2 = std::norm(overlap_I(model.pulse(), model.params(), t));
    return (model.rho_gg() + E * model.rho_ee()) * model.pulse().tail(t) +
           G * E * model.rho_gg() * I2;
}

double p_one(const AtomModel &model, double t1) {
    if (!(t1 >= 0.0))
        throw InvalidArgument("p_one: t1 must be non-negative");
    const double G = model.params().Gamma();
    const Complex xi = model.pulse().eval(t1);
    const Complex I1 = overlap_I(model.pulse(), model.params(), t1);
    const double excited = std::exp(-G * t1) * (G * model.pulse().tail(t1) + std::norm(xi));
    const double ground = std::norm(xi - G * std::exp(-model.params().gamma() * t1) * I1);
    return excited * model.rho_ee() + ground * model.rho_gg();
}

double p_two(const AtomModel &model, double t1, double t2) {
    if (!(t1 >= 0.0 && t1 <= t2))
        throw InvalidArgument("p_two: requires 0 <= t1 <= t2");
    const double G = model.params().Gamma();
    const Complex gamma = model.params().gamma();
    const Complex I1 = overlap_I(model.pulse(), model.params(), t1);
    const Complex I2 = overlap_I(model.pulse(), model.params(), t2);
    const Complex amp = model.pulse().eval(t1) * std::exp(-gamma * t2) +
                        model.pulse().eval(t2) * std::exp(-gamma * t1) -
                        G * std::exp(-gamma * (t1 + t2)) * (I2 - I1);
    return G * std::norm(amp) * model.rho_ee();
}

double detection_horizon(const AtomModel &model) {
    return std::max(model.pulse().support_end(), std::log(1e12) / model.params().Gamma());
}

double mean_time(const AtomModel &model, int m, const MeanTimeOptions &opt) {
    const double T = detection_horizon(model);
    const auto breaks = model.pulse().breakpoints();
    QuadOptions q;
    q.abs_tol = opt.abs_tol;
    if (m == 1) {
        auto f = [&](double t1) { return t1 * p_one(model, t1); };
        return integrate_piecewise<double>(f, 0.0, T, breaks, q);
    }
    if (m == 2) {
        if (std::abs(model.rho_ee() - 1.0) > 1e-12)
            throw PreconditionError("mean_time(2): requires <e|rho0|e> = 1");
        QuadOptions inner = q;
        inner.abs_tol = opt.abs_tol / (T * T);
        auto f = [&](double t2) {
            auto g = [&](double t1) { return p_two(model, t1, t2); };
            return t2 * integrate_piecewise<double>(g, 0.0, t2, breaks, inner);
        };
        return integrate_piecewise<double>(f, 0.0, T, breaks, q);
    }
    throw InvalidArgument("mean_time: count index must be 1 or 2");
}

} // namespace sphoton
