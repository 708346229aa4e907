#include "sphoton/povm.hpp"

#include <cmath>
#include <string>

#include "sphoton/errors.hpp"
#include "sphoton/quadrature.hpp"

namespace sphoton {

namespace {

struct Overlaps {
    double E;    // exp(-Gamma t)
    double N;    // int_0^t |xi|^2
    double tail; // int_t^inf |xi|^2
    double I2;   // |I(t)|^2
    double ReJ;
};

Overlaps overlaps(const AtomModel &model, double t) {
    const PulseEnvelope &p = model.pulse();
    return {std::exp(-model.params().Gamma() * t), p.weight_before(t), p.tail(t),
            std::norm(overlap_I(p, model.params(), t)), overlap_J(p, model.params(), t).real()};
}

Operator2 diag(double gg, double ee) {
    Operator2 m;
    m(0, 0) = gg;
    m(1, 1) = ee;
    return m;
}

void require_time(double t, const char *who) {
    if (!(t >= 0.0) || !std::isfinite(t))
        throw InvalidArgument(std::string(who) + ": t must be finite and non-negative");
}

class NestedIntegrals {
  public:
    NestedIntegrals(const AtomModel &model, double tol)
        : pulse_(model.pulse()), G_(model.params().Gamma()), gamma_(model.params().gamma()),
          breaks_(pulse_.breakpoints()) {
        q_.abs_tol = tol;
        q_.max_panels = 20000;
    }

    // int_a^b xi_s exp(z s) ds, by quadrature
    Complex weighted(Complex z, double a, double b) const {
        if (b <= a)
            return 0.0;
        auto f = [&](double s) { return pulse_.eval(s) * std::exp(z * s); };
        return integrate_piecewise<Complex>(f, a, b, breaks_, q_);
    }

    double lhs1(double t) const {
        auto f = [&](double t1) {
            const Complex inner = weighted(gamma_, 0.0, t1) * std::exp(-gamma_ * t1);
            return std::norm(pulse_.eval(t1) - G_ * inner);
        };
        return integrate_piecewise<double>(f, 0.0, t, breaks_, q_);
    }

    double lhs2(double t) const {
        auto f = [&](double t1) {
            const Complex inner = weighted(gamma_, t1, t) * std::exp(-gamma_ * t1);
            return std::norm(pulse_.eval(t1) - G_ * inner);
        };
        return integrate_piecewise<double>(f, 0.0, t, breaks_, q_);
    }

    double lhs3(double t) const {
        auto outer = [&](double t2) {
            auto f = [&](double t1) {
                const Complex amp = pulse_.eval(t1) * std::exp(-gamma_ * t2) +
                                    pulse_.eval(t2) * std::exp(-gamma_ * t1) -
                                    G_ * weighted(gamma_, t1, t2) * std::exp(-gamma_ * (t1 + t2));
                return std::norm(amp);
            };
            return integrate_piecewise<double>(f, 0.0, t2, breaks_, q_);
        };
        return integrate_piecewise<double>(outer, 0.0, t, breaks_, q_);
    }

  private:
    const PulseEnvelope &pulse_;
    double G_;
    Complex gamma_;
    std::span<const double> breaks_;
    QuadOptions q_;
};

} // namespace

PovmSet povm(const AtomModel &model, double t) {
    require_time(t, "povm");
    const double G = model.params().Gamma();
    const Overlaps o = overlaps(model, t);
    const double absorbed = G * o.E * o.I2;
    const double corr = 4.0 * G * o.E * o.ReJ;

    PovmSet s;
    s.t = t;
    s.m0 = diag(o.tail + absorbed, o.E * o.tail);
    s.m1 = diag(o.N - absorbed, (1.0 - o.E) * o.tail + o.E * o.N + absorbed - corr);
    s.m2 = diag(0.0, (1.0 - o.E) * o.N - absorbed + corr);
    return s;
}

PovmSet povm_unsimplified(const AtomModel &model, double t, double quad_tol) {
    require_time(t, "povm_unsimplified");
    const double G = model.params().Gamma();
    const double E = std::exp(-G * t);
    const double tail = model.pulse().tail(t);
    const NestedIntegrals nested(model, quad_tol);

    PovmSet s;
    s.t = t;
    s.m0 = diag(tail + G * E * std::norm(nested.weighted(model.params().gamma(), 0.0, t)), E * tail);
    s.m1 = diag(nested.lhs1(t), (1.0 - E) * tail + E * nested.lhs2(t));
    s.m2 = diag(0.0, G * nested.lhs3(t));
    return s;
}

CountStatistics count_probs(const AtomModel &model, double t) {
    require_time(t, "count_probs");
    const PovmSet m = povm(model, t);
    const Operator2 &rho = model.rho0();

    CountStatistics s;
    s.p0 = trace(m.m0 * rho).real();
    s.p1 = trace(m.m1 * rho).real();
    s.p2 = trace(m.m2 * rho).real();

    const double G = model.params().Gamma();
    const Overlaps o = overlaps(model, t);
    const double shared = o.N - G * o.E * o.I2;
    const double gg = model.rho_gg();
    const double ee = model.rho_ee();
    const double cross = 4.0 * G * o.E * o.ReJ;
    s.mean = shared * gg +
             ((1.0 - o.E) * (1.0 + o.N) + o.E * o.N - G * o.E * o.I2 + cross) * ee;
    s.second_moment = shared * gg + ((1.0 - o.E) * (1.0 + 3.0 * o.N) + o.E * o.N -
                                     3.0 * G * o.E * o.I2 + 3.0 * cross) * ee;

    const double mean_sum = s.p1 + 2.0 * s.p2;
    const double second_sum = s.p1 + 4.0 * s.p2;
    if (std::abs(mean_sum - s.mean) > 1e-9 || std::abs(second_sum - s.second_moment) > 1e-9)
        throw NumericError("count_probs: closed-form moments disagree with the POVM at t = " +
                           std::to_string(t));
    if (s.mean > 0.0)
        s.mandel_q = mandel_q(s);
    return s;
}

double mandel_q(const CountStatistics &stats) {
    if (!(stats.mean > 0.0))
        throw UndefinedStatistic("mandel_q: undefined for zero mean count");
    return (stats.second_moment - stats.mean * stats.mean) / stats.mean - 1.0;
}

AppendixResiduals verify_appendix_identities(const AtomModel &model, double t, double quad_tol) {
    require_time(t, "verify_appendix_identities");
    AppendixResiduals r;
    r.t = t;
    if (t == 0.0)
        return r;
    const double G = model.params().Gamma();
    const Overlaps o = overlaps(model, t);
    const NestedIntegrals nested(model, quad_tol);

    const double rhs1 = o.N - G * o.E * o.I2;
    const double rhs2 = o.N + G * o.I2 - 4.0 * G * o.ReJ;
    const double rhs3 = (1.0 - o.E) * o.N / G - o.E * o.I2 + 4.0 * o.E * o.ReJ;
    r.a1 = std::abs(nested.lhs1(t) - rhs1);
    r.a2 = std::abs(nested.lhs2(t) - rhs2);
    r.a3 = std::abs(nested.lhs3(t) - rhs3);
    return r;
}

} // namespace sphoton
