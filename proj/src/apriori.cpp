#include "sphoton/apriori.hpp"

#include <cmath>
#include <string>

#include "sphoton/errors.hpp"
#include "sphoton/quadrature.hpp"

namespace sphoton {

namespace {

using Vec4 = std::array<Complex, 4>;

Vec4 vec(const Operator2 &x) { return {x(0, 0), x(1, 0), x(0, 1), x(1, 1)}; }

Operator2 unvec(const Vec4 &v) {
    Operator2 x;
    x(0, 0) = v[0];
    x(1, 0) = v[1];
    x(0, 1) = v[2];
    x(1, 1) = v[3];
    return x;
}

Vec4 apply4(const Operator4 &m, const Vec4 &v) {
    Vec4 r{};
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j)
            r[i] += m(i, j) * v[j];
    return r;
}

double default_step(const AtomModel &model) {
    double h = 1e-3 / model.params().Gamma();
    if (model.pulse().omega() > 0.0)
        h = std::min(h, 2e-3 / model.pulse().omega());
    return h;
}

struct Triple {
    Operator2 rho, rho01, rho00;
};

} // namespace

Lindbladian::Lindbladian(const ModelParams &params)
    : h_(-params.Delta0() * ops::sigma_z()),
      l_(std::sqrt(params.Gamma()) * ops::sigma_minus()), ldl_(dagger(l_) * l_) {}

Operator2 Lindbladian::apply(const Operator2 &rho) const {
    return -I_UNIT * commutator(h_, rho) - 0.5 * anticommutator(ldl_, rho) +
           l_ * rho * dagger(l_);
}

Operator4 Lindbladian::superoperator() const {
    Operator4 s;
    for (std::size_t k = 0; k < 4; ++k) {
        Vec4 basis{};
        basis[k] = 1.0;
        const Vec4 col = vec(apply(unvec(basis)));
        for (std::size_t i = 0; i < 4; ++i)
            s(i, k) = col[i];
    }
    return s;
}

Operator2 Lindbladian::propagate(const Operator2 &rho, double t) const {
    return unvec(apply4(expm4(superoperator() * t), vec(rho)));
}

Operator2 lindblad_apply(const ModelParams &params, const Operator2 &rho) {
    return Lindbladian(params).apply(rho);
}

Operator2 hierarchy_rate(const AtomModel &model, const HierarchyState &s, Complex xi) {
    const Lindbladian lind(model.params());
    const Operator2 &L = lind.coupling();
    return lind.apply(s.varrho) + xi * commutator(s.varrho01, dagger(L)) +
           std::conj(xi) * commutator(L, s.varrho10);
}

std::vector<HierarchyState> integrate_hierarchy(const AtomModel &model,
                                                const std::vector<double> &t_grid,
                                                const HierarchyOptions &opt) {
    for (std::size_t i = 0; i < t_grid.size(); ++i)
        if (!(t_grid[i] >= 0.0) || (i > 0 && t_grid[i] <= t_grid[i - 1]))
            throw InvalidArgument("integrate_hierarchy: grid must be increasing from 0");

    const Lindbladian lind(model.params());
    const Operator2 L = lind.coupling();
    const Operator2 Ld = dagger(L);
    const PulseEnvelope &pulse = model.pulse();
    const double h_max = opt.max_step > 0.0 ? opt.max_step : default_step(model);

    auto rate = [&](const Triple &y, Complex xi) {
        const Operator2 r10 = dagger(y.rho01);
        return Triple{lind.apply(y.rho) + xi * commutator(y.rho01, Ld) +
                          std::conj(xi) * commutator(L, r10),
                      lind.apply(y.rho01) + std::conj(xi) * commutator(L, y.rho00),
                      lind.apply(y.rho00)};
    };
    auto axpy = [](const Triple &y, double h, const Triple &k) {
        return Triple{y.rho + h * k.rho, y.rho01 + h * k.rho01, y.rho00 + h * k.rho00};
    };

    Triple y{model.rho0(), Operator2::zero(), model.rho0()};
    double t = 0.0;
    std::vector<HierarchyState> out;
    out.reserve(t_grid.size());

    auto record = [&] {
        out.push_back({y.rho, y.rho01, dagger(y.rho01), y.rho00, t});
    };
    auto check = [&] {
        const double drift = std::max(std::abs(trace(y.rho) - 1.0), max_abs_diff(y.rho, dagger(y.rho)));
        if (!(drift <= opt.drift_limit))
            throw IntegrationFailure("integrate_hierarchy: invariant drift " + std::to_string(drift) +
                                         " at t = " + std::to_string(t),
                                     y.rho, drift);
    };

    const auto breaks = pulse.breakpoints();
    for (double target : t_grid) {
        while (t < target) {
            double seg_end = target;
            for (double b : breaks)
                if (b > t && b < seg_end)
                    seg_end = b;
            const double lo = t;
            const double hi = seg_end;
            auto xi_at = [&](double s) {
                if (s <= lo)
                    return pulse.eval_from_above(lo);
                if (s >= hi)
                    return pulse.eval_from_below(hi);
                return pulse.eval(s);
            };
            const auto n = static_cast<long>(std::ceil((hi - lo) / h_max - 1e-9));
            const double h = (hi - lo) / static_cast<double>(std::max(1L, n));
            for (long i = 0; i < std::max(1L, n); ++i) {
                const double s = lo + h * static_cast<double>(i);
                const double s_end = (i + 1 == std::max(1L, n)) ? hi : s + h;
                const Triple k1 = rate(y, xi_at(s));
                const Triple k2 = rate(axpy(y, 0.5 * h, k1), xi_at(s + 0.5 * h));
                const Triple k3 = rate(axpy(y, 0.5 * h, k2), xi_at(s + 0.5 * h));
                const Triple k4 = rate(axpy(y, h, k3), xi_at(s_end));
                y.rho += (h / 6.0) * (k1.rho + 2.0 * k2.rho + 2.0 * k3.rho + k4.rho);
                y.rho01 += (h / 6.0) * (k1.rho01 + 2.0 * k2.rho01 + 2.0 * k3.rho01 + k4.rho01);
                y.rho00 += (h / 6.0) * (k1.rho00 + 2.0 * k2.rho00 + 2.0 * k3.rho00 + k4.rho00);
            }
            t = hi;
            check();
        }
        record();
    }
    return out;
}

Operator2 apriori_closed_form(const AtomModel &model, double t) {
    if (!(t >= 0.0))
        throw InvalidArgument("apriori_closed_form: t must be non-negative");
    const ModelParams &p = model.params();
    const PulseEnvelope &pulse = model.pulse();
    const double G = p.Gamma();
    const Complex gamma = p.gamma();
    const double E = std::exp(-G * t);
    const double absorbed = G * E * std::norm(overlap_I(pulse, p, t));
    const double J = overlap_J(pulse, p, t).real();
    const double excited_left = model.rho_ee() * E * (1.0 - 4.0 * G * J);
    const Complex K = overlap_K(pulse, p, t);

    Operator2 r;
    r(0, 0) = 1.0 - absorbed - excited_left;
    r(1, 1) = absorbed + excited_left;
    r(1, 0) = model.rho0()(1, 0) * std::exp(-gamma * t) * (1.0 - 2.0 * G * std::conj(K));
    r(0, 1) = model.rho0()(0, 1) * std::exp(-std::conj(gamma) * t) * (1.0 - 2.0 * G * K);
    return r;
}

double excitation_prob(const AtomModel &model, double t) {
    if (std::abs(model.rho_gg() - 1.0) > 1e-12)
        throw PreconditionError("excitation_prob: requires the atom to start in |g>");
    if (!(t >= 0.0))
        throw InvalidArgument("excitation_prob: t must be non-negative");
    const double G = model.params().Gamma();
    return G * std::exp(-G * t) * std::norm(overlap_I(model.pulse(), model.params(), t));
}

namespace {

Operator2 counting_sum_pure(const AtomModel &model, double t, double tol) {
    const auto breaks = model.pulse().breakpoints();
    QuadOptions q;
    q.abs_tol = tol;

    Operator2 total = cond_operator(cond_zero(model, t), model.pulse());
    auto one = [&](double t1) { return cond_operator(cond_one(model, t, t1), model.pulse()); };
    total += integrate_piecewise<Operator2>(one, 0.0, t, breaks, q);

    if (std::norm(model.psi0()->e) > 0.0) {
        QuadOptions inner = q;
        inner.abs_tol = tol / std::max(1.0, t);
        auto two_outer = [&](double t2) {
            auto two_inner = [&](double t1) {
                return cond_operator(cond_two(model, t, t1, t2), model.pulse());
            };
            return integrate_piecewise<Operator2>(two_inner, 0.0, t2, breaks, inner);
        };
        total += integrate_piecewise<Operator2>(two_outer, 0.0, t, breaks, q);
    }
    return total;
}

} // namespace

Operator2 apriori_from_counting(const AtomModel &model, double t, double quad_tol) {
    if (!(t >= 0.0))
        throw InvalidArgument("apriori_from_counting: t must be non-negative");
    if (t == 0.0)
        return model.rho0();
    if (model.psi0())
        return counting_sum_pure(model, t, quad_tol);

    const auto eig = eigen_hermitian(model.rho0());
    Operator2 total;
    for (std::size_t i = 0; i < 2; ++i) {
        const double w = eig.values[i];
        if (w <= 0.0)
            continue;
        total += w * counting_sum_pure(model.with_state(eig.vectors[i]), t, quad_tol);
    }
    return total;
}

HierarchyState apriori_exponential_form(const AtomModel &model, double t, double quad_tol) {
    if (!(t >= 0.0))
        throw InvalidArgument("apriori_exponential_form: t must be non-negative");
    const Lindbladian lind(model.params());
    const Operator4 S = lind.superoperator();
    const Operator2 L = lind.coupling();
    const Operator2 Ld = dagger(L);
    const Operator2 &rho0 = model.rho0();
    const PulseEnvelope &pulse = model.pulse();
    const auto breaks = pulse.breakpoints();

    auto prop = [&](const Operator2 &x, double dt) { return unvec(apply4(expm4(S * dt), vec(x))); };
    auto varrho00 = [&](double s) { return prop(rho0, s); };

    QuadOptions q;
    q.abs_tol = quad_tol;
    auto varrho01 = [&](double s) {
        auto f = [&](double u) {
            return std::conj(pulse.eval(u)) * prop(commutator(L, varrho00(u)), s - u);
        };
        return integrate_piecewise<Operator2>(f, 0.0, s, breaks, q);
    };

    HierarchyState out;
    out.t = t;
    out.varrho00 = varrho00(t);
    out.varrho01 = varrho01(t);
    out.varrho10 = dagger(out.varrho01);
    auto g = [&](double s) {
        const Operator2 r01 = varrho01(s);
        const Complex xi = pulse.eval(s);
        return prop(xi * commutator(r01, Ld) + std::conj(xi) * commutator(L, dagger(r01)), t - s);
    };
    out.varrho = out.varrho00 + integrate_piecewise<Operator2>(g, 0.0, t, breaks, q);
    return out;
}

} // namespace sphoton
