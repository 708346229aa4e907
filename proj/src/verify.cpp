#include "sphoton/verify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "sphoton/apriori.hpp"
#include "sphoton/collision.hpp"
#include "sphoton/errors.hpp"
#include "sphoton/filter.hpp"
#include "sphoton/povm.hpp"
#include "sphoton/quadrature.hpp"

namespace sphoton {

namespace {

struct Outcome {
    double residual;
    std::string detail;
};

struct Check {
    const char *name;
    double tolerance;
    bool stochastic;
    std::function<Outcome(const VerifyOptions &)> run;
};

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        v[static_cast<std::size_t>(i)] = a + (b - a) * i / (n - 1);
    return v;
}

Operator2 hermitian_part(const Operator2 &x) { return 0.5 * (x + dagger(x)); }

std::vector<AtomModel> preset_models(const Ket2 &psi, const std::vector<double> &detunings) {
    std::vector<AtomModel> out;
    for (double d : detunings) {
        out.emplace_back(ModelParams(1.0, d), PulseEnvelope::square(0.5), psi);
        out.emplace_back(ModelParams(1.0, d), PulseEnvelope::exponential(0.5), psi);
    }
    return out;
}

Outcome povm_completeness(const VerifyOptions &) {
    double worst = 0.0;
    for (const auto &m : preset_models(Ket2::ground(), {0.0, 0.5}))
        for (double t : linspace(0.0, 6.0, 50)) {
            const PovmSet p = povm(m, t);
            worst = std::max(worst, max_abs_diff(p.m0 + p.m1 + p.m2, Operator2::identity()));
        }
    return {worst, "max |M0 + M1 + M2 - 1| over 50 times, 2 pulses, 2 detunings"};
}

Outcome povm_positivity(const VerifyOptions &) {
    double worst = 0.0;
    for (const auto &m : preset_models(Ket2::ground(), {0.0, 0.5}))
        for (double t : linspace(0.0, 6.0, 50)) {
            const PovmSet p = povm(m, t);
            for (const Operator2 *e : {&p.m0, &p.m1, &p.m2})
                worst = std::max(worst, -eigen_hermitian(*e).values[0]);
        }
    return {std::max(0.0, worst), "largest negative eigenvalue of any POVM element"};
}

Outcome appendix_identities(const VerifyOptions &) {
    const AtomModel cases[] = {
        {ModelParams(1.0, 0.0), PulseEnvelope::square(0.5), Ket2::ground()},
        {ModelParams(1.0, 0.0), PulseEnvelope::exponential(0.5), Ket2::ground()},
        {ModelParams(1.0, 0.4), PulseEnvelope::exponential(1.0), Ket2::ground()},
    };
    double worst = 0.0;
    for (const auto &m : cases)
        for (double t : {0.5, 2.0, 6.0})
            worst = std::max(worst, verify_appendix_identities(m, t).max());
    return {worst, "nested quadrature against closed overlaps, t in {0.5, 2, 6}"};
}

Outcome apriori_three_routes(const VerifyOptions &) {
    const auto grid = linspace(0.0, 5.0, 6);
    double worst = 0.0;
    for (const Ket2 &psi : {Ket2::ground(), Ket2::excited(), Ket2::plus()})
        for (const auto &m : preset_models(psi, {0.0})) {
            const auto ode = integrate_hierarchy(m, grid);
            for (std::size_t i = 0; i < grid.size(); ++i) {
                const Operator2 closed = hermitian_part(apriori_closed_form(m, grid[i]));
                const Operator2 counting = hermitian_part(apriori_from_counting(m, grid[i]));
                const Operator2 hier = hermitian_part(ode[i].varrho);
                worst = std::max({worst, trace_distance(closed, hier), trace_distance(closed, counting),
                                  trace_distance(hier, counting)});
            }
        }
    return {worst, "pairwise trace distance: closed form, hierarchy ODE, counting sum"};
}

Outcome no_count_limits(const VerifyOptions &) {
    double worst = 0.0;
    for (const auto &m : preset_models(Ket2::ground(), {0.0})) {
        worst = std::max(worst, std::abs(count_probs(m, 0.0).p0 - 1.0));
        worst = std::max(worst, count_probs(m, 40.0).p0);
    }
    return {worst, "|P_0(0) - 1| and P_40(0)"};
}

Outcome mean_count_limit(const VerifyOptions &) {
    double worst = 0.0;
    for (const Ket2 &psi : {Ket2::ground(), Ket2::excited()})
        for (const auto &m : preset_models(psi, {0.0}))
            worst = std::max(worst, std::abs(count_probs(m, 40.0).mean - (1.0 + m.rho_ee())));
    return {worst, "|mean(40) - (1 + <e|rho0|e>)|"};
}

Outcome mandel_ground(const VerifyOptions &) {
    double worst = 0.0;
    for (const auto &m : preset_models(Ket2::ground(), {0.0, 0.5}))
        for (double t : linspace(0.1, 20.0, 40)) {
            const CountStatistics s = count_probs(m, t);
            worst = std::max(worst, std::abs(*s.mandel_q + s.mean));
        }
    return {worst, "|Q_t + mean_t| for a ground-state start"};
}

Outcome density_one(const VerifyOptions &) {
    double worst = 0.0;
    for (const Ket2 &psi : {Ket2::ground(), Ket2::excited()})
        for (const auto &m : preset_models(psi, {0.0, 0.5})) {
            QuadOptions q;
            q.abs_tol = 1e-10;
            const double T = detection_horizon(m);
            const double total = integrate_piecewise<double>([&](double t1) { return p_one(m, t1); },
                                                             0.0, T, m.pulse().breakpoints(), q);
            worst = std::max(worst, std::abs(total - 1.0));
        }
    return {worst, "|int p(t1) dt1 - 1| for ground and excited starts"};
}

Outcome density_two(const VerifyOptions &) {
    double worst = 0.0;
    for (const auto &m : preset_models(Ket2::excited(), {0.0, 0.5})) {
        const double T = detection_horizon(m);
        const auto breaks = m.pulse().breakpoints();
        QuadOptions outer;
        outer.abs_tol = 1e-10;
        QuadOptions inner = outer;
        inner.abs_tol = 1e-12;
        const double total = integrate_piecewise<double>(
            [&](double t2) {
                return integrate_piecewise<double>([&](double t1) { return p_two(m, t1, t2); }, 0.0,
                                                   t2, breaks, inner);
            },
            0.0, T, breaks, outer);
        worst = std::max(worst, std::abs(total - 1.0));
    }
    return {worst, "|iint p(t2, t1) - 1| for an excited start"};
}

Outcome collision_order(const VerifyOptions &) {
    double worst = 0.0;
    for (const auto &m : preset_models(Ket2::plus(), {0.0})) {
        const ConvergenceResult r = convergence_study(m, {4e-3, 2e-3, 1e-3}, 10.0);
        worst = std::max(worst, std::abs(r.fitted_order - 1.0));
    }
    return {worst, "|fitted order - 1| on the all-zero record"};
}

Outcome monte_carlo_counts(const VerifyOptions &opt) {
    const AtomModel m(ModelParams(1.0, 0.0), PulseEnvelope::exponential(0.5), Ket2::excited());
    SdeConfig cfg;
    cfg.dt = 2e-3;
    cfg.t_end = 10.0;
    cfg.n_traj = opt.n_traj;
    cfg.seed0 = opt.seed;
    cfg.threads = opt.threads;
    const EnsembleResult ens = ensemble_average(m, cfg);
    const CountStatistics exact = count_probs(m, cfg.t_end);
    const double n = static_cast<double>(ens.n_traj);
    const double p[3] = {exact.p0, exact.p1, exact.p2};
    double worst = 0.0;
    for (std::size_t k = 0; k < 3; ++k) {
        const double sigma = std::sqrt(std::max(p[k] * (1.0 - p[k]), 1e-300) / n);
        worst = std::max(worst, std::abs(static_cast<double>(ens.samples.back().counts[k]) / n - p[k]) / sigma);
    }
    if (ens.violations.three_jumps > 0)
        worst = INFINITY;
    return {worst, "largest binomial z-score of the count histogram at t = 10"};
}

const std::vector<Check> &checks() {
    static const std::vector<Check> list = {
        {"povm_completeness", 1e-9, false, povm_completeness},
        {"povm_positivity", 1e-10, false, povm_positivity},
        {"appendix_identities", 1e-7, false, appendix_identities},
        {"apriori_three_routes", 1e-6, false, apriori_three_routes},
        {"no_count_limits", 1e-6, false, no_count_limits},
        {"mean_count_limit", 1e-3, false, mean_count_limit},
        {"mandel_ground", 1e-9, false, mandel_ground},
        {"density_one", 1e-6, false, density_one},
        {"density_two", 1e-6, false, density_two},
        {"collision_order", 0.2, false, collision_order},
        {"monte_carlo_counts", 4.0, true, monte_carlo_counts},
    };
    return list;
}

} // namespace

std::vector<std::string> verify_check_names() {
    std::vector<std::string> names;
    for (const auto &c : checks())
        names.emplace_back(c.name);
    return names;
}

std::vector<CheckResult> run_verify(const VerifyOptions &opt) {
    if (opt.corrupt) {
        const auto names = verify_check_names();
        if (std::find(names.begin(), names.end(), *opt.corrupt) == names.end())
            throw InvalidArgument("verify: unknown check '" + *opt.corrupt + "'");
    }
    std::vector<CheckResult> out;
    for (const auto &c : checks()) {
        CheckResult r;
        r.name = c.name;
        r.tolerance = opt.corrupt && *opt.corrupt == c.name ? -1.0 : c.tolerance;
        r.stochastic = c.stochastic;
        try {
            const Outcome o = c.run(opt);
            r.residual = o.residual;
            r.detail = o.detail;
            r.passed = o.residual <= r.tolerance;
        } catch (const NumericError &e) {
            r.residual = INFINITY;
            r.detail = e.what();
            r.passed = false;
        }
        out.push_back(std::move(r));
    }
    return out;
}

Table verify_table(const std::vector<CheckResult> &results) {
    Table table("verify/1", {"check", "residual", "tolerance", "passed", "stochastic", "detail"});
    for (const auto &r : results)
        table.add_row({r.name, r.residual, r.tolerance, static_cast<long long>(r.passed),
                       static_cast<long long>(r.stochastic), r.detail});
    return table;
}

} // namespace sphoton
