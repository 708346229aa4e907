#include <doctest.h>

#include <cstring>

#include "oracles.hpp"
#include "sphoton/apriori.hpp"
#include "sphoton/errors.hpp"
#include "sphoton/filter.hpp"
#include "sphoton/povm.hpp"

using namespace sphoton;

namespace {

const ModelParams kResonant(1.0, 0.0);
constexpr double kNoJump = 1.0 - 1e-16;

PulseEnvelope delayed_triangle(double start) {
    return PulseEnvelope::tabulated({start, start + 1.0, start + 2.0}, {0.0, std::sqrt(1.5), 0.0});
}

/// Intensity before clipping.
double raw_intensity(const FilterState &s, const AtomModel &m) {
    const Operator2 L = m.coupling(), Ld = dagger(L);
    const Complex xi = m.pulse().eval_from_above(s.t);
    return (trace(Ld * L * s.rho) + std::conj(xi) * trace(L * s.rho10) + xi * trace(s.rho01 * Ld) +
            std::norm(xi) * trace(s.rho00))
        .real();
}

bool same_bits(const Operator2 &a, const Operator2 &b) { return std::memcmp(&a, &b, sizeof(Operator2)) == 0; }

/// Linear no-jump equations, written out independently, over one step by fine RK4.
struct Triple {
    Operator2 rho, rho01, rho00;
};
Triple exact_no_jump(const Triple &y0, const AtomModel &m, double t0, double dt) {
    const Operator2 H = m.hamiltonian(), L = m.coupling(), Ld = dagger(L);
    auto N = [&](const Operator2 &x) { return -I_UNIT * (H * x - x * H) - 0.5 * (Ld * L * x + x * Ld * L); };
    auto rate = [&](const Triple &y, double t) {
        const Complex xi = m.pulse().eval(t);
        return Triple{N(y.rho) - xi * (Ld * y.rho01) - std::conj(xi) * (dagger(y.rho01) * L) - std::norm(xi) * y.rho00,
                      N(y.rho01) - std::conj(xi) * (y.rho00 * L), N(y.rho00)};
    };
    auto axpy = [](const Triple &y, double h, const Triple &k) {
        return Triple{y.rho + h * k.rho, y.rho01 + h * k.rho01, y.rho00 + h * k.rho00};
    };
    Triple y = y0;
    const int n = 200;
    const double h = dt / n;
    for (int i = 0; i < n; ++i) {
        const double t = t0 + i * h;
        const Triple k1 = rate(y, t), k2 = rate(axpy(y, h / 2, k1), t + h / 2), k3 = rate(axpy(y, h / 2, k2), t + h / 2),
                     k4 = rate(axpy(y, h, k3), t + h);
        y = axpy(axpy(axpy(axpy(y, h / 6, k1), h / 3, k2), h / 3, k3), h / 6, k4);
    }
    return y;
}

double fitted_slope(const std::vector<double> &x, const std::vector<double> &y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// A state along the no-jump branch with every term of the drift active.
FilterState midway(const AtomModel &m, double t, double dt) {
    FilterState s = initial_filter_state(m);
    while (s.t < t - 1e-12)
        s = filter_step(s, m, dt, kNoJump);
    return s;
}

} // namespace

TEST_SUITE("filter") {

TEST_CASE("ground state without field is stationary") {
    const AtomModel vac(kResonant, PulseEnvelope::vacuum(), Ket2::ground());
    FilterState s = initial_filter_state(vac);
    CHECK(s.k == 0.0);
    for (int i = 0; i < 100; ++i)
        s = filter_step(s, vac, 1e-2, 0.0);
    CHECK(s.jumps == 0);
    CHECK(max_abs_diff(s.rho, ops::projector_g()) == 0.0);
    CHECK(s.k == 0.0);
}

TEST_CASE("spontaneous emission ahead of the pulse") {
    const AtomModel e(kResonant, delayed_triangle(20.0), Ket2::excited());
    const double dt = 1e-3;
    FilterState s = initial_filter_state(e);
    double survival = 1.0;
    for (int i = 0; i < 3000; ++i) {
        const StepBranches b = filter_branches(s, e, dt);
        survival *= 1.0 - b.jump_probability;
        s = b.drift;
    }
    CHECK(survival == doctest::Approx(std::exp(-3.0)).epsilon(2e-3 * 3.0));
    CHECK(max_abs_diff(s.rho, ops::projector_e()) <= 1e-12);
    const FilterState j = filter_step(s, e, dt, 0.0);
    CHECK(j.jumps == 1);
    CHECK(max_abs_diff(j.rho, ops::projector_g()) <= 1e-15);
}

TEST_CASE("one-step mean reproduces the a-priori drift to second order") {
    const AtomModel m(ModelParams(1.0, 0.3), PulseEnvelope::exponential(0.5), Ket2::plus());
    const FilterState s = midway(m, 0.8, 1e-3);
    REQUIRE(s.k > 0.1);
    const HierarchyState h{s.rho, s.rho01, s.rho10, s.rho00, s.t};
    const Operator2 rate = hierarchy_rate(m, h, m.pulse().eval(s.t));
    std::vector<double> dts{4e-3, 2e-3, 1e-3}, errs;
    for (double dt : dts) {
        const StepBranches b = filter_branches(s, m, dt);
        const Operator2 mean = b.jump_probability * b.jump.rho + (1.0 - b.jump_probability) * b.drift.rho;
        errs.push_back(max_abs_diff(mean, s.rho + dt * rate));
    }
    CHECK(errs.back() <= 1e-5);
    const double slope = fitted_slope(dts, errs);
    CHECK(slope >= 1.8);
    CHECK(slope <= 2.2);
}

TEST_CASE("property: per-step drift error is second order in dt") {
    // explicit Euler leaves an O(dt^2) local error in the state and in its trace
    const AtomModel m(ModelParams(1.0, 0.2), PulseEnvelope::exponential(0.5), Ket2::plus());
    const FilterState s = midway(m, 1.5, 1e-3);
    std::vector<double> dts{4e-3, 2e-3, 1e-3}, state_err, trace_err;
    for (double dt : dts) {
        const FilterState e = filter_step(s, m, dt, kNoJump, FilterMode::linear);
        const Triple ref = exact_no_jump({s.rho, s.rho01, s.rho00}, m, s.t, dt);
        state_err.push_back(std::max({max_abs_diff(e.rho, ref.rho), max_abs_diff(e.rho01, ref.rho01),
                                      max_abs_diff(e.rho00, ref.rho00)}));
        trace_err.push_back(std::abs(trace(e.rho - ref.rho)));
    }
    for (const auto *errs : {&state_err, &trace_err}) {
        const double slope = fitted_slope(dts, *errs);
        CHECK(slope >= 1.8);
        CHECK(slope <= 2.2);
    }
}

TEST_CASE("property: normalized drift preserves the trace to roundoff") {
    const AtomModel m(ModelParams(1.0, 0.2), PulseEnvelope::square(0.5), Ket2::plus());
    FilterState s = initial_filter_state(m);
    for (int i = 0; i < 5000; ++i) {
        const StepBranches b = filter_branches(s, m, 1e-3);
        CHECK(std::abs(trace(b.drift.rho).real() - 1.0) <= 1e-12);
        CHECK(max_abs_diff(b.drift.rho10, dagger(b.drift.rho01)) == 0.0);
        s = b.drift;
    }
}

TEST_CASE("property: the cross term is linear in the rho00 seed") {
    const AtomModel m(ModelParams(1.0, 0.4), PulseEnvelope::exponential(0.5), Ket2::plus());
    FilterState a = initial_filter_state(m);
    FilterState b = a;
    b.rho00 = 2.0 * a.rho00;
    for (int i = 0; i < 3000; ++i) {
        a = filter_step(a, m, 1e-3, kNoJump, FilterMode::linear);
        b = filter_step(b, m, 1e-3, kNoJump, FilterMode::linear);
        CHECK(max_abs_diff(b.rho01, 2.0 * a.rho01) <= 1e-14 * (1.0 + max_abs(a.rho01)));
    }
    CHECK(max_abs(a.rho01) > 1e-2);
}

TEST_CASE("trajectories are deterministic in the seed") {
    const AtomModel m(kResonant, PulseEnvelope::exponential(0.5), Ket2::excited());
    SdeConfig cfg;
    cfg.t_end = 8.0;
    cfg.output_grid = {1.0, 4.0, 8.0};
    const TrajectoryRecord a = run_trajectory(m, cfg, 42), b = run_trajectory(m, cfg, 42);
    CHECK(a.jump_times == b.jump_times);
    REQUIRE(a.samples.size() == 3);
    for (std::size_t i = 0; i < 3; ++i)
        CHECK(same_bits(a.samples[i].rho, b.samples[i].rho));
    CHECK(a.integrated_intensity == b.integrated_intensity);
    for (std::size_t i = 1; i < a.jump_times.size(); ++i)
        CHECK(a.jump_times[i] > a.jump_times[i - 1]);

    cfg.n_traj = 300;
    cfg.threads = 1;
    const EnsembleResult e1 = ensemble_average(m, cfg);
    cfg.threads = 3;
    const EnsembleResult e3 = ensemble_average(m, cfg);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(same_bits(e1.samples[i].mean, e3.samples[i].mean));
        CHECK(e1.samples[i].counts == e3.samples[i].counts);
    }
    cfg.n_traj = 50;
    CHECK_THROWS_AS(ensemble_average(m, cfg), InvalidArgument);
}

TEST_CASE("first detection times follow the one-count density") {
    const AtomModel m(kResonant, PulseEnvelope::square(0.5), Ket2::ground());
    SdeConfig cfg;
    cfg.t_end = 8.0;
    const std::size_t n = 10000;
    std::vector<double> first;
    std::size_t clicked = 0, total_jumps = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const TrajectoryRecord r = run_trajectory(m, cfg, trajectory_seed(cfg.seed0, i));
        first.push_back(r.jump_times.empty() ? INFINITY : r.jump_times.front());
        clicked += !r.jump_times.empty();
        total_jumps += r.jump_times.size();
    }
    const double p = 1.0 - prob_no_count(m, cfg.t_end);
    const double sigma = std::sqrt(p * (1 - p) / n);
    CHECK(std::abs(static_cast<double>(clicked) / n - p) <= 3 * sigma);
    const double d = oracle::ks_distance(first, [&](double t) { return 1.0 - prob_no_count(m, t); });
    CHECK(d <= 1.628 / std::sqrt(static_cast<double>(n)));
    // a ground start can click at most once
    CHECK(total_jumps == clicked);
}

TEST_CASE("ensemble counts, intensity and Mandel Q from an excited start") {
    const AtomModel m(kResonant, PulseEnvelope::exponential(0.5), Ket2::excited());
    SdeConfig cfg;
    cfg.n_traj = 10000;
    cfg.t_end = 10.0;
    cfg.output_grid = {5.0, 10.0};
    cfg.seed0 = 7;
    const EnsembleResult ens = ensemble_average(m, cfg);
    CHECK(ens.violations.three_jumps == 0);
    const double n = static_cast<double>(ens.n_traj);
    for (const EnsembleSample &s : ens.samples) {
        const CountStatistics exact = count_probs(m, s.t);
        const double p2 = exact.p2;
        CHECK(std::abs(s.counts[2] / n - p2) <= 3 * std::sqrt(p2 * (1 - p2) / n));
        CHECK(std::abs(s.mean_jumps - exact.mean) <= 3 * s.mean_jumps_stderr);
        CHECK(std::abs(s.mean_integrated_intensity - exact.mean) <= 3 * s.integrated_intensity_stderr);
    }
    // Mandel Q at t = 5 with a delta-method standard error
    const EnsembleSample &s = ens.samples.front();
    const double f1 = s.counts[1] / n, f2 = s.counts[2] / n;
    const double m1 = f1 + 2 * f2, m2 = f1 + 4 * f2;
    const double q = (m2 - m1 * m1) / m1 - 1.0;
    // dQ/df1 and dQ/df2 through m1 and m2
    const double dq_dm1 = -m2 / (m1 * m1) - 1.0, dq_dm2 = 1.0 / m1;
    const double g1 = dq_dm1 + dq_dm2, g2 = 2 * dq_dm1 + 4 * dq_dm2;
    const double var = (g1 * g1 * f1 * (1 - f1) + g2 * g2 * f2 * (1 - f2) - 2 * g1 * g2 * f1 * f2) / n;
    const double q_exact = *count_probs(m, 5.0).mandel_q;
    CHECK(std::abs(q - q_exact) <= 3 * std::sqrt(var));
}

TEST_CASE("a third detection is structurally impossible") {
    const AtomModel m(kResonant, PulseEnvelope::exponential(0.5), Ket2::excited());
    FilterState s = initial_filter_state(m);
    s = filter_step(s, m, 1e-3, 0.0);
    for (int i = 0; i < 500; ++i)
        s = filter_step(s, m, 1e-3, kNoJump);
    s = filter_step(s, m, 1e-3, 0.0);
    REQUIRE(s.jumps == 2);
    CHECK(max_abs(s.rho01) == 0.0);
    CHECK(max_abs(s.rho00) == 0.0);
    for (int i = 0; i < 2000; ++i) {
        s = filter_step(s, m, 1e-3, 0.0);
        CHECK(s.k == 0.0);
    }
    CHECK(s.jumps == 2);
}

TEST_CASE("property: no trajectory records three jumps in 1e5 runs") {
    std::uint64_t runs = 0, two = 0;
    for (const Ket2 &psi : {Ket2::ground(), Ket2::excited()})
        for (const auto &p : {PulseEnvelope::square(0.5), PulseEnvelope::exponential(0.5)}) {
            const AtomModel m(kResonant, p, psi);
            SdeConfig cfg;
            cfg.dt = 1e-2;
            cfg.t_end = 10.0;
            cfg.n_traj = 25000;
            const EnsembleResult ens = ensemble_average(m, cfg);
            CHECK(ens.violations.three_jumps == 0);
            runs += ens.n_traj;
            two += ens.samples.back().counts[2];
        }
    CHECK(runs == 100000);
    CHECK(two > 0);
}

TEST_CASE("the no-jump branch undershoots k = 0 by O(dt)") {
    // Exact k touches zero where the one-count density vanishes; Euler overshoots.
    const AtomModel m(kResonant, PulseEnvelope::exponential(0.5), Ket2::ground());
    const double t_zero = 4.0 * std::log(4.0 / 3.0);
    CHECK(p_one(m, t_zero) <= 1e-15);
    std::vector<double> dts{2e-3, 1e-3, 5e-4}, dips;
    for (double dt : dts) {
        FilterState s = initial_filter_state(m);
        double low = INFINITY;
        while (s.t < 3.0) {
            s = filter_step(s, m, dt, kNoJump);
            low = std::min(low, raw_intensity(s, m));
        }
        CHECK(low < 0.0);
        dips.push_back(-low);
    }
    const double slope = fitted_slope(dts, dips);
    CHECK(slope >= 0.9);
    CHECK(slope <= 1.1);
}

TEST_CASE("literal filter invariants: k >= -1e-12 and rho PSD within 1e-8" * doctest::should_fail()) {
    // Not attainable with explicit Euler at dt = 1e-3; see the case above.
    const AtomModel m(kResonant, PulseEnvelope::square(0.5), Ket2::ground());
    SdeConfig cfg;
    cfg.n_traj = 200;
    const EnsembleResult ens = ensemble_average(m, cfg);
    CHECK(ens.violations.negative_intensity == 0);
    CHECK(ens.violations.not_psd == 0);
}

TEST_CASE("config validation and warnings") {
    SdeConfig cfg;
    cfg.dt = 0.0;
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
    const AtomModel m(kResonant, PulseEnvelope::square(0.5), Ket2::excited());
    SdeConfig coarse;
    coarse.dt = 0.1;
    coarse.n_traj = 100;
    coarse.t_end = 2.0;
    const EnsembleResult ens = ensemble_average(m, coarse);
    CHECK(ens.max_jump_probability > 0.05);
    CHECK_FALSE(ens.warnings.empty());
}

}
