#include "sphoton/filter.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <string>
#include <thread>

#include "sphoton/errors.hpp"
#include "sphoton/rng.hpp"
#include "sphoton/table.hpp"

namespace sphoton {

namespace {

constexpr double kIntensityFloor = 1e-12;
constexpr double kPsdFloor = 1e-8;
constexpr std::size_t kBlock = 64;

/// tr(a b) without forming the product.
Complex trace_product(const Operator2 &a, const Operator2 &b) {
    return a(0, 0) * b(0, 0) + a(0, 1) * b(1, 0) + a(1, 0) * b(0, 1) + a(1, 1) * b(1, 1);
}

/// Operators of the model, fixed for a whole run.
struct Generator {
    Operator2 L, Ld, LdL, H;
    /// H and L^dag L are diagonal, so the no-jump generator acts entrywise.
    Operator2 c;
    double l; ///< L = l |g><e|

    explicit Generator(const AtomModel &m)
        : L(m.coupling()), Ld(dagger(L)), LdL(Ld * L), H(m.hamiltonian()), l(L(0, 1).real()) {
        for (std::size_t i = 0; i < 2; ++i)
            for (std::size_t j = 0; j < 2; ++j)
                c(i, j) = -I_UNIT * (H(i, i) - H(j, j)) - 0.5 * (LdL(i, i) + LdL(j, j));
    }

    // -i[H, x] - 1/2 {L^dag L, x}: the part of the Lindbladian that survives
    // once the jump terms L x L^dag cancel against the counting compensator
    Operator2 no_jump(const Operator2 &x) const {
        Operator2 r;
        for (std::size_t i = 0; i < 4; ++i)
            r.a[i] = c.a[i] * x.a[i];
        return r;
    }

    double raw_intensity(const FilterState &s, Complex xi) const {
        return (trace_product(LdL, s.rho) + std::conj(xi) * trace_product(L, s.rho10) +
                xi * trace_product(s.rho01, Ld) + std::norm(xi) * trace(s.rho00))
            .real();
    }
};

double clip_intensity(double k, InvariantViolations *v) {
    if (k >= 0.0)
        return k;
    if (k < -kIntensityFloor && v)
        ++v->negative_intensity;
    return 0.0;
}

double min_eigenvalue(const Operator2 &r) {
    const double a = r(0, 0).real();
    const double d = r(1, 1).real();
    const double h = 0.5 * (a - d);
    return 0.5 * (a + d) - std::sqrt(h * h + std::norm(r(0, 1)));
}

void apply_jump(FilterState &s, const Generator &g, Complex xi, double k) {
    const double inv = 1.0 / k;
    const Operator2 rho = g.L * s.rho * g.Ld + std::conj(xi) * (g.L * s.rho10) +
                          xi * (s.rho01 * g.Ld) + std::norm(xi) * s.rho00;
    const Operator2 rho01 = g.L * s.rho01 * g.Ld + std::conj(xi) * (g.L * s.rho00);
    s.rho = inv * rho;
    s.rho01 = inv * rho01;
    s.rho00 = inv * (g.L * s.rho00 * g.Ld);
    ++s.jumps;
}

void apply_drift(FilterState &s, const Generator &g, Complex xi, double k, double dt,
                 FilterMode mode) {
    // dn = 0 branch of the filter; the L x L^dag and xi cross terms of the
    // Lindbladian and of the jump map cancel, leaving
    //   d rho   = N(rho) - xi L^dag rho01 - xi^* rho10 L - |xi|^2 rho00 + k rho
    //   d rho01 = N(rho01) - xi^* rho00 L + k rho01
    //   d rho00 = N(rho00) + k rho00
    // with N the no-jump generator. L = l |g><e| is written out entrywise.
    const double kk = mode == FilterMode::normalized ? k : 0.0;
    const Complex a = xi * g.l;
    const Complex b = std::conj(xi) * g.l;
    const double x2 = std::norm(xi);
    Operator2 d_rho, d_rho01, d_rho00;
    for (std::size_t i = 0; i < 4; ++i) {
        const Complex ci = g.c.a[i] + kk;
        d_rho.a[i] = ci * s.rho.a[i] - x2 * s.rho00.a[i];
        d_rho01.a[i] = ci * s.rho01.a[i];
        d_rho00.a[i] = ci * s.rho00.a[i];
    }
    d_rho(1, 0) -= a * s.rho01(0, 0);
    d_rho(1, 1) -= a * s.rho01(0, 1) + b * s.rho10(1, 0);
    d_rho(0, 1) -= b * s.rho10(0, 0);
    d_rho01(0, 1) -= b * s.rho00(0, 0);
    d_rho01(1, 1) -= b * s.rho00(1, 0);
    s.rho += dt * d_rho;
    s.rho01 += dt * d_rho01;
    s.rho00 += dt * d_rho00;
}

void finish_step(FilterState &s, FilterMode mode) {
    if (mode == FilterMode::normalized) {
        const double tr = trace(s.rho).real();
        if (!(std::isfinite(tr) && tr > 0.0))
            throw IntegrationFailure("filter_step: state lost normalization at t = " +
                                         std::to_string(s.t),
                                     s.rho);
        const double inv = 1.0 / tr;
        s.rho *= inv;
        s.rho01 *= inv;
        s.rho00 *= inv;
    } else if (!is_finite(s.rho) || !is_finite(s.rho01) || !is_finite(s.rho00)) {
        throw IntegrationFailure("filter_step: non-finite state at t = " + std::to_string(s.t), s.rho);
    }
    s.rho10 = dagger(s.rho01);
}

/// Single step with xi already sampled. Returns the intensity used for the draw.
double advance(FilterState &s, const Generator &g, Complex xi, double dt, double u, FilterMode mode,
               InvariantViolations *v) {
    const double k = clip_intensity(g.raw_intensity(s, xi), v);
    if (u < k * dt)
        apply_jump(s, g, xi, k);
    else
        apply_drift(s, g, xi, k, dt, mode);
    finish_step(s, mode);
    return k;
}

struct RunPlan {
    long n_steps = 0;
    std::vector<long> sample_steps;
    std::vector<Complex> xi;
};

RunPlan make_plan(const AtomModel &model, const SdeConfig &cfg) {
    cfg.validate();
    RunPlan plan;
    plan.n_steps = std::max(1L, std::lround(cfg.t_end / cfg.dt));
    if (cfg.output_grid.empty())
        plan.sample_steps.push_back(plan.n_steps);
    for (double t : cfg.output_grid)
        plan.sample_steps.push_back(std::min(plan.n_steps, std::lround(t / cfg.dt)));
    plan.xi.resize(static_cast<std::size_t>(plan.n_steps) + 1);
    for (long i = 0; i <= plan.n_steps; ++i)
        plan.xi[static_cast<std::size_t>(i)] =
            model.pulse().eval_from_above(static_cast<double>(i) * cfg.dt);
    return plan;
}

/// Observer receives (sample index, state, integrated intensity). Returns
/// int_0^t_end k ds.
template <class Observer>
double simulate(const AtomModel &model, const Generator &g, const RunPlan &plan, double dt,
              std::uint64_t seed, std::vector<double> *jump_times, InvariantViolations &v,
              double &max_kdt, Observer &&observe) {
    const CounterRng rng(seed);
    FilterState s = initial_filter_state(model);
    double integrated = 0.0;
    std::size_t next = 0;
    auto emit = [&](long step) {
        while (next < plan.sample_steps.size() && plan.sample_steps[next] == step) {
            s.k = clip_intensity(g.raw_intensity(s, plan.xi[static_cast<std::size_t>(step)]), nullptr);
            observe(next, s, integrated);
            ++next;
        }
    };
    emit(0);
    for (long i = 0; i < plan.n_steps; ++i) {
        const int before = s.jumps;
        const double u = rng.uniform(static_cast<std::uint64_t>(i));
        const double k = advance(s, g, plan.xi[static_cast<std::size_t>(i)], dt, u,
                                 FilterMode::normalized, &v);
        const double t0 = static_cast<double>(i) * dt;
        s.t = static_cast<double>(i + 1) * dt;
        integrated += k * dt;
        max_kdt = std::max(max_kdt, k * dt);
        if (s.jumps != before) {
            if (jump_times)
                jump_times->push_back(t0);
            if (s.jumps == 3)
                ++v.three_jumps;
        }
        if (min_eigenvalue(s.rho) < -kPsdFloor)
            ++v.not_psd;
        emit(i + 1);
    }
    return integrated;
}

} // namespace

FilterState initial_filter_state(const AtomModel &model) {
    FilterState s;
    s.rho = model.rho0();
    s.rho00 = model.rho0();
    s.t = 0.0;
    s.k = intensity(s, model, model.pulse().eval_from_above(0.0));
    return s;
}

double intensity(const FilterState &s, const AtomModel &model, Complex xi) {
    return clip_intensity(Generator(model).raw_intensity(s, xi), nullptr);
}

FilterState filter_step(const FilterState &s, const AtomModel &model, double dt, double u,
                        FilterMode mode) {
    if (!(dt > 0.0))
        throw InvalidArgument("filter_step: dt must be positive");
    const Generator g(model);
    FilterState out = s;
    advance(out, g, model.pulse().eval_from_above(s.t), dt, u, mode, nullptr);
    out.t = s.t + dt;
    out.k = intensity(out, model, model.pulse().eval_from_above(out.t));
    return out;
}

StepBranches filter_branches(const FilterState &s, const AtomModel &model, double dt) {
    StepBranches b;
    const double k = intensity(s, model, model.pulse().eval_from_above(s.t));
    b.jump_probability = k * dt;
    b.drift = filter_step(s, model, dt, 1.0);
    if (k > 0.0)
        b.jump = filter_step(s, model, dt, 0.0);
    else
        b.jump = b.drift;
    return b;
}

void SdeConfig::validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt))
        throw InvalidArgument("SdeConfig: dt must be positive");
    if (!(t_end > 0.0) || !std::isfinite(t_end))
        throw InvalidArgument("SdeConfig: t_end must be positive");
    if (n_traj == 0)
        throw InvalidArgument("SdeConfig: n_traj must be positive");
    for (std::size_t i = 0; i < output_grid.size(); ++i) {
        const double t = output_grid[i];
        if (!(t >= 0.0 && t <= t_end * (1.0 + 1e-12)))
            throw InvalidArgument("SdeConfig: output times must lie in [0, t_end]");
        if (i > 0 && !(t > output_grid[i - 1]))
            throw InvalidArgument("SdeConfig: output times must increase");
    }
}

std::uint64_t trajectory_seed(std::uint64_t seed0, std::uint64_t i) { return derive_key(seed0, i); }

TrajectoryRecord run_trajectory(const AtomModel &model, const SdeConfig &cfg, std::uint64_t seed) {
    const RunPlan plan = make_plan(model, cfg);
    const Generator g(model);
    TrajectoryRecord rec;
    rec.seed = seed;
    rec.samples.reserve(plan.sample_steps.size());
    InvariantViolations v;
    double max_kdt = 0.0;
    rec.integrated_intensity =
        simulate(model, g, plan, cfg.dt, seed, &rec.jump_times, v, max_kdt,
                 [&](std::size_t, const FilterState &s, double) { rec.samples.push_back(s); });
    if (v.three_jumps > 0)
        throw NumericError("run_trajectory: more than two jumps recorded for seed " +
                           std::to_string(seed));
    return rec;
}

namespace {

struct Partial {
    std::vector<Operator2> sum;
    std::vector<std::array<double, 8>> sum_sq;
    std::vector<std::array<std::uint64_t, 3>> counts;
    std::vector<double> jumps, jumps_sq, integ, integ_sq;
    InvariantViolations v;
    double max_kdt = 0.0;

    explicit Partial(std::size_t n)
        : sum(n), sum_sq(n), counts(n), jumps(n), jumps_sq(n), integ(n), integ_sq(n) {}

    void merge(const Partial &o) {
        for (std::size_t j = 0; j < sum.size(); ++j) {
            sum[j] += o.sum[j];
            for (std::size_t e = 0; e < 8; ++e)
                sum_sq[j][e] += o.sum_sq[j][e];
            for (std::size_t m = 0; m < 3; ++m)
                counts[j][m] += o.counts[j][m];
            jumps[j] += o.jumps[j];
            jumps_sq[j] += o.jumps_sq[j];
            integ[j] += o.integ[j];
            integ_sq[j] += o.integ_sq[j];
        }
        v.three_jumps += o.v.three_jumps;
        v.negative_intensity += o.v.negative_intensity;
        v.not_psd += o.v.not_psd;
        max_kdt = std::max(max_kdt, o.max_kdt);
    }
};

double standard_error(double sum, double sum_sq, double n) {
    const double mean = sum / n;
    const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0));
    return std::sqrt(var / n);
}

} // namespace

EnsembleResult ensemble_average(const AtomModel &model, const SdeConfig &cfg) {
    if (cfg.n_traj < 100)
        throw InvalidArgument("ensemble_average: needs at least 100 trajectories");
    const RunPlan plan = make_plan(model, cfg);
    const Generator g(model);
    const std::size_t n_out = plan.sample_steps.size();
    const std::size_t n_blocks = (cfg.n_traj + kBlock - 1) / kBlock;

    std::vector<Partial> partials;
    partials.reserve(n_blocks);
    for (std::size_t b = 0; b < n_blocks; ++b)
        partials.emplace_back(n_out);

    std::atomic<std::size_t> next_block{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto worker = [&] {
        try {
            for (std::size_t b = next_block++; b < n_blocks; b = next_block++) {
                Partial &p = partials[b];
                const std::size_t end = std::min(cfg.n_traj, (b + 1) * kBlock);
                for (std::size_t i = b * kBlock; i < end; ++i) {
                    simulate(model, g, plan, cfg.dt, trajectory_seed(cfg.seed0, i), nullptr, p.v,
                             p.max_kdt, [&](std::size_t j, const FilterState &s, double integ) {
                                 p.sum[j] += s.rho;
                                 for (std::size_t e = 0; e < 4; ++e) {
                                     p.sum_sq[j][2 * e] += s.rho.a[e].real() * s.rho.a[e].real();
                                     p.sum_sq[j][2 * e + 1] += s.rho.a[e].imag() * s.rho.a[e].imag();
                                 }
                                 p.counts[j][static_cast<std::size_t>(std::min(s.jumps, 2))] += 1;
                                 p.jumps[j] += s.jumps;
                                 p.jumps_sq[j] += static_cast<double>(s.jumps * s.jumps);
                                 p.integ[j] += integ;
                                 p.integ_sq[j] += integ * integ;
                             });
                }
            }
        } catch (...) {
            const std::lock_guard lock(failure_mutex);
            if (!failure)
                failure = std::current_exception();
            next_block = n_blocks;
        }
    };

    unsigned n_threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
    n_threads = static_cast<unsigned>(std::min<std::size_t>(n_threads, n_blocks));
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned i = 0; i < n_threads; ++i)
            pool.emplace_back(worker);
        for (auto &th : pool)
            th.join();
    }
    if (failure)
        std::rethrow_exception(failure);

    Partial total(n_out);
    for (const auto &p : partials)
        total.merge(p);

    EnsembleResult r;
    r.n_traj = cfg.n_traj;
    r.violations = total.v;
    r.max_jump_probability = total.max_kdt;
    const double n = static_cast<double>(cfg.n_traj);
    for (std::size_t j = 0; j < n_out; ++j) {
        EnsembleSample s;
        s.t = static_cast<double>(plan.sample_steps[j]) * cfg.dt;
        s.mean = (1.0 / n) * total.sum[j];
        for (std::size_t e = 0; e < 4; ++e)
            s.stderr_.a[e] = {standard_error(total.sum[j].a[e].real(), total.sum_sq[j][2 * e], n),
                              standard_error(total.sum[j].a[e].imag(), total.sum_sq[j][2 * e + 1], n)};
        s.counts = total.counts[j];
        s.mean_jumps = total.jumps[j] / n;
        s.mean_jumps_stderr = standard_error(total.jumps[j], total.jumps_sq[j], n);
        s.mean_integrated_intensity = total.integ[j] / n;
        s.integrated_intensity_stderr = standard_error(total.integ[j], total.integ_sq[j], n);
        r.samples.push_back(s);
    }
    if (r.max_jump_probability > 0.05)
        r.warnings.push_back("jump probability per step reached " +
                             std::to_string(r.max_jump_probability) + "; reduce dt");
    if (r.violations.total() > 0)
        r.warnings.push_back("filter invariants violated: " +
                             std::to_string(r.violations.three_jumps) + " three-jump, " +
                             std::to_string(r.violations.negative_intensity) +
                             " negative-intensity, " + std::to_string(r.violations.not_psd) +
                             " non-PSD steps");
    return r;
}

void write_trajectories_csv(const std::filesystem::path &path,
                            const std::vector<TrajectoryRecord> &records) {
    Table table("trajectories/1", {"traj", "t", "rho_gg_re", "rho_gg_im", "rho_ge_re", "rho_ge_im",
                                   "rho_eg_re", "rho_eg_im", "rho_ee_re", "rho_ee_im", "k", "jumps"});
    for (std::size_t i = 0; i < records.size(); ++i)
        for (const auto &s : records[i].samples) {
            std::vector<Cell> row{static_cast<long long>(i), s.t};
            for (const auto &x : s.rho.a) {
                row.emplace_back(x.real());
                row.emplace_back(x.imag());
            }
            row.emplace_back(s.k);
            row.emplace_back(static_cast<long long>(s.jumps));
            table.add_row(std::move(row));
        }
    write_table(path, table, TableFormat::csv);
}

} // namespace sphoton
