#include "sphoton/collision.hpp"

#include <cmath>
#include <string>

#include "sphoton/errors.hpp"
#include "sphoton/rng.hpp"
#include "sphoton/table.hpp"

namespace sphoton {

namespace {

Operator2 block(const Operator4 &v, std::size_t out, std::size_t in) {
    Operator2 b;
    for (std::size_t r = 0; r < 2; ++r)
        for (std::size_t c = 0; c < 2; ++c)
            b(r, c) = v(2 * out + r, 2 * in + c);
    return b;
}

double record_weight(const Ket2 &alpha, const Ket2 &beta, double tail) {
    return beta.norm2() + tail * alpha.norm2();
}

} // namespace

CollisionBlocks build_blocks(double Gamma, double Delta0, double tau) {
    if (!(tau > 0.0) || !std::isfinite(tau))
        throw InvalidArgument("build_blocks: tau must be positive");
    if (!(Gamma >= 0.0) || !std::isfinite(Gamma) || !std::isfinite(Delta0))
        throw InvalidArgument("build_blocks: rates must be finite with Gamma >= 0");
    const Operator2 hs = -Delta0 * ops::sigma_z();
    const Operator2 L = std::sqrt(Gamma) * ops::sigma_minus();
    // bath sigma+ = |1><0| has the same matrix as the atomic sigma+
    const Operator4 H = kron(Operator2::identity(), hs) +
                        (I_UNIT / std::sqrt(tau)) * (kron(ops::sigma_plus(), L) -
                                                     kron(ops::sigma_minus(), dagger(L)));
    CollisionBlocks b;
    b.V = expm4((-I_UNIT * tau) * H);
    b.A00 = block(b.V, 0, 0);
    b.A01 = block(b.V, 0, 1);
    b.A10 = block(b.V, 1, 0);
    b.A11 = block(b.V, 1, 1);
    return b;
}

CollisionBlocks build_blocks(const ModelParams &params, double tau) {
    return build_blocks(params.Gamma(), params.Delta0(), tau);
}

DiscretePulse::DiscretePulse(const PulseEnvelope &pulse, double tau, std::size_t min_steps)
    : tau_(tau) {
    if (!(tau > 0.0) || !std::isfinite(tau))
        throw InvalidArgument("DiscretePulse: tau must be positive");
    const auto n = std::max<std::size_t>(
        min_steps, static_cast<std::size_t>(std::ceil(pulse.support_end() / tau - 1e-9)));
    xi_.resize(n);
    for (std::size_t k = 0; k < n; ++k)
        xi_[k] = pulse.eval_from_above(static_cast<double>(k) * tau);
    tail_.assign(n + 1, 0.0);
    for (std::size_t k = n; k-- > 0;)
        tail_[k] = tail_[k + 1] + tau * std::norm(xi_[k]);
    if (tail_[0] > 0.0) {
        scale_ = 1.0 / std::sqrt(tail_[0]);
        for (auto &x : xi_)
            x *= scale_;
        const double inv = 1.0 / tail_[0];
        for (auto &w : tail_)
            w *= inv;
    }
}

CollisionState initial_collision_state(const Ket2 &psi0, const DiscretePulse &pulse) {
    CollisionState s;
    s.tail_weight = pulse.tail(0);
    s.alpha = psi0;
    // a photon-free field puts the whole state on the vacuum branch
    if (s.tail_weight == 0.0) {
        s.beta = psi0;
        s.alpha = {};
    }
    return s;
}

CollisionBranches collision_branches(const CollisionState &s, const CollisionBlocks &b,
                                     Complex xi_j, double tau, double tail_next) {
    CollisionBranches out;
    const Complex amp = std::sqrt(tau) * xi_j;
    out.alpha[0] = b.A00 * s.alpha;
    out.beta[0] = b.A00 * s.beta + amp * (b.A01 * s.alpha);
    out.alpha[1] = b.A10 * s.alpha;
    out.beta[1] = b.A10 * s.beta + amp * (b.A11 * s.alpha);
    for (int o = 0; o < 2; ++o)
        out.weight[o] = record_weight(out.alpha[o], out.beta[o], tail_next);
    return out;
}

CollisionState collision_step(const CollisionState &s, const CollisionBlocks &blocks, Complex xi_j,
                              double tau, double tail_next, double u) {
    const CollisionBranches br = collision_branches(s, blocks, xi_j, tau, tail_next);
    const double total = br.weight[0] + br.weight[1];
    if (!(total > 0.0))
        throw DegenerateState("collision_step: both outcomes have zero weight at step " +
                              std::to_string(s.j));
    const int o = u < br.weight[1] / total ? 1 : 0;
    CollisionState next;
    next.j = s.j + 1;
    next.tail_weight = tail_next;
    next.outcomes = s.outcomes;
    next.outcomes.push_back(static_cast<std::uint8_t>(o));
    const double w = br.weight[o];
    const double norm = 1.0 / std::sqrt(w);
    next.alpha = norm * br.alpha[o];
    next.beta = norm * br.beta[o];
    next.record_weight = s.record_weight * w / total;
    return next;
}

CollisionState collision_step(const CollisionState &s, const CollisionBlocks &blocks, Complex xi_j,
                              double tau, double u) {
    const double tail_next = std::max(0.0, s.tail_weight - tau * std::norm(xi_j));
    return collision_step(s, blocks, xi_j, tau, tail_next, u);
}

namespace {

void validate(const CollisionConfig &cfg) {
    if (!(cfg.tau > 0.0))
        throw InvalidArgument("CollisionConfig: tau must be positive");
    if (cfg.n_steps == 0)
        throw InvalidArgument("CollisionConfig: n_steps must be positive");
    if (std::abs(cfg.psi0.norm2() - 1.0) > 1e-10)
        throw InvalidArgument("CollisionConfig: psi0 must be normalized");
}

} // namespace

ChainResult run_chain(const CollisionConfig &cfg, std::uint64_t seed,
                      const std::vector<std::size_t> &sample_steps) {
    validate(cfg);
    for (std::size_t s : sample_steps)
        if (s > cfg.n_steps)
            throw InvalidArgument("run_chain: sample step beyond n_steps");
    const CollisionBlocks blocks = build_blocks(cfg.params, cfg.tau);
    const DiscretePulse pulse(cfg.pulse, cfg.tau, cfg.n_steps);
    const CounterRng rng(seed);

    ChainResult out;
    out.outcomes.reserve(cfg.n_steps);
    out.record_weights.reserve(cfg.n_steps);
    CollisionState s = initial_collision_state(cfg.psi0, pulse);
    auto sample = [&] {
        for (std::size_t step : sample_steps)
            if (step == s.j) {
                CollisionState copy = s;
                copy.outcomes.clear();
                out.samples.push_back(std::move(copy));
            }
    };
    sample();
    for (std::size_t j = 0; j < cfg.n_steps; ++j) {
        s = collision_step(s, blocks, pulse.xi(j), cfg.tau, pulse.tail(j + 1), rng.uniform(j));
        out.outcomes.push_back(s.outcomes.back());
        out.record_weights.push_back(s.record_weight);
        s.outcomes.clear();
        sample();
    }
    return out;
}

std::vector<ZeroRecordSample> propagate_zero_record(const CollisionConfig &cfg,
                                                    const std::vector<std::size_t> &steps) {
    validate(cfg);
    const CollisionBlocks blocks = build_blocks(cfg.params, cfg.tau);
    const DiscretePulse pulse(cfg.pulse, cfg.tau, cfg.n_steps);
    const double sq = std::sqrt(cfg.tau);

    std::vector<ZeroRecordSample> out;
    Ket2 alpha = cfg.psi0;
    Ket2 beta{};
    std::size_t next = 0;
    auto emit = [&](std::size_t j) {
        while (next < steps.size() && steps[next] == j) {
            out.push_back({j, alpha, beta, record_weight(alpha, beta, pulse.tail(j))});
            ++next;
        }
    };
    emit(0);
    for (std::size_t j = 0; j < cfg.n_steps && next < steps.size(); ++j) {
        beta = blocks.A00 * beta + (sq * pulse.xi(j)) * (blocks.A01 * alpha);
        alpha = blocks.A00 * alpha;
        emit(j + 1);
    }
    if (next != steps.size())
        throw InvalidArgument("propagate_zero_record: steps must be increasing and <= n_steps");
    return out;
}

ConvergenceResult convergence_study(const AtomModel &model, const std::vector<double> &tau_list,
                                    double t_end, std::size_t grid_points) {
    if (!model.psi0())
        throw UnsupportedState("convergence_study: needs a pure initial state");
    if (tau_list.size() < 2)
        throw InvalidArgument("convergence_study: needs at least two step sizes");
    for (std::size_t i = 1; i < tau_list.size(); ++i)
        if (!(tau_list[i] < tau_list[i - 1]))
            throw InvalidArgument("convergence_study: tau_list must decrease");
    if (!(t_end > 0.0) || grid_points == 0)
        throw InvalidArgument("convergence_study: t_end and grid_points must be positive");

    ConvergenceResult res;
    for (double tau : tau_list) {
        CollisionConfig cfg;
        cfg.tau = tau;
        cfg.n_steps = static_cast<std::size_t>(std::llround(t_end / tau));
        cfg.pulse = model.pulse();
        cfg.params = model.params();
        cfg.psi0 = *model.psi0();

        std::vector<std::size_t> steps;
        for (std::size_t i = 1; i <= grid_points; ++i) {
            const double t = t_end * static_cast<double>(i) / static_cast<double>(grid_points);
            const auto step = static_cast<std::size_t>(std::llround(t / tau));
            if (steps.empty() || step > steps.back())
                steps.push_back(step);
        }
        double err = 0.0;
        for (const auto &z : propagate_zero_record(cfg, steps)) {
            const ConditionalPair exact = cond_zero(model, static_cast<double>(z.step) * tau);
            err = std::max({err, std::abs(z.alpha.g - exact.alpha.g), std::abs(z.alpha.e - exact.alpha.e),
                            std::abs(z.beta.g - exact.beta.g), std::abs(z.beta.e - exact.beta.e)});
        }
        res.rows.push_back({tau, err});
    }

    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    const double n = static_cast<double>(res.rows.size());
    for (const auto &r : res.rows) {
        const double x = std::log(r.tau);
        const double y = std::log(r.max_error);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    res.fitted_order = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return res;
}

void write_outcomes_csv(const std::filesystem::path &path, const ChainResult &chain) {
    Table table("collision-outcomes/1", {"step", "outcome", "record_weight"});
    for (std::size_t j = 0; j < chain.outcomes.size(); ++j)
        table.add_row({static_cast<long long>(j + 1), static_cast<long long>(chain.outcomes[j]),
                       chain.record_weights[j]});
    write_table(path, table, TableFormat::csv);
}

} // namespace sphoton
