#include <doctest.h>

#include <fstream>
#include <random>

#include "oracles.hpp"
#include "sphoton/collision.hpp"
#include "sphoton/errors.hpp"

using namespace sphoton;

namespace {

const ModelParams kResonant(1.0, 0.0);

PulseEnvelope delayed_triangle(double start) {
    return PulseEnvelope::tabulated({start, start + 1.0, start + 2.0}, {0.0, std::sqrt(1.5), 0.0});
}

double ket_diff(const Ket2 &a, const Ket2 &b) { return std::max(std::abs(a.g - b.g), std::abs(a.e - b.e)); }

} // namespace

TEST_SUITE("collision") {

TEST_CASE("blocks are unitary and match their short-time expansion") {
    for (double tau : {1e-1, 1e-2, 4e-3, 1e-3, 1e-4})
        for (double d0 : {0.0, 0.6})
            CHECK(is_unitary(build_blocks(ModelParams(1.0, d0), tau).V));
    const double tau = 1e-4;
    const ModelParams p(1.0, 0.0);
    const CollisionBlocks b = build_blocks(p, tau);
    const Operator2 H = -p.Delta0() * ops::sigma_z();
    const Operator2 L = ops::sigma_minus();
    const Operator2 a00 = Operator2::identity() - (I_UNIT * tau) * H - (0.5 * tau) * (dagger(L) * L);
    CHECK(max_abs_diff(b.A00, a00) <= 1e-6);
    CHECK(max_abs_diff(b.A10, std::sqrt(tau) * L) <= 1e-5);
    CHECK(max_abs_diff(b.A01, -std::sqrt(tau) * dagger(L)) <= 1e-5);
    // block structure of V
    for (std::size_t r = 0; r < 2; ++r)
        for (std::size_t c = 0; c < 2; ++c) {
            CHECK(b.V(r, c) == b.A00(r, c));
            CHECK(b.V(r + 2, c) == b.A10(r, c));
            CHECK(b.V(r, c + 2) == b.A01(r, c));
            CHECK(b.V(r + 2, c + 2) == b.A11(r, c));
        }
}

TEST_CASE("decoupled limit") {
    const double tau = 0.05, d0 = 0.8;
    const CollisionBlocks b = build_blocks(0.0, d0, tau);
    const Operator2 H = -d0 * ops::sigma_z();
    CHECK(max_abs_diff(b.A00, oracle::expm2((-I_UNIT * tau) * H)) <= 1e-15);
    CHECK(max_abs(b.A10) == 0.0);
    CHECK(max_abs(b.A01) == 0.0);
    CHECK_THROWS_AS(build_blocks(kResonant, 0.0), InvalidArgument);
    CHECK_THROWS_AS(build_blocks(-1.0, 0.0, 0.1), InvalidArgument);
}

TEST_CASE("discrete pulse normalization") {
    for (const auto &p : {PulseEnvelope::square(0.5), PulseEnvelope::exponential(0.5), PulseEnvelope::square(0.3)})
        for (double tau : {1e-2, 3e-3, 1e-3}) {
            const DiscretePulse d(p, tau);
            double sum = 0.0;
            for (std::size_t k = 0; k < d.size(); ++k)
                sum += tau * std::norm(d.xi(k));
            CHECK(std::abs(sum - 1.0) <= 1e-12);
            CHECK(std::abs(d.tail(0) - 1.0) <= 1e-15);
            CHECK(d.tail(d.size()) == 0.0);
            CHECK(d.xi(d.size() + 5) == Complex(0.0));
            CHECK(std::abs(d.scale() - 1.0) <= 5 * tau);
        }
}

TEST_CASE("collision step examples") {
    const double tau = 1e-3;
    const CollisionBlocks b = build_blocks(kResonant, tau);
    CollisionState g;
    g.alpha = Ket2::ground();
    const CollisionBranches br = collision_branches(g, b, 0.0, tau, 1.0);
    CHECK(br.weight[1] == 0.0);
    CHECK(br.weight[0] == doctest::Approx(1.0).epsilon(1e-15));

    const DiscretePulse late(delayed_triangle(10.0), tau);
    CollisionState e = initial_collision_state(Ket2::excited(), late);
    const CollisionBranches be = collision_branches(e, b, late.xi(0), tau, late.tail(1));
    const double p1 = be.weight[1] / (be.weight[0] + be.weight[1]);
    CHECK(p1 == doctest::Approx(tau).epsilon(tau));

    CollisionState dead;
    dead.alpha = {};
    dead.beta = {};
    CHECK_THROWS_AS(collision_step(dead, b, 0.0, tau, 0.0, 0.5), DegenerateState);
}

TEST_CASE("photon-free field starts on the vacuum branch") {
    const DiscretePulse vac(PulseEnvelope::vacuum(), 1e-2, 10);
    const CollisionState s = initial_collision_state(Ket2::plus(), vac);
    CHECK(s.alpha.norm2() == 0.0);
    CHECK(ket_diff(s.beta, Ket2::plus()) == 0.0);
    CHECK(s.tail_weight == 0.0);
}

TEST_CASE("property: branch weights add up to the incoming weight") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> ud;
    for (const auto &pulse : {PulseEnvelope::square(0.5), PulseEnvelope::exponential(0.5)})
        for (const Ket2 &psi : {Ket2::ground(), Ket2::excited(), Ket2::plus()}) {
            const double tau = 2e-3;
            const CollisionBlocks b = build_blocks(ModelParams(1.0, 0.3), tau);
            const DiscretePulse d(pulse, tau, 3000);
            CollisionState s = initial_collision_state(psi, d);
            for (std::size_t j = 0; j < 3000; ++j) {
                const double before = s.beta.norm2() + d.tail(j) * s.alpha.norm2();
                const CollisionBranches br = collision_branches(s, b, d.xi(j), tau, d.tail(j + 1));
                CHECK(std::abs(br.weight[0] + br.weight[1] - before) <= 1e-12);
                s = collision_step(s, b, d.xi(j), tau, d.tail(j + 1), ud(rng));
                s.outcomes.clear();
            }
        }
}

TEST_CASE("property: an excited start keeps beta = 0 on the all-zero record") {
    for (const auto &pulse : {PulseEnvelope::square(0.5), PulseEnvelope::exponential(0.5)}) {
        CollisionConfig cfg;
        cfg.tau = 1e-3;
        cfg.n_steps = 8000;
        cfg.pulse = pulse;
        cfg.psi0 = Ket2::excited();
        std::vector<std::size_t> steps;
        for (std::size_t j = 0; j <= cfg.n_steps; j += 100)
            steps.push_back(j);
        for (const auto &z : propagate_zero_record(cfg, steps)) {
            CHECK(std::sqrt(z.beta.norm2()) <= 1e-12);
            CHECK(std::abs(z.alpha.g) == 0.0);
        }
    }
}

TEST_CASE("all-zero record against the continuous no-click pair") {
    const AtomModel m(kResonant, PulseEnvelope::square(0.5), Ket2::ground());
    CollisionConfig cfg;
    cfg.tau = 1e-3;
    cfg.n_steps = 6000;
    cfg.pulse = m.pulse();
    for (const auto &z : propagate_zero_record(cfg, {500, 2000, 3500, 6000})) {
        const ConditionalPair exact = cond_zero(m, z.step * cfg.tau);
        // includes the sign of beta
        CHECK(ket_diff(z.beta, exact.beta) <= 1e-2);
        CHECK(ket_diff(z.alpha, exact.alpha) <= 1e-2);
        CHECK(z.weight == doctest::Approx(prob_no_count(m, z.step * cfg.tau)).epsilon(1e-2));
    }
}

TEST_CASE("chains are deterministic and the all-zero frequency matches") {
    const AtomModel m(kResonant, PulseEnvelope::square(0.5), Ket2::ground());
    CollisionConfig cfg;
    cfg.tau = 2e-3;
    cfg.n_steps = 1500;
    cfg.pulse = m.pulse();
    const ChainResult a = run_chain(cfg, 5, {0, 700, 1500}), b = run_chain(cfg, 5, {0, 700, 1500});
    CHECK(a.outcomes == b.outcomes);
    CHECK(a.record_weights == b.record_weights);
    REQUIRE(a.samples.size() == 3);
    CHECK(a.samples[1].j == 700);
    const std::size_t n = 10000;
    std::size_t zero = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const ChainResult r = run_chain(cfg, 1000 + i);
        zero += std::all_of(r.outcomes.begin(), r.outcomes.end(), [](std::uint8_t o) { return o == 0; });
    }
    const double p = prob_no_count(m, cfg.n_steps * cfg.tau);
    CHECK(std::abs(static_cast<double>(zero) / n - p) <= 3 * std::sqrt(p * (1 - p) / n));
    CHECK_THROWS_AS(run_chain(cfg, 1, {1501}), InvalidArgument);
}

TEST_CASE("first-order convergence to the closed forms") {
    for (const auto &pulse : {PulseEnvelope::square(0.5), PulseEnvelope::exponential(0.5)})
        for (const Ket2 &psi : {Ket2::ground(), Ket2::plus()}) {
            const AtomModel m(kResonant, pulse, psi);
            const ConvergenceResult r = convergence_study(m, {4e-3, 2e-3, 1e-3}, 10.0);
            REQUIRE(r.rows.size() == 3);
            CHECK(r.fitted_order >= 0.8);
            CHECK(r.fitted_order <= 1.2);
            CHECK(r.rows.back().max_error < 1e-2);
            const double ratio = r.rows[1].max_error / r.rows[2].max_error;
            CHECK(ratio >= 1.7);
            CHECK(ratio <= 2.3);
        }
    const AtomModel m(kResonant, PulseEnvelope::square(0.5), Ket2::plus());
    CHECK_THROWS_AS(convergence_study(m, {1e-3, 2e-3}, 1.0), InvalidArgument);
}

TEST_CASE("outcome record export") {
    CollisionConfig cfg;
    cfg.tau = 1e-2;
    cfg.n_steps = 50;
    cfg.pulse = PulseEnvelope::square(0.5);
    cfg.psi0 = Ket2::excited();
    const ChainResult r = run_chain(cfg, 3);
    std::filesystem::create_directories(SPHOTON_TEST_TMP);
    const auto path = std::filesystem::path(SPHOTON_TEST_TMP) / "outcomes.csv";
    write_outcomes_csv(path, r);
    std::ifstream f(path);
    std::string line;
    std::getline(f, line);
    CHECK(line.rfind("# schema: collision-outcomes/1", 0) == 0);
    std::getline(f, line);
    CHECK(line == "step,outcome,record_weight");
    int rows = 0;
    while (std::getline(f, line))
        ++rows;
    CHECK(rows == 50);
}

}
