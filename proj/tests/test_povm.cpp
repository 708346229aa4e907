#include <doctest.h>

#include "sphoton/errors.hpp"
#include "sphoton/povm.hpp"

using namespace sphoton;

namespace {

const ModelParams kResonant(1.0, 0.0);

std::vector<AtomModel> presets(const Ket2 &psi) {
    std::vector<AtomModel> out;
    for (double d0 : {0.0, 0.5}) {
        out.emplace_back(ModelParams(1.0, d0), PulseEnvelope::square(0.5), psi);
        out.emplace_back(ModelParams(1.0, d0), PulseEnvelope::exponential(0.5), psi);
    }
    return out;
}

} // namespace

TEST_SUITE("povm") {

TEST_CASE("POVM at t = 0") {
    for (const auto &m : presets(Ket2::ground())) {
        const PovmSet p = povm(m, 0.0);
        CHECK(max_abs_diff(p.m0, Operator2::identity()) == 0.0);
        CHECK(max_abs(p.m1) == 0.0);
        CHECK(max_abs(p.m2) == 0.0);
    }
}

TEST_CASE("no-count element reproduces the no-count probability") {
    Operator2 diag = 0.35 * ops::projector_g() + 0.65 * ops::projector_e();
    for (const auto &m0 : presets(Ket2::ground())) {
        const AtomModel m = m0.with_state(diag);
        for (double t : {0.2, 1.0, 3.9, 4.1, 9.0})
            CHECK(trace(povm(m, t).m0 * m.rho0()).real() == doctest::Approx(prob_no_count(m, t)).epsilon(1e-10));
    }
}

TEST_CASE("two counts become certain from an excited start") {
    const AtomModel e(kResonant, PulseEnvelope::exponential(0.5), Ket2::excited());
    const PovmSet p = povm(e, 90.0);
    CHECK(p.m2(1, 1).real() == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(std::abs(p.m2(0, 0)) <= 1e-12);
}

TEST_CASE("count statistics invariants") {
    for (const Ket2 &psi : {Ket2::ground(), Ket2::excited(), Ket2::plus()})
        for (const auto &m : presets(psi))
            for (double t : {0.0, 0.3, 2.0, 4.0, 7.5, 20.0}) {
                const CountStatistics s = count_probs(m, t);
                CHECK(std::abs(s.p0 + s.p1 + s.p2 - 1.0) <= 1e-9);
                for (double p : {s.p0, s.p1, s.p2}) {
                    CHECK(p >= -1e-12);
                    CHECK(p <= 1.0 + 1e-12);
                }
                CHECK(std::abs(s.mean - (s.p1 + 2 * s.p2)) <= 1e-9);
                CHECK(std::abs(s.second_moment - (s.p1 + 4 * s.p2)) <= 1e-9);
                CHECK(s.mandel_q.has_value() == (t > 0.0));
            }
}

TEST_CASE("long-time mean counts and the ground-start Mandel parameter") {
    for (const auto &m : presets(Ket2::ground())) {
        CHECK(count_probs(m, 80.0).mean == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(count_probs(m.with_state(Ket2::excited()), 80.0).mean == doctest::Approx(2.0).epsilon(1e-9));
        for (int i = 1; i <= 60; ++i) {
            const CountStatistics s = count_probs(m, 0.25 * i);
            CHECK(std::abs(*s.mandel_q + s.mean) <= 1e-9);
            CHECK(*s.mandel_q <= 0.0);
            CHECK(*s.mandel_q >= -1.0);
        }
    }
}

TEST_CASE("mandel_q definition") {
    CountStatistics poisson;
    poisson.mean = 0.7;
    poisson.second_moment = 0.7 + 0.49;
    CHECK(std::abs(mandel_q(poisson)) <= 1e-15);
    CountStatistics zero;
    zero.mean = 0.0;
    CHECK_THROWS_AS(mandel_q(zero), UndefinedStatistic);
    const AtomModel g(kResonant, PulseEnvelope::square(0.5), Ket2::ground());
    CHECK_THROWS_AS(mandel_q(count_probs(g, 0.0)), UndefinedStatistic);
}

TEST_CASE("appendix identities") {
    const AtomModel cases[] = {
        {kResonant, PulseEnvelope::square(0.5), Ket2::ground()},
        {ModelParams(1.0, 0.4), PulseEnvelope::exponential(1.0), Ket2::ground()},
    };
    for (const auto &m : cases) {
        const AppendixResiduals r0 = verify_appendix_identities(m, 0.0);
        CHECK(r0.a1 == 0.0);
        CHECK(r0.a2 == 0.0);
        CHECK(r0.a3 == 0.0);
        for (double t : {0.5, 2.0, 6.0})
            CHECK(verify_appendix_identities(m, t).max() <= 1e-7);
    }
}

TEST_CASE("property: POVM completeness and positivity on a 50-point grid") {
    for (const auto &m : presets(Ket2::ground()))
        for (int i = 0; i < 50; ++i) {
            const PovmSet p = povm(m, 6.0 * i / 49.0);
            CHECK(max_abs_diff(p.m0 + p.m1 + p.m2, Operator2::identity()) <= 1e-9);
            for (const Operator2 *e : {&p.m0, &p.m1, &p.m2}) {
                CHECK(is_hermitian(*e));
                CHECK(eigen_hermitian(*e).values[0] >= -1e-10);
            }
        }
}

TEST_CASE("property: simplified and unsimplified POVM forms agree") {
    for (const auto &m : presets(Ket2::ground()))
        for (double t : {0.7, 3.0, 5.5}) {
            const PovmSet a = povm(m, t);
            const PovmSet b = povm_unsimplified(m, t);
            CHECK(max_abs_diff(a.m0, b.m0) <= 1e-7);
            CHECK(max_abs_diff(a.m1, b.m1) <= 1e-7);
            CHECK(max_abs_diff(a.m2, b.m2) <= 1e-7);
        }
}

TEST_CASE("property: the no-count probability never increases from an excited start") {
    const double h = 1e-5;
    for (const auto &m0 : presets(Ket2::excited()))
        for (int i = 1; i <= 100; ++i) {
            const double t = 0.1 * i;
            CHECK(prob_no_count(m0, t + h) - prob_no_count(m0, t - h) <= 0.0);
        }
}

}
