#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "evograd/conditions.hpp"
#include "evograd/presets.hpp"
#include "test_util.hpp"

using namespace evograd;

namespace {

SampleRegion small_region(int d, double box = 2.0, double t0 = 1.0, double t1 = 2.0) {
    SampleRegion r = SampleRegion::defaults(d, box, t0, t1);
    r.grid_counts.assign(static_cast<std::size_t>(d), 5);
    r.time_count = 3;
    r.random_count = 50;
    return r;
}

OperatorFamily from_doc(const std::string& diffusion, const std::string& drift, int d,
                        const std::string& extra = "") {
    std::string doc = "[meta]\nd = " + std::to_string(d) +
                      "\nt_lo = 0\nt_hi = 10\n[diffusion]\n" + diffusion + "[drift]\n" + drift +
                      extra;
    return build_operator_from_text(doc);
}

}  // namespace

TEST_CASE("ellipticity: heat is uniformly 1") {
    OperatorFamily op = build_preset("heat");
    ConditionReport rep = check_ellipticity(op, small_region(1));
    CHECK(rep.pass);
    CHECK(rep.extremal == doctest::Approx(1.0));
}

TEST_CASE("ellipticity: example41 with a = (1,2,3) bottoms out at the origin") {
    OperatorFamily op = build_preset("example41", {{"a1", 1.0}, {"a2", 2.0}, {"a3", 3.0}});
    SampleRegion region = SampleRegion::defaults(3, 2.0, 1.0, 2.0);
    region.random_count = 200;
    ConditionReport rep = check_ellipticity(op, region);
    CHECK(rep.pass);
    CHECK(rep.extremal == doctest::Approx(1.0).epsilon(1e-12));
    // the floor is attained on the whole x2 = 0 plane; ties resolve to the
    // lexicographically smallest sample
    CHECK(rep.witness_x[1] == doctest::Approx(0.0));
    CHECK(rep.witness_t == doctest::Approx(1.0));
    CHECK(rep.witness_x[0] == doctest::Approx(-2.0));
}

TEST_CASE("ellipticity: degenerate diffusion fails with a zero witness") {
    OperatorFamily op = from_doc("q11 = x1^2\nq12 = 0\nq22 = 1\n", "b1 = 0\nb2 = 0\n", 2);
    ConditionReport rep = check_ellipticity(op, small_region(2));
    CHECK_FALSE(rep.pass);
    CHECK(rep.extremal == doctest::Approx(0.0));
}

TEST_CASE("algebraic residual vanishes for example41 and constant Q") {
    OperatorFamily ex = build_preset("example41");
    std::vector<double> x{0.7, -1.2, 0.4};
    CHECK(algebraic_residual(ex, 1.5, x) == doctest::Approx(0.0).epsilon(1e-14));

    OperatorFamily constq =
        from_doc("q11 = 2\nq12 = 0.5\nq22 = 1\n", "b1 = -x1\nb2 = -x2\n", 2);
    std::vector<double> y{1.0, 2.0};
    CHECK(algebraic_residual(constq, 1.0, y) == doctest::Approx(0.0));
}

TEST_CASE("algebraic residual of the isotropic nonconstant family, with FD oracle") {
    OperatorFamily op = build_preset("wang-counterexample");
    std::vector<double> x{1.0, 0.0};
    CHECK(algebraic_residual(op, 1.0, x) == doctest::Approx(6.0).epsilon(1e-12));

    // independent oracle: central differences of q_ij
    auto fd_dq = [&](int k, int i, int j) {
        return testutil::central_difference(op.q(i, j), k + 1, 1.0, x);
    };
    double worst = 0.0;
    for (int k = 0; k < 2; ++k)
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                worst = std::max(worst, std::fabs(fd_dq(k, i, j) + fd_dq(i, k, j) + fd_dq(j, i, k)));
    CHECK(algebraic_residual(op, 1.0, x) == doctest::Approx(worst).epsilon(1e-8));
}

TEST_CASE("check_algebraic passes example41 and rejects separable nonconstant diffusion") {
    CHECK(check_algebraic(build_preset("example41"), small_region(3)).pass);

    // q(x) H(t) with nonconstant q: only constant q can satisfy the identity
    OperatorFamily sep = from_doc(
        "q11 = (1 + x1^2)*(2 + sin(t))\nq12 = (1 + x1^2)*(0.25 + 0.1*cos(t))\nq22 = (1 + "
        "x1^2)*(2 + sin(t))\n",
        "b1 = -x1\nb2 = -x2\n", 2);
    ConditionReport rep = check_algebraic(sep, small_region(2));
    CHECK_FALSE(rep.pass);
    CHECK(rep.extremal > 1.0);

    CHECK_FALSE(check_algebraic(build_preset("wang-counterexample"), small_region(2)).pass);
}

TEST_CASE("dissipativity matrix on reference operators") {
    std::vector<double> origin3{0.0, 0.0, 0.0};
    SymMatrix m_ex =
        dissipativity_matrix(build_preset("example41"), 1.0, origin3, EtaMode::UserExpression);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) CHECK(m_ex(i, j) == doctest::Approx(0.0));

    std::vector<double> x1{0.8};
    SymMatrix m_heat = dissipativity_matrix(build_preset("heat"), 1.0, x1, EtaMode::LambdaMin);
    CHECK(m_heat(0, 0) == doctest::Approx(0.0));

    SymMatrix m_ou = dissipativity_matrix(build_preset("ou"), 1.0, x1, EtaMode::LambdaMin);
    CHECK(m_ou(0, 0) == doctest::Approx(-1.0));
}

TEST_CASE("estimate_c0 on the reference operators") {
    CHECK(estimate_c0(build_preset("heat"), small_region(1), EtaMode::LambdaMin).extremal ==
          doctest::Approx(0.0));
    ConditionReport ou = estimate_c0(build_preset("ou"), small_region(1), EtaMode::LambdaMin);
    CHECK(ou.extremal == doctest::Approx(-1.0));
    CHECK(ou.pass);
    CHECK(ou.eta_mode == EtaMode::LambdaMin);
}

TEST_CASE("estimate_c0 for example41 with the eta expression is 0 at the origin") {
    OperatorFamily op = build_preset("example41");
    SampleRegion region = SampleRegion::defaults(3, 2.0, 1.0, 2.0);
    ConditionReport rep = estimate_c0(op, region, EtaMode::UserExpression);
    CHECK(rep.extremal == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(rep.witness_x[0] == doctest::Approx(0.0));
    CHECK(rep.witness_x[1] == doctest::Approx(0.0));
    CHECK(rep.witness_x[2] == doctest::Approx(0.0));

    // closed-form bound (2 psi^2/abar)|x|^2 - gamma |x|^(2 beta) dominates the
    // quadratic form everywhere sampled
    std::mt19937_64 rng(3);
    auto uniform = [&] { return 4.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 2.0; };
    std::vector<double> x(3);
    for (int trial = 0; trial < 100; ++trial) {
        for (auto& v : x) v = uniform();
        double r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
        double bound = 2.0 * r2 - 3.0 * r2;
        double lam = largest_eigenvalue(dissipativity_matrix(op, 1.5, x, EtaMode::UserExpression));
        CHECK(lam <= bound + 1e-9);
    }
}

TEST_CASE("estimate_c0 with lambda-min eta never exceeds the user-eta value") {
    OperatorFamily op = build_preset("example41", {{"a1", 1.0}, {"a2", 2.0}, {"a3", 3.0}});
    SampleRegion region = small_region(3);
    double sharp = estimate_c0(op, region, EtaMode::LambdaMin).extremal;
    double coarse = estimate_c0(op, region, EtaMode::UserExpression).extremal;
    CHECK(sharp <= coarse + 1e-12);
}

TEST_CASE("degenerate eta is reported with the point") {
    OperatorFamily op = from_doc("q11 = x1^2\nq12 = 0\nq22 = 1\n", "b1 = 0\nb2 = 0\n", 2);
    std::vector<double> zero{0.0, 0.0};
    CHECK_THROWS_AS(dissipativity_matrix(op, 1.0, zero, EtaMode::LambdaMin), ConditionError);
}

TEST_CASE("lyapunov check on example41 peaks at the origin with value 6") {
    OperatorFamily op = build_preset("example41");
    SampleRegion region = SampleRegion::defaults(3, 3.0, 1.0, 2.0);
    ConditionReport rep = check_lyapunov(op, *op.lyapunov_phi(), 6.0, region);
    CHECK(rep.pass);
    CHECK(rep.extremal == doctest::Approx(6.0).epsilon(1e-12));
    CHECK(rep.witness_x[0] == doctest::Approx(0.0));

    // oracle: radial profile 2 (3 + r^2 - 3 r^4)/(1 + r^2) maximized over a fine grid
    double best = -1e300;
    for (int k = 0; k <= 100000; ++k) {
        double r = 3.5 * std::sqrt(3.0) * k / 100000.0;
        double r2 = r * r;
        best = std::max(best, 2.0 * (3.0 + r2 - 3.0 * r2 * r2) / (1.0 + r2));
    }
    CHECK(rep.extremal <= best + 1e-9);
    CHECK(best == doctest::Approx(6.0));
}

TEST_CASE("lyapunov check on heat") {
    OperatorFamily op = build_preset("heat");
    ConditionReport rep = check_lyapunov(op, *op.lyapunov_phi(), 2.0, small_region(1));
    CHECK(rep.pass);
    CHECK(rep.extremal == doctest::Approx(2.0));
    CHECK(rep.witness_x[0] == doctest::Approx(0.0));
}

TEST_CASE("anti-dissipative drift fails the lyapunov bound on a large box") {
    OperatorFamily op =
        from_doc("q11 = 1\n", "b1 = x1*norm2(x)\n", 1, "[lyapunov]\nphi = 1 + norm2(x)\ngamma = 8\n");
    SampleRegion region = small_region(1, 6.0);
    ConditionReport rep = check_lyapunov(op, *op.lyapunov_phi(), 8.0, region);
    CHECK_FALSE(rep.pass);
    CHECK(std::fabs(rep.witness_x[0]) == doctest::Approx(6.0));  // box corner
}

TEST_CASE("non-positive phi is an error") {
    OperatorFamily op = build_preset("heat");
    CHECK_THROWS_AS(
        check_lyapunov(op, expr::parse("x1", 1), 1.0, small_region(1)), ConditionError);
}

TEST_CASE("nested regions are monotone for min- and max-type checks") {
    OperatorFamily op = build_preset("wang-counterexample");
    SampleRegion inner = SampleRegion::defaults(2, 1.0, 1.0, 2.0);
    inner.grid_counts.assign(2, 11);
    inner.random_count = 0;
    SampleRegion outer = SampleRegion::defaults(2, 2.0, 1.0, 2.0);
    outer.grid_counts.assign(2, 21);  // same spacing, superset of nodes
    outer.random_count = 0;

    CHECK(check_algebraic(op, outer).extremal >= check_algebraic(op, inner).extremal);
    CHECK(check_ellipticity(op, outer).extremal <= check_ellipticity(op, inner).extremal);
    CHECK(estimate_c0(op, outer, EtaMode::LambdaMin).extremal >=
          estimate_c0(op, inner, EtaMode::LambdaMin).extremal);
}

TEST_CASE("the dissipativity form is bounded by its largest eigenvalue") {
    OperatorFamily op = build_preset("block2d");
    std::mt19937_64 rng(9);
    auto uniform = [&] { return 2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0; };
    std::vector<double> x(2), xi(2);
    for (int trial = 0; trial < 10; ++trial) {
        for (auto& v : x) v = 1.5 * uniform();
        SymMatrix m = dissipativity_matrix(op, 1.0, x, EtaMode::LambdaMin);
        double lam = largest_eigenvalue(m);
        for (int k = 0; k < 100; ++k) {
            double n2 = 0.0;
            for (auto& v : xi) {
                v = uniform();
                n2 += v * v;
            }
            if (n2 == 0.0) continue;
            CHECK(m.quadratic_form(xi) <= lam * n2 + 1e-9);
        }
    }
}

TEST_CASE("reports are deterministic for a fixed seed") {
    OperatorFamily op = build_preset("block2d");
    SampleRegion region = small_region(2);
    ConditionReport a = estimate_c0(op, region, EtaMode::LambdaMin);
    ConditionReport b = estimate_c0(op, region, EtaMode::LambdaMin);
    CHECK(a.extremal == b.extremal);
    CHECK(a.witness_t == b.witness_t);
    CHECK(a.witness_x == b.witness_x);
    CHECK(a.samples == b.samples);
}
