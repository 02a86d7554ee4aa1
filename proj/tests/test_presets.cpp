#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "evograd/conditions.hpp"
#include "evograd/presets.hpp"

using namespace evograd;

namespace {

SampleRegion quick_region(int d, double box = 2.0) {
    SampleRegion r = SampleRegion::defaults(d, box, 1.0, 2.0);
    r.grid_counts.assign(static_cast<std::size_t>(d), 5);
    r.time_count = 3;
    r.random_count = 50;
    return r;
}

}  // namespace

TEST_CASE("every preset builds at its defaults") {
    for (const auto& info : preset_catalog()) {
        CAPTURE(info.name);
        OperatorFamily op = build_preset(info.name);
        CHECK(op.dimension() >= 1);
        CHECK(op.lyapunov_phi().has_value());
        CHECK(op.lyapunov_gamma().has_value());
        CHECK(op.eta_expression().has_value());
    }
}

TEST_CASE("documented check outcomes per preset") {
    struct Expected {
        const char* name;
        bool algebraic_pass;
        double ellipticity_min;
    };
    const Expected table[] = {
        {"heat", true, 1.0},
        {"ou", true, 1.0},
        {"example41", true, 1.0},
        {"block2d", true, 1.0},
        {"wang-counterexample", false, 1.0},
    };
    for (const auto& exp : table) {
        CAPTURE(exp.name);
        OperatorFamily op = build_preset(exp.name);
        SampleRegion region = quick_region(op.dimension());
        ConditionReport ell = check_ellipticity(op, region);
        CHECK(ell.pass);
        CHECK(ell.extremal >= exp.ellipticity_min - 1e-12);
        CHECK(check_algebraic(op, region).pass == exp.algebraic_pass);
        ConditionReport lyap =
            check_lyapunov(op, *op.lyapunov_phi(), *op.lyapunov_gamma(), region);
        CHECK(lyap.pass);
    }
}

TEST_CASE("reference dissipativity constants are exact") {
    CHECK(estimate_c0(build_preset("ou"), quick_region(1), EtaMode::LambdaMin).extremal ==
          -1.0);
    CHECK(estimate_c0(build_preset("heat"), quick_region(1), EtaMode::LambdaMin).extremal ==
          0.0);
}

TEST_CASE("example41 keeps its identities at other admissible parameters") {
    OperatorFamily op = build_preset(
        "example41", {{"a1", 2.0}, {"a2", 0.5}, {"a3", 1.5}, {"psi", 0.8}, {"gamma", 4.0}});
    SampleRegion region = quick_region(3);
    CHECK(check_algebraic(op, region).extremal <= 1e-13);
    CHECK(check_ellipticity(op, region).extremal >= 0.5 - 1e-12);
}

TEST_CASE("block2d inherits the family identities in dimension 2") {
    OperatorFamily op = build_preset("block2d", {{"a1", 1.0}, {"a2", 2.0}, {"gamma", 5.0}});
    SampleRegion region = quick_region(2);
    CHECK(check_algebraic(op, region).extremal <= 1e-13);
    CHECK(check_ellipticity(op, region).extremal >= 1.0 - 1e-12);
}

TEST_CASE("wang-counterexample fails only the algebraic condition") {
    OperatorFamily op = build_preset("wang-counterexample");
    SampleRegion region = quick_region(2);
    CHECK(check_ellipticity(op, region).pass);
    ConditionReport alg = check_algebraic(op, region);
    CHECK_FALSE(alg.pass);
    CHECK(alg.extremal >= 6.0 - 1e-9);  // the box reaches |x1| = 2, residual 6 |x1|
    CHECK(check_lyapunov(op, *op.lyapunov_phi(), *op.lyapunov_gamma(), region).pass);
    CHECK(estimate_c0(op, region, EtaMode::LambdaMin).extremal <= 0.0);
}

TEST_CASE("parameter ranges are validated with the violated constraint named") {
    try {
        instantiate("example41", {{"gamma", 1.5}});
        FAIL("expected PresetError");
    } catch (const PresetError& e) {
        CHECK(std::string(e.what()).find("requires gamma > 2") != std::string::npos);
    }
    CHECK_THROWS_AS(instantiate("example41", {{"beta", 0.5}}), PresetError);
    CHECK_THROWS_AS(instantiate("example41", {{"a1", -1.0}}), PresetError);
    CHECK_THROWS_AS(instantiate("example41", {{"unknown_param", 1.0}}), PresetError);
    CHECK_NOTHROW(instantiate("example41", {{"gamma", 2.1}}));
}

TEST_CASE("unknown presets are reported with the catalog") {
    try {
        instantiate("no-such-op");
        FAIL("expected PresetError");
    } catch (const PresetError& e) {
        CHECK(std::string(e.what()).find("example41") != std::string::npos);
    }
}

TEST_CASE("real beta >= 1 stays differentiable through the drift") {
    OperatorFamily op = build_preset("example41", {{"beta", 1.5}, {"gamma", 3.0}});
    std::vector<double> x{0.4, -0.2, 0.1};
    PointEvaluation pe = op.eval_at(1.0, x);
    for (int j = 0; j < 3; ++j)
        for (int i = 0; i < 3; ++i) CHECK(std::isfinite(pe.db_at(j, i, 3)));
    std::vector<double> origin{0.0, 0.0, 0.0};
    PointEvaluation pe0 = op.eval_at(1.0, origin);
    for (int j = 0; j < 3; ++j)
        for (int i = 0; i < 3; ++i) CHECK(pe0.db_at(j, i, 3) == doctest::Approx(0.0));
}

TEST_CASE("expression-valued overrides render a time-dependent document") {
    std::string doc = instantiate_expr("block2d", {{"a1", "2 + sin(t)"}});
    OperatorFamily op = build_operator_from_text(doc);
    CHECK_FALSE(op.time_independent());
    // the eta expression tracks the time-dependent abar
    std::vector<double> x{0.0, 0.0};
    CHECK(expr::evaluate(*op.eta_expression(), 0.5, x) ==
          doctest::Approx(std::min(2.0 + std::sin(0.5), 1.0)));
}
