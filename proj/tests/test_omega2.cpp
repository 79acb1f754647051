#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "btrengine/omega2.hpp"
#include "btrengine/wick.hpp"

using namespace btrengine;

namespace {

std::vector<CellWeight> crafted_weights(double w11, double w22, double w13, double disk4,
                                        const BigRational& t) {
    std::vector<CellWeight> ws;
    auto push = [&](int g, std::vector<int> p, double v) {
        if (v == 0.0) return;
        CellWeight c;
        c.g = g;
        c.perims = std::move(p);
        c.value = v;
        c.exact = rational_from_decimal(std::to_string(v));
        ws.push_back(c);
    };
    push(0, {1, 1}, w11);
    push(0, {2, 2}, w22);
    push(0, {1, 3}, w13);
    push(0, {4}, disk4);
    (void)t;
    return ws;
}

}  // namespace

TEST_CASE("plain model reduces to the bergman kernel") {
    ModelSpec plain;
    plain.plain_1mm = true;
    auto curve = solve_one_cut(plain);
    auto om = solve_F(plain, curve);

    // no cylinder couplings: F is the universal principal part
    CHECK(std::abs(om.F({2.0, 0.0}, {3.0, 0.0}) - Complex(1.0 / 25.0)) < 1e-14);
    CHECK(std::abs(om.bhat0({2.0, 0.0}, {3.0, 0.0}) - Complex(24.0 / 25.0)) < 1e-12);
    CHECK(std::abs(omega02_eval(om, {2.0, 0.0}, {3.0, 0.0}) - Complex(1.0)) < 1e-12);

    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> U(1.2, 3.0);
    for (int i = 0; i < 10; ++i) {
        Complex z{U(rng), U(rng) - 2.1};
        Complex w{U(rng) + 0.4, U(rng) - 2.0};
        Complex expect = 1.0 / ((z - w) * (z - w));
        CHECK(std::abs(omega02_eval(om, z, w) - expect) <= 1e-12 * std::abs(expect));
    }

    std::vector<Complex> pts;
    for (int i = 0; i < 12; ++i) pts.push_back(std::polar(1.1, 0.3 + 0.5 * i));
    CHECK(functional_residual(om, pts) < 1e-12);
}

TEST_CASE("default cylinder model in closed form") {
    ModelSpec spec;
    spec.t = BigRational(1, 2);
    auto curve = solve_one_cut(spec);
    auto om = solve_F(spec, curve);

    // C is 1x1 with value 1 + b^2/(4t) = 2 at the semicircle half-width
    REQUIRE(om.dim == 1);
    CHECK(om.C[0][0] == Catch::Approx(2.0).epsilon(1e-10));
    CHECK(check_hypothesis2(om.C) == 0);

    // resummed covariance coefficient: Q_{0;(1,1)} = t/2
    CHECK(omega2_xmoment(om, 1, 1) == Catch::Approx(0.25).epsilon(1e-10));
    // even pairs are untouched by the (1,1) interaction
    CHECK(omega2_xmoment(om, 2, 2) == Catch::Approx(2.0 * 0.25).epsilon(1e-10));
    CHECK(std::abs(omega2_xmoment(om, 1, 2)) < 1e-12);

    // symmetry of F on its domain
    CHECK(std::abs(om.F({2.0, 0.0}, {3.0, 0.0}) - om.F({3.0, 0.0}, {2.0, 0.0})) < 1e-12);

    // internal representation identity: F + Bhat = 1/(z-zeta)^2 + Q2
    std::mt19937_64 rng(71);
    std::uniform_real_distribution<double> U(1.15, 2.6);
    for (int i = 0; i < 6; ++i) {
        Complex z{U(rng), 0.3 * U(rng)};
        Complex w{-U(rng), 0.2};
        Complex lhs = om.F(z, w) + om.bhat0(z, w);
        Complex rhs = 1.0 / ((z - w) * (z - w)) + om.q2(z, w);
        CHECK(std::abs(lhs - rhs) < 1e-12);
    }

    // biresidue one on the diagonal
    Complex z0{1.7, 0.4};
    for (double h : {1e-3, 1e-4}) {
        Complex w = z0 + Complex(h, 0.0);
        Complex val = omega02_eval(om, z0, w) * (z0 - w) * (z0 - w);
        CHECK(std::abs(val - Complex(1.0)) < 50.0 * h);
    }

    std::vector<Complex> pts;
    for (int i = 0; i < 20; ++i) pts.push_back(std::polar(1.1, 0.17 + 0.3 * i));
    CHECK(functional_residual(om, pts) < 1e-10);

    // negative control: a perturbed solve inflates the functional residual
    Omega02 bad = om;
    bad.beta[1][1] += 0.01;
    CHECK(functional_residual(bad, pts) > 1e-3);
}

TEST_CASE("quartic multi-trace model passes the structural suite") {
    ModelSpec spec;
    spec.d = 4;
    spec.alpha[4] = BigRational(2, 100);
    auto curve = solve_one_cut(spec);
    auto om = solve_F(spec, curve);
    REQUIRE(om.dim == 3);
    CHECK(check_hypothesis2(om.C) == 0);

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(1.2, 2.8);
    for (int i = 0; i < 20; ++i) {
        Complex z{U(rng), U(rng) - 2.0};
        Complex w{-U(rng), 0.5 * U(rng) - 1.0};
        CHECK(std::abs(om.F(z, w) - om.F(w, z)) <= 1e-10);
    }
    std::vector<Complex> pts;
    for (int i = 0; i < 20; ++i) pts.push_back(std::polar(1.1, 0.11 + 0.31 * i));
    CHECK(functional_residual(om, pts) < 1e-10);

    // F decays at z -> infinity at rate 1/z^2
    Complex big{300.0, 1.0};
    CHECK(std::abs(om.F(big, {2.0, 0.0})) < 1e-4);
    CHECK(std::abs(om.F(big, {2.0, 0.0}) * big * big) > 1e-3);
}

TEST_CASE("omega2 taylor data matches the wick oracle at small couplings") {
    ModelSpec shell;
    shell.d = 4;
    shell.gbar = 0;
    auto ws = crafted_weights(-0.005, 0.004, 0.003, 0.002, shell.t);
    auto curve = solve_one_cut(shell, ws);
    auto om = solve_F(shell, ws, curve);
    WickOracle oracle(shell, ws, 3, 16);
    for (auto [l1, l2] : std::vector<std::pair<int, int>>{{1, 1}, {1, 2}, {2, 2}, {1, 3}}) {
        double solver = omega2_xmoment(om, l1, l2);
        double wick = oracle.q_value(0, {l1, l2});
        INFO("l1=" << l1 << " l2=" << l2 << " solver=" << solver << " wick=" << wick);
        CHECK(std::fabs(solver - wick) < 1e-5);
    }
}

TEST_CASE("hypothesis 2 detector finds the crafted singular coupling") {
    // with a single cylinder weight nu the 1x1 system is 1 - nu (b/2)^2,
    // singular exactly at nu = 4/b^2
    const double b = 2.0;
    std::map<std::pair<int, int>, double> nu;
    double lo = 0.5, hi = 1.5;
    double det_lo = build_C({{{1, 1}, lo}}, b, 2)[0][0];
    double det_hi = build_C({{{1, 1}, hi}}, b, 2)[0][0];
    CHECK(det_lo * det_hi < 0.0);
    for (int step = 0; step < 60; ++step) {
        double mid = 0.5 * (lo + hi);
        double det = build_C({{{1, 1}, mid}}, b, 2)[0][0];
        ((det_lo < 0.0) == (det < 0.0)) ? lo = mid : hi = mid;
    }
    CHECK(0.5 * (lo + hi) == Catch::Approx(1.0).margin(1e-9));
    auto Csing = build_C({{{1, 1}, 1.0}}, b, 2);
    CHECK(check_hypothesis2(Csing) == 1);
    CHECK(check_hypothesis2({{1.0, 1.0}, {1.0, 1.0}}) == 1);
    CHECK(check_hypothesis2({{1.0, 0.0}, {0.0, 1.0}}) == 0);
}

TEST_CASE("diagonal evaluation is rejected") {
    ModelSpec plain;
    plain.plain_1mm = true;
    auto curve = solve_one_cut(plain);
    auto om = solve_F(plain, curve);
    CHECK_THROWS_AS(omega02_eval(om, {1.5, 0.2}, {1.5, 0.2}), Error);
}
