#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "btrengine/laurent.hpp"
#include "btrengine/linsolve.hpp"
#include "btrengine/pole_basis.hpp"
#include "btrengine/rational.hpp"
#include "btrengine/rational_function.hpp"

using namespace btrengine;

TEST_CASE("big rationals stay reduced and parse decimals exactly") {
    BigRational a(2, 4);
    CHECK(a.str() == "1/2");
    CHECK((a + BigRational(1, 2)).str() == "1");
    CHECK(rational_from_decimal("0.125").str() == "1/8");
    CHECK(rational_from_decimal("-3").str() == "-3");
    CHECK(rational_from_decimal("2e-3").str() == "1/500");
    CHECK(rational_from_decimal("0.5").pow(-2).str() == "4");
}

TEST_CASE("residue basics") {
    // 1/(z-1) at 1
    auto f = RationalFunction::basis(1.0, 1);
    CHECK(residue(f, 1.0).real() == Catch::Approx(1.0));

    // z^i/(zeta z - 1)^2 with i=2, zeta=2 has residue i/zeta^{i+1} at 1/zeta
    double zeta = 2.0;
    Poly den = poly_mul(Poly{-1.0, zeta}, Poly{-1.0, zeta});
    RationalFunction g(Poly{0.0, 0.0, 1.0}, den);
    CHECK(residue(g, 1.0 / zeta).real() == Catch::Approx(2.0 / 8.0).epsilon(1e-12));

    // double pole has zero residue
    auto h = RationalFunction::basis(1.0, 2);
    CHECK(std::abs(residue(h, 1.0)) < 1e-14);
}

TEST_CASE("laurent expansions match stated examples") {
    // 1/(1-z) at 0 through order 3
    RationalFunction f(Poly{1.0}, Poly{1.0, -1.0});
    auto s = laurent_expand(f, 0.0, 3);
    for (int k = 0; k <= 3; ++k) CHECK(s.at(k).real() == Catch::Approx(1.0));

    // (z^2-1)/z^2 at infinity: 1 - z^{-2}
    RationalFunction g(Poly{-1.0, 0.0, 1.0}, Poly{0.0, 0.0, 1.0});
    auto si = laurent_expand(g, AtInfinity{}, -4);
    CHECK(si.coeff_z(0).real() == Catch::Approx(1.0));
    CHECK(std::abs(si.coeff_z(-1)) < 1e-14);
    CHECK(si.coeff_z(-2).real() == Catch::Approx(-1.0));
    CHECK(std::abs(si.coeff_z(-3)) < 1e-14);
    CHECK(std::abs(si.coeff_z(-4)) < 1e-14);

    // 1/(zeta z - 1)^2 at infinity: z^{-2}/zeta^2 + 2 z^{-3}/zeta^3 + ...
    double zeta = 1.7;
    RationalFunction h(Poly{1.0}, poly_mul(Poly{-1.0, zeta}, Poly{-1.0, zeta}));
    auto sh = laurent_expand(h, AtInfinity{}, -3);
    CHECK(sh.coeff_z(-2).real() == Catch::Approx(1.0 / (zeta * zeta)).epsilon(1e-12));
    CHECK(sh.coeff_z(-3).real() == Catch::Approx(2.0 / (zeta * zeta * zeta)).epsilon(1e-12));
}

TEST_CASE("series arithmetic follows the truncation rules") {
    RationalFunction one_plus(Poly{1.0, 1.0}, Poly{1.0});
    RationalFunction one_minus(Poly{1.0, -1.0}, Poly{1.0});
    auto a = laurent_expand(one_plus, 0.0, 5);
    auto b = laurent_expand(one_minus, 0.0, 5);
    auto p = series_arith(a, b, SeriesOp::mul);
    CHECK(p.at(0).real() == Catch::Approx(1.0));
    CHECK(std::abs(p.at(1)) < 1e-14);
    CHECK(p.at(2).real() == Catch::Approx(-1.0));

    // 1 / (2(z-1) + (z-1)^2) around 1: (1/2)(z-1)^{-1} - 1/4 + ...
    RationalFunction onef(Poly{1.0}, Poly{1.0});
    RationalFunction q(Poly{0.0, 2.0, 1.0}, Poly{1.0});  // 2u + u^2 with u=z expanded at... build via shift below
    auto num = laurent_expand(onef, 1.0, 4);
    RationalFunction den_rf(poly_shift(Poly{0.0, 2.0, 1.0}, -1.0), Poly{1.0});  // 2(z-1)+(z-1)^2 as poly in z
    auto den = laurent_expand(den_rf, 1.0, 4);
    auto inv = series_arith(num, den, SeriesOp::div);
    CHECK(inv.kmin == -1);
    CHECK(inv.at(-1).real() == Catch::Approx(0.5));
    CHECK(inv.at(0).real() == Catch::Approx(-0.25));
    // multiply back
    auto back = series_arith(inv, den, SeriesOp::mul);
    CHECK(back.at(0).real() == Catch::Approx(1.0));
    CHECK(std::abs(back.at(1)) < 1e-13);

    // mismatched centers are a contract violation
    auto c0 = laurent_expand(onef, 0.0, 3);
    CHECK_THROWS_AS(series_arith(c0, num, SeriesOp::add), Error);
}

TEST_CASE("sum of residues over CP1 vanishes for random rationals") {
    std::mt19937_64 rng(1234);
    std::uniform_real_distribution<double> U(-2.0, 2.0);
    for (int trial = 0; trial < 40; ++trial) {
        // product of distinct linear factors in the denominator, degree <= 8
        int dn = 2 + static_cast<int>(rng() % 4);  // numerator degree
        int dd = dn + 2 + static_cast<int>(rng() % 3);
        Poly num(static_cast<size_t>(dn + 1));
        for (auto& c : num) c = U(rng);
        if (std::fabs(num.back()) < 0.1) num.back() = 0.5;
        Poly den{1.0};
        std::vector<double> roots;
        for (int i = 0; i < dd; ++i) {
            double r;
            bool ok;
            do {
                r = U(rng) * 1.5;
                ok = true;
                for (double q : roots)
                    if (std::fabs(q - r) < 0.15) ok = false;
                if (std::fabs(r) < 0.1 || std::fabs(std::fabs(r) - 1.0) < 0.1) ok = false;
            } while (!ok);
            roots.push_back(r);
            den = poly_mul(den, Poly{-r, 1.0});
        }
        RationalFunction f(num, den);
        Complex total = 0.0;
        for (double r : roots) total += residue(f, r);
        total += residue_at_infinity(f);
        CHECK(std::abs(total) < 1e-8);
    }
}

TEST_CASE("residue of logarithmic derivative counts zero/pole order") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> U(-1.5, 1.5);
    for (int trial = 0; trial < 20; ++trial) {
        double p = U(rng);
        int order = 1 + static_cast<int>(rng() % 3);
        Poly f{1.0};
        for (int i = 0; i < order; ++i) f = poly_mul(f, Poly{-p, 1.0});
        f = poly_mul(f, Poly{3.7, 1.0});  // spectator zero far away
        RationalFunction rf(f, Poly{1.0});
        RationalFunction logd = rf.derivative() / rf;
        CHECK(residue(logd, p).real() == Catch::Approx(static_cast<double>(order)).epsilon(1e-9));
    }
}

TEST_CASE("involution pullback is an involution on basis forms") {
    PoleBasisForm f(2);
    f.add_term({PoleKey{1, 2}, PoleKey{-1, 1}}, 0.7);
    f.add_term({PoleKey{-1, 3}, PoleKey{0, 1}}, -1.3);
    f.add_term({PoleKey{1, 1}, PoleKey{1, 2}}, 0.25);
    for (int var = 0; var < 2; ++var) {
        PoleBasisForm g = involution_pullback(involution_pullback(f, var), var);
        std::vector<Complex> z{{1.9, 0.4}, {-2.3, 0.8}};
        CHECK(std::abs(f.eval_density(z) - g.eval_density(z)) < 1e-12);
    }

    // chain-rule check: density of iota-pullback at z equals -f(1/z,.)/z^2
    PoleBasisForm g = involution_pullback(f, 0);
    std::vector<Complex> z{{2.0, 0.0}, {-2.3, 0.8}};
    std::vector<Complex> zi{1.0 / z[0], z[1]};
    Complex expect = -f.eval_density(zi) / (z[0] * z[0]);
    CHECK(std::abs(g.eval_density(z) - expect) < 1e-12);

    // function case
    RationalFunction sq(Poly{0.0, 0.0, 1.0}, Poly{1.0});
    auto pulled = involution_pullback(sq);
    CHECK(pulled.eval(Complex(2.0, 0.0)).real() == Catch::Approx(0.25));
}

TEST_CASE("series mul evaluation agrees with product of evaluations") {
    RationalFunction f(Poly{0.3, 1.2, -0.5}, Poly{1.0, 0.7});
    RationalFunction g(Poly{-1.0, 2.0}, Poly{0.4, 1.0});
    auto sf = laurent_expand(f, 0.25, 18);
    auto sg = laurent_expand(g, 0.25, 18);
    auto sp = series_arith(sf, sg, SeriesOp::mul);
    Complex z(0.29, 0.01);
    Complex lhs = sp.eval(z);
    Complex rhs = f.eval(z) * g.eval(z);
    CHECK(std::abs(lhs - rhs) <= 1e-11 * std::abs(rhs));
}

TEST_CASE("linsolve contract") {
    auto r = linsolve({{2.0, 0.0}, {0.0, 4.0}}, {1.0, 1.0});
    CHECK(r.x[0] == Catch::Approx(0.5));
    CHECK(r.x[1] == Catch::Approx(0.25));
    CHECK(r.condition_estimate == Catch::Approx(2.0));

    auto id = linsolve({{1.0, 0.0}, {0.0, 1.0}}, {3.0, -7.0});
    CHECK(id.x[0] == Catch::Approx(3.0));
    CHECK(id.x[1] == Catch::Approx(-7.0));

    try {
        linsolve({{1.0, 1.0}, {1.0, 1.0}}, {1.0, 2.0});
        FAIL("expected singular system");
    } catch (const Error& e) {
        CHECK(e.tag() == "singular system");
        CHECK(std::string(e.what()).find("rank 1") != std::string::npos);
    }
}

TEST_CASE("partial fractions over the basis poles") {
    RationalFunction f = RationalFunction::basis(1.0, 2, 0.5) + RationalFunction::basis(-1.0, 1, -2.0) +
                         RationalFunction::monomial(-3, 1.25);
    auto pf = f.partial_fractions_basis();
    CHECK(pf[{1, 2}] == Catch::Approx(0.5));
    CHECK(pf[{-1, 1}] == Catch::Approx(-2.0));
    CHECK(pf[{0, 3}] == Catch::Approx(1.25));

    RationalFunction off = RationalFunction::basis(0.37, 1);  // pole off-basis must be rejected
    CHECK_THROWS_AS(off.partial_fractions_basis(), Error);
}
