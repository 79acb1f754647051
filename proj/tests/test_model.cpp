#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "btrengine/model.hpp"
#include "test_util.hpp"

using namespace btrengine;
using btrtest::milli;
using btrtest::random_hermitian;

namespace {

const CellWeight* find_cell(const std::vector<CellWeight>& ws, int g, std::vector<int> perims) {
    for (const auto& w : ws)
        if (w.g == g && w.perims == perims) return &w;
    return nullptr;
}

ModelSpec random_spec(std::mt19937_64& rng, bool with_multitrace) {
    ModelSpec spec;
    spec.t = milli(600 + static_cast<long>(rng() % 900));
    spec.d = 4;
    spec.N = 4;
    spec.alpha[3] = milli(static_cast<long>(rng() % 601) - 300);
    spec.alpha[4] = milli(static_cast<long>(rng() % 601) - 300);
    if (with_multitrace) {
        spec.gbar = 2;
        spec.multitrace.push_back({{4}, milli(static_cast<long>(rng() % 601) - 300)});
        spec.multitrace.push_back({{2, 3}, milli(static_cast<long>(rng() % 601) - 300)});
    }
    return spec;
}

}  // namespace

TEST_CASE("weight compilation matches the closed forms") {
    ModelSpec gauss;  // all alpha zero, multi-trace term from the measure only
    auto ws = compile_weights(gauss);
    REQUIRE(ws.size() == 1);
    CHECK(ws[0].g == 0);
    CHECK(ws[0].perims == std::vector<int>{1, 1});
    CHECK(ws[0].exact.str() == "-1");  // -1/t at t=1

    ModelSpec plain;
    plain.plain_1mm = true;
    plain.d = 4;
    plain.alpha[4] = milli(250);
    auto wp = compile_weights(plain);
    REQUIRE(wp.size() == 1);
    CHECK(wp[0].perims == std::vector<int>{4});
    CHECK(wp[0].exact.str() == "1/4");

    ModelSpec quartic;
    quartic.d = 4;
    quartic.alpha[4] = BigRational(1, 10);
    quartic.t = BigRational(1, 2);
    auto wq = compile_weights(quartic);
    // cylinder weights proportional to alpha_4/t with binomial multiplicities
    auto c13 = find_cell(wq, 0, {1, 3});
    auto c22 = find_cell(wq, 0, {2, 2});
    REQUIRE(c13 != nullptr);
    REQUIRE(c22 != nullptr);
    // 2 l1 l2 C(4,l1) alpha/(4t) = 6 alpha / t
    CHECK(c13->value == Catch::Approx(6.0 * 0.1 / 0.5));
    CHECK(c22->value == Catch::Approx(6.0 * 0.1 / 0.5));
    CHECK(find_cell(wq, 0, {1, 1})->exact.str() == "-2");
}

TEST_CASE("stable weights scale linearly and respect the chi partition") {
    ModelSpec spec;
    spec.d = 4;
    spec.gbar = 2;
    spec.multitrace.push_back({{4}, milli(40)});
    spec.multitrace.push_back({{2, 3}, milli(-70)});
    auto ws = compile_weights(spec);

    ModelSpec doubled = spec;
    for (auto& mt : doubled.multitrace) mt.coupling = mt.coupling * BigRational(2);
    auto wd = compile_weights(doubled);

    bool saw_stable = false;
    for (const auto& w : ws) {
        if (w.g == 0) {
            CHECK(w.chi() >= 0);
            continue;
        }
        saw_stable = true;
        CHECK(w.chi() < 0);
        auto* other = find_cell(wd, w.g, w.perims);
        REQUIRE(other != nullptr);
        CHECK(other->value == Catch::Approx(2.0 * w.value).epsilon(1e-12));
    }
    CHECK(saw_stable);

    // Tr D^4 at s=1: the single-boundary cell carries genus 2 weight 8 t alpha-hat
    auto* g2 = find_cell(ws, 2, {4});
    REQUIRE(g2 != nullptr);
    CHECK(g2->value == Catch::Approx(8.0 * 1.0 * 0.04).epsilon(1e-12));
}

TEST_CASE("action on zero matrix vanishes and Gaussian compiled form is free") {
    ModelSpec gauss;
    HermitianMatrix H = HermitianMatrix::Zero(3, 3);
    CHECK(action_direct(gauss, H) == Catch::Approx(0.0).margin(1e-15));
    CHECK(action_compiled(gauss, H) == Catch::Approx(0.0).margin(1e-15));

    ModelSpec plain;
    plain.plain_1mm = true;
    std::mt19937_64 rng(7);
    HermitianMatrix R = random_hermitian(4, rng);
    double expect = (4.0 / 2.0) * (R * R).trace().real();
    CHECK(action_compiled(plain, R) == Catch::Approx(expect).epsilon(1e-12));
}

TEST_CASE("one by one quadratic action") {
    // N=1, quadratic model: D has the single eigenvalue 2h, so
    // S = (1/2t)(Tr D^2)/2 = h^2/t; the compiled route must agree.
    ModelSpec spec;
    spec.t = BigRational(1, 2);
    HermitianMatrix H(1, 1);
    H(0, 0) = 0.73;
    double expect = 0.73 * 0.73 / 0.5;
    CHECK(action_direct(spec, H) == Catch::Approx(expect).epsilon(1e-12));
    CHECK(action_compiled(spec, H) == Catch::Approx(expect).epsilon(1e-12));
}

TEST_CASE("non-hermitian input is rejected") {
    ModelSpec spec;
    HermitianMatrix H = HermitianMatrix::Zero(2, 2);
    H(0, 1) = 0.3;
    CHECK_THROWS_AS(action_direct(spec, H), Error);
}

TEST_CASE("action equivalence on random ensembles") {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 100; ++trial) {
        ModelSpec spec = random_spec(rng, true);
        int N = 2 + static_cast<int>(rng() % 5);
        HermitianMatrix H = random_hermitian(N, rng, 0.8);
        auto ws = compile_weights(spec);
        double a = action_direct(spec, H);
        double b = action_compiled(spec, H, ws);
        CHECK(std::fabs(a - b) <= 1e-9 * (1.0 + std::fabs(a)));
    }
}

TEST_CASE("interaction polynomials match the small closed forms") {
    ModelSpec plain;
    plain.plain_1mm = true;
    auto tk = interactions(plain);
    REQUIRE(tk.count({0, 1}) == 1);
    CHECK(tk.size() == 1);
    CHECK(tk[{0, 1}].coeffs.at({2}) == Catch::Approx(-0.5));

    ModelSpec gauss;  // only t^(0)_{1,1} = -1/t
    gauss.t = BigRational(1, 2);
    auto tg = interactions(gauss);
    REQUIRE(tg.count({0, 2}) == 1);
    // T_{0,2}(xi,eta) = -xi eta / t
    CHECK(tg[{0, 2}].coeffs.at({1, 1}) == Catch::Approx(-2.0));
    std::vector<double> pt{0.7, -1.3};
    CHECK(tg[{0, 2}].eval(pt) == Catch::Approx(-2.0 * 0.7 * -1.3));
}

TEST_CASE("nu extraction against bivariate evaluation") {
    ModelSpec quartic;
    quartic.d = 4;
    quartic.alpha[4] = milli(120);
    auto ws = compile_weights(quartic);
    auto tk = interactions(quartic, ws);
    auto nu = nu_table(tk[{0, 2}]);

    double c22 = find_cell(ws, 0, {2, 2})->value;
    CHECK(nu[{2, 2}] == Catch::Approx(c22 / 4.0));

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (int i = 0; i < 5; ++i) {
        double xi = U(rng), eta = U(rng);
        double direct = tk[{0, 2}].eval(std::vector<double>{xi, eta});
        double via_nu = 0.0;
        for (auto& [km, v] : nu) via_nu += v * std::pow(xi, km.first) * std::pow(eta, km.second);
        CHECK(direct == Catch::Approx(via_nu).margin(1e-12));
    }
}

TEST_CASE("interaction evaluation identity reproduces minus the action") {
    std::mt19937_64 rng(31337);
    for (int trial = 0; trial < 10; ++trial) {
        ModelSpec spec = random_spec(rng, true);
        int N = 2 + static_cast<int>(rng() % 3);
        HermitianMatrix H = random_hermitian(N, rng, 0.7);
        Eigen::SelfAdjointEigenSolver<HermitianMatrix> es(H);
        Eigen::VectorXd lam = es.eigenvalues();

        auto tk = interactions(spec);
        int max_e = 0;
        for (auto& [hk, poly] : tk)
            for (auto& [l, c] : poly.coeffs) max_e = std::max(max_e, *std::max_element(l.begin(), l.end()));
        std::vector<double> psum(max_e + 1, 0.0);
        psum[0] = N;
        for (int e = 1; e <= max_e; ++e)
            for (int i = 0; i < N; ++i) psum[e] += std::pow(lam(i), e);

        const double Nt = N / spec.t_d();
        double total = 0.0;
        std::map<int, double> kfact{{1, 1.0}, {2, 2.0}, {3, 6.0}, {4, 24.0}};
        for (auto& [hk, poly] : tk) {
            double pref = std::pow(Nt, 2 - 2 * hk.first - hk.second) / kfact[hk.second];
            for (auto& [mono, c] : poly.monomials()) {
                double term = c;
                for (int e : mono) term *= psum[e];
                total += pref * term;
            }
        }
        double S = action_direct(spec, H);
        CHECK(std::fabs(total + S) <= 1e-9 * (1.0 + std::fabs(S)));
    }
}
