#include <catch2/catch_amalgamated.hpp>

#include "btrengine/curve.hpp"
#include "btrengine/wick.hpp"

using namespace btrengine;

namespace {

double mass(const SpectralData& d, int samples = 4000) {
    // integral of phi over the support via the theta chart
    double acc = 0.0;
    for (int i = 0; i <= samples; ++i) {
        double th = M_PI * i / samples;
        double phi = 0.0;
        for (size_t k = 1; k < d.u.size(); ++k) phi += d.u[k] * std::sin(k * th);
        phi /= M_PI;
        double wgt = (i == 0 || i == samples) ? 0.5 : 1.0;
        acc += wgt * phi * 2.0 * d.gamma * std::sin(th);
    }
    return acc * M_PI / samples;
}

}  // namespace

TEST_CASE("gaussian closed forms") {
    ModelSpec plain;
    plain.plain_1mm = true;
    auto data = solve_one_cut(plain);
    CHECK(std::fabs(data.b - 2.0) < 1e-10);
    CHECK(std::fabs(data.a + 2.0) < 1e-10);
    CHECK(data.moment(2) == Catch::Approx(1.0).margin(1e-9));
    CHECK(data.moment(4) == Catch::Approx(2.0).margin(1e-9));
    CHECK(data.moment(6) == Catch::Approx(5.0).margin(1e-9));
    CHECK(density(data, 0.0) == Catch::Approx(1.0 / M_PI).margin(1e-9));
    CHECK(density(data, 1.99999) == Catch::Approx(0.0).margin(1e-2));
    CHECK(mass(data) == Catch::Approx(1.0).margin(1e-8));
    CHECK(data.residual < 1e-9);
    CHECK_THROWS_AS(density(data, 2.5), Error);
}

TEST_CASE("default cylinder model keeps the semicircle disk function") {
    ModelSpec spec;  // t^(0)_{1,1} only
    spec.t = BigRational(1, 2);
    auto data = solve_one_cut(spec);
    CHECK(data.b == Catch::Approx(2.0 * std::sqrt(0.5)).margin(1e-10));
    CHECK(data.symmetric());
    CHECK(std::fabs(data.moment(1)) < 1e-12);
    CHECK(data.moment(2) == Catch::Approx(0.25).margin(1e-9));  // t^2
    CHECK(mass(data) == Catch::Approx(0.5).margin(1e-8));       // total mass t
}

TEST_CASE("plain quartic against the endpoint closed form") {
    const double g = 0.05;
    ModelSpec spec;
    spec.plain_1mm = true;
    spec.d = 4;
    spec.alpha[4] = BigRational(5, 100);
    auto data = solve_one_cut(spec);
    const double S = (1.0 - std::sqrt(1.0 - 12.0 * g)) / (6.0 * g);
    CHECK(data.gamma * data.gamma == Catch::Approx(S).epsilon(1e-9));
    // m2 = t gamma^2 - g gamma^6
    CHECK(data.moment(2) == Catch::Approx(S - g * S * S * S).epsilon(1e-9));
    // m6 = 5 t gamma^6 - 9 g gamma^10
    CHECK(data.moment(6) ==
          Catch::Approx(5.0 * std::pow(S, 3) - 9.0 * g * std::pow(S, 5)).epsilon(1e-9));
    CHECK(data.residual < 1e-9);

    // even potential: symmetric support and vanishing odd moments
    CHECK(data.symmetric(1e-12));
    CHECK(std::fabs(data.moment(3)) < 1e-12);
}

TEST_CASE("asymmetric support from a cubic term") {
    ModelSpec spec;
    spec.plain_1mm = true;
    spec.d = 3;
    spec.alpha[3] = BigRational(6, 100);
    auto data = solve_one_cut(spec);
    CHECK(!data.symmetric(1e-3));
    CHECK(data.residual < 1e-9);
    CHECK(mass(data) == Catch::Approx(1.0).margin(1e-8));
}

TEST_CASE("supercritical coupling fails loudly") {
    ModelSpec spec;
    spec.plain_1mm = true;
    spec.d = 4;
    spec.alpha[4] = BigRational(2, 10);
    CHECK_THROWS_AS(solve_one_cut(spec), Error);
}

TEST_CASE("perturbative agreement with the wick oracle") {
    ModelSpec spec;
    spec.plain_1mm = true;
    spec.d = 4;
    spec.alpha[4] = BigRational(5, 1000);
    auto data = solve_one_cut(spec);
    WickOracle oracle(spec, 3);
    for (int l : {2, 4, 6}) {
        double q = oracle.q_value(0, {l});
        CHECK(std::fabs(data.moment(l) - q) < 3e-5);
    }
}

TEST_CASE("joukowski map and its exterior inverse") {
    ModelSpec plain;
    plain.plain_1mm = true;
    auto data = solve_one_cut(plain);
    CHECK(joukowski(data, {1.0, 0.0}).real() == Catch::Approx(data.b));
    CHECK(joukowski(data, {-1.0, 0.0}).real() == Catch::Approx(data.a));
    Complex z{1.37, 0.61};
    CHECK(std::abs(joukowski(data, z) - joukowski(data, 1.0 / z)) < 1e-14);

    Complex zx = inverse_joukowski(data, {10.0, 0.0});
    CHECK(std::abs(joukowski(data, zx) - Complex(10.0, 0.0)) < 1e-12);
    CHECK(std::abs(zx) > 1.0);
    CHECK_THROWS_AS(inverse_joukowski(data, {0.5, 0.0}), Error);
}

TEST_CASE("u1 equals t over gamma and no nonnegative powers") {
    ModelSpec spec;
    spec.d = 4;
    spec.alpha[4] = BigRational(2, 100);
    auto data = solve_one_cut(spec);
    CHECK(data.u[1] == Catch::Approx(data.t / data.gamma).epsilon(1e-10));
    // W(x(z)) is a pure polynomial in 1/z by construction; check decay numerically
    Complex big{250.0, 0.0};
    CHECK(std::abs(data.w01_z(big)) < 1e-1);
    CHECK(std::abs(data.w01_z(big) - data.t / joukowski(data, big)) < 1e-4);
}
