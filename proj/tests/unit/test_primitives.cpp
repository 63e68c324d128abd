#include "gk/error.hpp"
#include "gk/mc_oracle.hpp"
#include "gk/primitives.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace gk;

namespace {

using C = CovTriple<double>;
constexpr double pi = std::numbers::pi;

bool within_3se(double closed, const McEstimate& mc) { return std::abs(closed - mc.mean) <= 3.0 * mc.std_error; }

}  // namespace

TEST_CASE("relu expectation examples") {
    CHECK(relu_pair_expectation(C{1, 1, 1}) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(relu_pair_expectation(C{1, 1, 0}) == doctest::Approx(1.0 / (2.0 * pi)).epsilon(1e-14));
    CHECK(relu_deriv_expectation(C{1, 1, 1}) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(relu_deriv_expectation(C{1, 1, 0}) == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(relu_deriv_expectation(C{1, 1, -1}) == doctest::Approx(0.0));
    CHECK(relu_pair_expectation(C{0, 3, 0}) == 0.0);
    CHECK(relu_deriv_expectation(C{3, 0, 0}) == 0.0);
    CHECK_THROWS_AS(relu_pair_expectation(C{-1, 1, 0}), NumericError);
}

TEST_CASE("relu expectation against Monte-Carlo at 1e7 samples") {
    const C c{2.0, 0.5, -0.3};
    const auto mc = mc_activation_oracle(c, ActivationKind::ReLU, ExpectationMode::Value, 10'000'000, 1);
    CHECK(within_3se(relu_pair_expectation(c), mc));
}

TEST_CASE("correlation round-off is clamped") {
    const double s = 1.0 + 1e-15;
    CHECK(std::isfinite(relu_pair_expectation(C{1, 1, s})));
    CHECK(std::isfinite(relu_deriv_expectation(C{1, 1, -s})));
}

TEST_CASE("erf pair kernel examples") {
    KernelHyperParams hp;
    const double zero_value = 2.0 / pi * std::asin(2.0 / 3.0);
    CHECK(erf_pair_kernel(Eigen::VectorXd::Zero(4), Eigen::VectorXd::Zero(4), hp) == doctest::Approx(zero_value).epsilon(1e-14));
    CHECK(zero_value == doctest::Approx(0.46454).epsilon(1e-4));
    Eigen::VectorXd a(1), b(1);
    a << 1.0;
    b << -1.0;
    CHECK(std::abs(erf_pair_kernel(a, b, hp)) < 1e-15);
    Eigen::VectorXd u(2), v(2);
    u << 1.0, 0.0;
    v << 0.5, 0.5;
    CHECK(erf_pair_kernel(u, v, hp) == doctest::Approx(2.0 / pi * std::asin(3.0 / std::sqrt(20.0))).epsilon(1e-14));
    CHECK_THROWS_AS(erf_pair_kernel(u, a, hp), InputError);
}

TEST_CASE("erf pair kernel matches a finite erf network") {
    // Random first-layer weights with w ~ N(0, I) on the augmented input; the
    // empirical average of erf(w.x) erf(w.y) over many units approaches the kernel.
    KernelHyperParams hp;
    Eigen::VectorXd u(2), v(2);
    u << 1.0, 0.0;
    v << 0.5, 0.5;
    std::mt19937_64 rng(3);
    std::normal_distribution<double> normal;
    const int units = 1'000'000;
    double sum = 0.0, sum_sq = 0.0;
    for (int k = 0; k < units; ++k) {
        const double w0 = normal(rng), w1 = normal(rng), wb = normal(rng);
        const double f = std::erf(w0 * u[0] + w1 * u[1] + wb) * std::erf(w0 * v[0] + w1 * v[1] + wb);
        sum += f;
        sum_sq += f * f;
    }
    const double mean = sum / units;
    const double se = std::sqrt((sum_sq / units - mean * mean) / units);
    CHECK(std::abs(mean - erf_pair_kernel(u, v, hp)) <= 3.0 * se);
}

TEST_CASE("Monte-Carlo oracle examples") {
    const auto a = mc_activation_oracle(C{1, 1, 1}, ActivationKind::ReLU, ExpectationMode::Value, 1'000'000, 7);
    CHECK(std::abs(a.mean - 0.5) <= 3.0 * a.std_error);
    const auto b = mc_activation_oracle(C{1, 1, 0}, ActivationKind::ReLU, ExpectationMode::Derivative, 1'000'000, 7);
    CHECK(std::abs(b.mean - 0.25) <= 3.0 * b.std_error);
    const C c{1.5, 0.7, 0.4};
    const auto e = mc_activation_oracle(c, ActivationKind::Erf, ExpectationMode::Value, 1'000'000, 7);
    CHECK(within_3se(erf_pair_expectation(c), e));
    const auto ed = mc_activation_oracle(c, ActivationKind::Erf, ExpectationMode::Derivative, 1'000'000, 7);
    CHECK(within_3se(erf_deriv_expectation(c), ed));

    const auto again = mc_activation_oracle(c, ActivationKind::Erf, ExpectationMode::Value, 1'000'000, 7);
    CHECK(again.mean == e.mean);
    CHECK_THROWS_AS(mc_activation_oracle(c, ActivationKind::ReLU, ExpectationMode::Value, 100, 1), InputError);
    CHECK_THROWS_AS(mc_activation_oracle(C{-1, 1, 0}, ActivationKind::ReLU, ExpectationMode::Value, 10'000, 1), NumericError);
}

TEST_CASE("relu expectations are homogeneous") {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> unit(0.05, 3.0), corr(-1.0, 1.0), scale(0.01, 100.0);
    for (int trial = 0; trial < 200; ++trial) {
        const double sii = unit(rng), sjj = unit(rng);
        const C c{sii, sjj, corr(rng) * std::sqrt(sii * sjj)};
        const double a = scale(rng);
        const C scaled{a * c.sii, a * c.sjj, a * c.sij};
        CHECK(relu_pair_expectation(scaled) == doctest::Approx(a * relu_pair_expectation(c)).epsilon(1e-12));
        CHECK(relu_deriv_expectation(scaled) == doctest::Approx(relu_deriv_expectation(c)).epsilon(1e-12));
    }
}

TEST_CASE("relu expectations are continuous and bounded") {
    std::mt19937_64 rng(43);
    std::uniform_real_distribution<double> unit(0.05, 3.0), corr(-0.99, 0.99);
    for (int trial = 0; trial < 200; ++trial) {
        const double sii = unit(rng), sjj = unit(rng);
        const C c{sii, sjj, corr(rng) * std::sqrt(sii * sjj)};
        const C moved{c.sii, c.sjj, c.sij + 1e-9};
        CHECK(std::abs(relu_pair_expectation(moved) - relu_pair_expectation(c)) < 1e-6);
        CHECK(std::abs(relu_deriv_expectation(moved) - relu_deriv_expectation(c)) < 1e-6);
        const double v = relu_pair_expectation(c);
        CHECK(v >= 0.0);
        CHECK(v <= std::sqrt(sii * sjj) / 2.0 + 1e-15);
        CHECK(relu_pair_expectation(C{sjj, sii, c.sij}) == v);
        const double dv = relu_deriv_expectation(c);
        CHECK(dv >= 0.0);
        CHECK(dv <= 0.5);
    }
}

TEST_CASE("erf pair kernel is symmetric and positive on the diagonal") {
    std::mt19937_64 rng(47);
    std::normal_distribution<double> normal(0.0, 2.0);
    KernelHyperParams hp;
    for (int trial = 0; trial < 100; ++trial) {
        Eigen::VectorXd x(3), y(3);
        for (int k = 0; k < 3; ++k) x[k] = normal(rng), y[k] = normal(rng);
        CHECK(erf_pair_kernel(x, x, hp) > 0.0);
        CHECK(erf_pair_kernel(x, y, hp) == erf_pair_kernel(y, x, hp));
        const double v = erf_pair_kernel(x, y, hp);
        CHECK(v > -1.0);
        CHECK(v < 1.0);
    }
}

TEST_CASE("hyperparameter validation") {
    KernelHyperParams hp;
    hp.K = -1;
    CHECK_THROWS_AS(hp.validate(), InputError);
    hp = {};
    hp.sigma_b = 0.0;
    CHECK_THROWS_AS(hp.validate(), InputError);
    hp = {};
    hp.beta = -0.1;
    CHECK_THROWS_AS(hp.validate(), InputError);
    hp = {};
    hp.gntk_blocks = 0;
    CHECK_THROWS_AS(hp.validate(), InputError);
}
