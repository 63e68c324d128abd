#include "gk/mc_oracle.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace gk {

namespace {

double activation(ActivationKind kind, ExpectationMode mode, double x) {
    if (kind == ActivationKind::ReLU) {
        if (mode == ExpectationMode::Value) return x > 0 ? x : 0.0;
        return x > 0 ? 1.0 : 0.0;
    }
    if (mode == ExpectationMode::Value) return std::erf(x);
    return 2.0 / std::sqrt(std::numbers::pi) * std::exp(-x * x);
}

}  // namespace

McEstimate mc_activation_oracle(const CovTriple<double>& c, ActivationKind kind, ExpectationMode mode,
                                std::int64_t samples, std::uint64_t seed) {
    detail::check_covariance(c);
    if (samples < 10000) throw InputError("mc_activation_oracle: need at least 1e4 samples");

    // Cholesky factor of the 2x2 covariance.
    const double a = std::sqrt(c.sii);
    const double b = std::sqrt(c.sjj);
    const double prod = c.sii * c.sjj;
    const double rho = prod > 0 ? std::clamp(c.sij / std::sqrt(prod), -1.0, 1.0) : 0.0;
    const double rho_perp = std::sqrt(1.0 - rho * rho);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;

    // Welford accumulation.
    double mean = 0.0;
    double m2 = 0.0;
    for (std::int64_t s = 0; s < samples; ++s) {
        const double z1 = normal(rng);
        const double z2 = normal(rng);
        const double u = a * z1;
        const double v = b * (rho * z1 + rho_perp * z2);
        const double f = activation(kind, mode, u) * activation(kind, mode, v);
        const double delta = f - mean;
        mean += delta / static_cast<double>(s + 1);
        m2 += delta * (f - mean);
    }
    const double n = static_cast<double>(samples);
    const double variance = m2 / (n - 1.0);
    return {mean, std::sqrt(variance / n)};
}

}  // namespace gk
