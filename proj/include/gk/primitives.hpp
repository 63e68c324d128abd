#pragma once

// Closed-form Gaussian expectations of activations and their derivatives.
//
// For (u, v) ~ N(0, [[sii, sij], [sij, sjj]]):
//   ReLU:  E[relu(u) relu(v)]      = sqrt(sii sjj) / (2 pi) * (sin t + (pi - t) cos t)
//          E[1{u>0} 1{v>0}]        = (pi - t) / (2 pi),   t = arccos(sij / sqrt(sii sjj))
//   Erf:   E[erf(u) erf(v)]        = 2/pi * asin(2 sij / sqrt((1 + 2 sii)(1 + 2 sjj)))
//          E[erf'(u) erf'(v)]      = 4/pi / sqrt((1 + 2 sii)(1 + 2 sjj) - 4 sij^2)

#include "gk/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace gk {

enum class ActivationKind { ReLU, Erf };

struct KernelHyperParams {
    int K = 2;
    double beta = 1.0;
    double sigma_b = 1.0;
    ActivationKind activation = ActivationKind::ReLU;
    int gntk_blocks = 1;
    /// Adds beta^2 after the arcsine in the erf kernel. Off by default.
    bool erf_add_beta2 = false;

    void validate() const {
        if (K < 0) throw InputError("hyperparams: K must be >= 0");
        if (!(beta >= 0.0)) throw InputError("hyperparams: beta must be >= 0");
        if (!(sigma_b > 0.0)) throw InputError("hyperparams: sigma_b must be > 0");
        if (gntk_blocks < 1) throw InputError("hyperparams: gntk_blocks must be >= 1");
    }
};

template <typename Real>
struct CovTriple {
    Real sii;
    Real sjj;
    Real sij;
};

namespace detail {

template <typename Real>
inline void check_covariance(const CovTriple<Real>& c) {
    if (!(c.sii >= 0) || !(c.sjj >= 0) || !std::isfinite(c.sij)) {
        throw NumericError("invalid covariance: sii=" + std::to_string(double(c.sii)) +
                           " sjj=" + std::to_string(double(c.sjj)) + " sij=" + std::to_string(double(c.sij)));
    }
}

template <typename Real>
inline Real clamp_unit(Real x) {
    return std::clamp(x, Real(-1), Real(1));
}

template <typename Real>
constexpr Real zero_variance_floor = Real(1e-300);

}  // namespace detail

template <typename Real>
Real relu_pair_expectation(const CovTriple<Real>& c) {
    detail::check_covariance(c);
    const Real prod = c.sii * c.sjj;
    if (prod < detail::zero_variance_floor<Real>) return Real(0);
    const Real scale = std::sqrt(prod);
    const Real lambda = detail::clamp_unit(c.sij / scale);
    const Real theta = std::acos(lambda);
    const Real pi = std::numbers::pi_v<Real>;
    return scale / (2 * pi) * (std::sqrt(Real(1) - lambda * lambda) + (pi - theta) * lambda);
}

template <typename Real>
Real relu_deriv_expectation(const CovTriple<Real>& c) {
    detail::check_covariance(c);
    const Real prod = c.sii * c.sjj;
    if (prod < detail::zero_variance_floor<Real>) return Real(0);
    const Real lambda = detail::clamp_unit(c.sij / std::sqrt(prod));
    const Real pi = std::numbers::pi_v<Real>;
    return (pi - std::acos(lambda)) / (2 * pi);
}

template <typename Real>
Real erf_pair_expectation(const CovTriple<Real>& c) {
    detail::check_covariance(c);
    const Real denom = std::sqrt((1 + 2 * c.sii) * (1 + 2 * c.sjj));
    return Real(2) / std::numbers::pi_v<Real> * std::asin(detail::clamp_unit(2 * c.sij / denom));
}

template <typename Real>
Real erf_deriv_expectation(const CovTriple<Real>& c) {
    detail::check_covariance(c);
    const Real det = (1 + 2 * c.sii) * (1 + 2 * c.sjj) - 4 * c.sij * c.sij;
    // det >= 1 + 2(sii + sjj) for any valid covariance.
    return Real(4) / std::numbers::pi_v<Real> / std::sqrt(std::max(det, Real(1)));
}

template <typename Real>
Real activation_pair_expectation(ActivationKind kind, const CovTriple<Real>& c) {
    return kind == ActivationKind::ReLU ? relu_pair_expectation(c) : erf_pair_expectation(c);
}

template <typename Real>
Real activation_deriv_expectation(ActivationKind kind, const CovTriple<Real>& c) {
    return kind == ActivationKind::ReLU ? relu_deriv_expectation(c) : erf_deriv_expectation(c);
}

/// Infinite-width erf network kernel on bias-augmented inputs (x, 1) with
/// weight covariance diag(1, ..., 1, sigma_b^2).
template <typename DerivedA, typename DerivedB>
double erf_pair_kernel(const Eigen::MatrixBase<DerivedA>& xi, const Eigen::MatrixBase<DerivedB>& xj,
                       const KernelHyperParams& hp) {
    if (xi.size() != xj.size()) {
        throw InputError("erf_pair_kernel: dimension mismatch " + std::to_string(xi.size()) + " vs " +
                         std::to_string(xj.size()));
    }
    const double bias = hp.sigma_b * hp.sigma_b;
    const CovTriple<double> c{xi.squaredNorm() + bias, xj.squaredNorm() + bias, xi.dot(xj) + bias};
    double value = erf_pair_expectation(c);
    if (hp.erf_add_beta2) value += hp.beta * hp.beta;
    return value;
}

}  // namespace gk
