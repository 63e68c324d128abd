#pragma once

#include "gk/primitives.hpp"

#include <cstdint>

namespace gk {

enum class ExpectationMode { Value, Derivative };

struct McEstimate {
    double mean;
    double std_error;
};

/// Monte-Carlo estimate of E[f(u) f(v)] (Value) or E[f'(u) f'(v)] (Derivative)
/// under the bivariate normal given by `c`. Deterministic for a given seed.
/// Requires samples >= 10^4.
McEstimate mc_activation_oracle(const CovTriple<double>& c, ActivationKind activation, ExpectationMode mode,
                                std::int64_t samples, std::uint64_t seed);

}  // namespace gk
