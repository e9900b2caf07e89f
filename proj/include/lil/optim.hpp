#pragma once

#include "lil/linalg.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace lil {

struct AdamHyperparams {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    void validate() const;
};

/// Moment estimates for one parameter set. Shapes mirror the parameters and
/// are allocated lazily on the first step.
struct AdamState {
    AdamHyperparams hyper;
    std::vector<Matrix> m;
    std::vector<Matrix> v;
    std::uint64_t t = 0;
};

/// One bias-corrected Adam update of every parameter matrix in place.
void adam_step(std::span<Matrix* const> params, std::span<const Matrix* const> grads,
               AdamState& state);

}  // namespace lil
