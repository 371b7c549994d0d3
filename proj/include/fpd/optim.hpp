#pragma once

#include <vector>

#include "fpd/error.hpp"
#include "fpd/layers.hpp"

namespace fpd {

// Plain SGD: value <- value - lr * grad, then the gradient is cleared.
template <typename S>
void sgd_step(const std::vector<Parameter<S>*>& params, double lr) {
    if (!(lr > 0.0))
        raise(ErrorCategory::Param, "learning rate must be positive, got " + std::to_string(lr));
    for (Parameter<S>* p : params) {
        S* v = p->value.data();
        S* g = p->grad.data();
        for (std::size_t i = 0; i < p->value.size(); ++i) {
            v[i] -= S(lr) * g[i];
            g[i] = S(0);
        }
    }
}

}  // namespace fpd
