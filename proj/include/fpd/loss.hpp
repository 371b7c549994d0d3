#pragma once

#include <cmath>

#include "fpd/error.hpp"
#include "fpd/tensor.hpp"

namespace fpd {

inline constexpr double kBceEpsilon = 1e-7;

template <typename S>
struct BceResult {
    double loss = 0.0;
    Tensor<S> grad;  // d loss / d p, same shape as p
};

// Mean binary cross-entropy over all B*U elements. Each log argument is
// clamped from below at epsilon, so a perfect prediction scores exactly 0
// while the p=0/p=1 extremes stay finite (-log(eps)). The gradient is the
// analytic derivative evaluated on p clamped into [eps, 1-eps].
template <typename S>
BceResult<S> bce_loss(const Tensor<S>& p, const Tensor<S>& y) {
    if (!p.same_shape(y))
        raise(ErrorCategory::Shape, "bce: predictions " + shape_string(p.shape()) +
                                        " vs targets " + shape_string(y.shape()));
    if (p.size() == 0) raise(ErrorCategory::Shape, "bce on empty tensors");

    const double eps = kBceEpsilon;
    const double n = static_cast<double>(p.size());
    BceResult<S> res;
    res.grad = Tensor<S>(p.shape());
    double total = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double yi = static_cast<double>(y[i]);
        if (yi != 0.0 && yi != 1.0)
            raise(ErrorCategory::Label,
                  "bce target must be 0 or 1, got " + std::to_string(yi) + " at element " +
                      std::to_string(i));
        const double pi = static_cast<double>(p[i]);
        total -= yi * std::log(std::max(pi, eps)) +
                 (1.0 - yi) * std::log(std::max(1.0 - pi, eps));
        const double pc = std::min(std::max(pi, eps), 1.0 - eps);
        res.grad[i] = S((pc - yi) / (pc * (1.0 - pc)) / n);
    }
    res.loss = total / n;
    return res;
}

}  // namespace fpd
