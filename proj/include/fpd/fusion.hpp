#pragma once

#include <vector>

#include "fpd/error.hpp"
#include "fpd/tensor.hpp"

namespace fpd {

// Argmax per row over the two class probabilities; ties predict the
// negative class (index 0).
template <typename S>
std::vector<int> predict_class(const Tensor<S>& probs) {
    if (probs.rank() != 2 || probs.dim(1) != 2)
        raise(ErrorCategory::Shape,
              "predict_class expects Bx2 probabilities, got " + shape_string(probs.shape()));
    std::vector<int> out(probs.dim(0));
    for (std::size_t r = 0; r < probs.dim(0); ++r)
        out[r] = probs.at(r, 1) > probs.at(r, 0) ? 1 : 0;
    return out;
}

// Late fusion: average the two probability tables, then argmax with the
// same tie-break. Symmetric in its arguments.
template <typename S>
std::vector<int> late_fusion_predict(const Tensor<S>& probs_a, const Tensor<S>& probs_b) {
    if (!probs_a.same_shape(probs_b))
        raise(ErrorCategory::Shape, "late fusion: " + shape_string(probs_a.shape()) + " vs " +
                                        shape_string(probs_b.shape()));
    if (probs_a.rank() != 2 || probs_a.dim(1) != 2)
        raise(ErrorCategory::Shape,
              "late fusion expects Bx2 probabilities, got " + shape_string(probs_a.shape()));
    Tensor<S> mean(probs_a.shape());
    for (std::size_t i = 0; i < mean.size(); ++i)
        mean[i] = (probs_a[i] + probs_b[i]) / S(2);
    return predict_class(mean);
}

}  // namespace fpd
