#pragma once

#include <filesystem>
#include <fstream>
#include <numeric>
#include <vector>

#include "fpd/fsutil.hpp"
#include "fpd/fusion.hpp"
#include "fpd/loss.hpp"
#include "fpd/model.hpp"
#include "fpd/optim.hpp"

namespace fpd {

struct Hyper {
    double lr = 0.01;
    std::size_t epochs = 15;
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;
};

struct LossHistory {
    std::vector<double> epoch_mean_loss;
};

// Labeled in-memory dataset: X stacked along axis 0, Y one-hot Nx2
// ([1,0] negative, [0,1] positive).
template <typename S>
struct TrainingSet {
    Tensor<S> inputs;
    Tensor<S> targets;

    std::size_t count() const { return inputs.rank() ? inputs.dim(0) : 0; }
};

template <typename S>
Tensor<S> one_hot_targets(const std::vector<int>& labels) {
    Tensor<S> y({labels.size(), 2});
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != 0 && labels[i] != 1)
            raise(ErrorCategory::Label, "binary label must be 0 or 1");
        y.at(i, 0) = labels[i] == 0 ? S(1) : S(0);
        y.at(i, 1) = labels[i] == 1 ? S(1) : S(0);
    }
    return y;
}

// Mini-batch index ranges. A trailing singleton is folded into the previous
// batch so train-mode batchnorm always sees at least 2 samples.
inline std::vector<std::pair<std::size_t, std::size_t>> batch_ranges(std::size_t n,
                                                                     std::size_t batch_size) {
    std::vector<std::pair<std::size_t, std::size_t>> ranges;
    for (std::size_t start = 0; start < n; start += batch_size)
        ranges.emplace_back(start, std::min(start + batch_size, n));
    if (ranges.size() >= 2 && ranges.back().second - ranges.back().first == 1) {
        ranges[ranges.size() - 2].second = ranges.back().second;
        ranges.pop_back();
    }
    return ranges;
}

// Copies the rows at `rows` out of a stacked tensor (any rank >= 2).
template <typename S>
Tensor<S> gather_rows(const Tensor<S>& stacked, const std::vector<std::size_t>& rows) {
    if (stacked.rank() < 2)
        raise(ErrorCategory::Shape, "gather_rows needs a stacked tensor");
    std::vector<std::size_t> shape = stacked.shape();
    const std::size_t row_elems = stacked.size() / shape[0];
    shape[0] = rows.size();
    Tensor<S> out(shape);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const S* src = stacked.data() + rows[i] * row_elems;
        S* dst = out.data() + i * row_elems;
        for (std::size_t e = 0; e < row_elems; ++e) dst[e] = src[e];
    }
    return out;
}

// Shuffled mini-batch SGD minimizing mean BCE. Deterministic for a given
// seed; records the per-epoch mean element loss.
template <typename S>
LossHistory fit(Model<S>& model, const TrainingSet<S>& data, const Hyper& hp) {
    if (data.count() == 0) raise(ErrorCategory::Protocol, "training set is empty");
    if (data.targets.rank() != 2 || data.targets.dim(0) != data.count())
        raise(ErrorCategory::Shape, "targets must stack one row per training input");
    if (hp.batch_size < 1) raise(ErrorCategory::Param, "batch_size must be at least 1");
    if (hp.epochs < 1) raise(ErrorCategory::Param, "epochs must be at least 1");
    if (!(hp.lr > 0.0)) raise(ErrorCategory::Param, "learning rate must be positive");

    Rng rng(hp.seed);
    const std::size_t n = data.count();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});

    auto params = model.parameters();
    LossHistory history;
    history.epoch_mean_loss.reserve(hp.epochs);

    for (std::size_t epoch = 0; epoch < hp.epochs; ++epoch) {
        rng.shuffle(order);
        double loss_sum = 0.0;
        std::size_t elem_count = 0;
        for (auto [start, end] : batch_ranges(n, hp.batch_size)) {
            std::vector<std::size_t> rows(order.begin() + static_cast<std::ptrdiff_t>(start),
                                          order.begin() + static_cast<std::ptrdiff_t>(end));
            Tensor<S> xb = gather_rows(data.inputs, rows);
            Tensor<S> yb = gather_rows(data.targets, rows);
            Tensor<S> probs = model.forward(xb, Mode::Train, &rng);
            BceResult<S> bce = bce_loss(probs, yb);
            loss_sum += bce.loss * static_cast<double>(probs.size());
            elem_count += probs.size();
            model.backward(bce.grad);
            sgd_step(params, hp.lr);
        }
        history.epoch_mean_loss.push_back(loss_sum / static_cast<double>(elem_count));
    }
    return history;
}

// Eval-mode predictions over a stacked input, batched to bound memory.
template <typename S>
Tensor<S> predict_probs(Model<S>& model, const Tensor<S>& inputs, std::size_t batch_size = 64) {
    const std::size_t n = inputs.dim(0);
    Tensor<S> out;
    std::vector<std::size_t> rows;
    for (std::size_t start = 0; start < n; start += batch_size) {
        const std::size_t end = std::min(start + batch_size, n);
        rows.resize(end - start);
        std::iota(rows.begin(), rows.end(), start);
        Tensor<S> probs = model.forward(gather_rows(inputs, rows), Mode::Eval);
        if (start == 0) out = Tensor<S>({n, probs.dim(1)});
        for (std::size_t r = 0; r < rows.size(); ++r)
            for (std::size_t c = 0; c < probs.dim(1); ++c)
                out.at(start + r, c) = probs.at(r, c);
    }
    return out;
}

// Training history file: "epoch,mean_loss" per line.
inline void save_history(const std::filesystem::path& path, const LossHistory& history) {
    ensure_parent_dir(path);
    std::ofstream out(path, std::ios::trunc);
    if (!out) raise(ErrorCategory::Io, "cannot write history " + path.string());
    out << "epoch,mean_loss\n";
    out.precision(9);
    for (std::size_t i = 0; i < history.epoch_mean_loss.size(); ++i)
        out << (i + 1) << "," << history.epoch_mean_loss[i] << "\n";
}

}  // namespace fpd
