#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "fpd/archive.hpp"
#include "fpd/error.hpp"
#include "fpd/layers.hpp"

namespace fpd {

struct Tap {
    std::size_t layer_index = 0;  // embedding is the OUTPUT of this layer
    std::size_t dim = 0;
};

// A built network: ordered layers, registered embedding taps, and the
// forward/backward plumbing shared by every architecture here.
template <typename S>
class Model {
public:
    std::vector<std::unique_ptr<Layer<S>>> layers;
    std::map<std::string, Tap> taps;
    std::string default_tap;

    template <typename L, typename... Args>
    L* emplace(Args&&... args) {
        auto layer = std::make_unique<L>(std::forward<Args>(args)...);
        L* raw = layer.get();
        layers.push_back(std::move(layer));
        return raw;
    }

    void register_tap(const std::string& name, std::size_t layer_index, std::size_t dim) {
        taps[name] = Tap{layer_index, dim};
    }

    Tensor<S> forward(const Tensor<S>& x, Mode mode, Rng* rng = nullptr) {
        return forward_tapped(x, mode, rng, nullptr, nullptr);
    }

    // Runs the full forward pass; when `tap_name` is given, the activation at
    // that tap is copied into *tap_out.
    Tensor<S> forward_tapped(const Tensor<S>& x, Mode mode, Rng* rng, const std::string* tap_name,
                             Tensor<S>* tap_out) {
        const Tap* tap = nullptr;
        if (tap_name != nullptr) {
            auto it = taps.find(*tap_name);
            if (it == taps.end())
                raise(ErrorCategory::Tap, "unknown embedding tap '" + *tap_name + "'");
            tap = &it->second;
        }
        ForwardCtx ctx;
        ctx.mode = mode;
        ctx.rng = rng;
        Tensor<S> cur = x;
        for (std::size_t i = 0; i < layers.size(); ++i) {
            cur = layers[i]->forward(cur, ctx);
            if (tap != nullptr && tap->layer_index == i && tap_out != nullptr) *tap_out = cur;
        }
        last_pattern_ = ctx.pattern;
        return cur;
    }

    // Backpropagates d loss / d output, accumulating parameter gradients, and
    // returns d loss / d input.
    Tensor<S> backward(const Tensor<S>& dout) {
        return backward_from(layers.size() - 1, dout);
    }

    // Same, but the gradient enters at the output of layer `layer_index`
    // (used when a fusion head feeds gradients back into a tapped branch).
    Tensor<S> backward_from(std::size_t layer_index, const Tensor<S>& grad) {
        Tensor<S> cur = grad;
        for (std::size_t i = layer_index + 1; i-- > 0;) cur = layers[i]->backward(cur);
        return cur;
    }

    std::vector<Parameter<S>*> parameters() {
        std::vector<Parameter<S>*> out;
        for (auto& l : layers) l->collect_params(out);
        return out;
    }

    std::vector<std::pair<std::string, Tensor<S>*>> buffers() {
        std::vector<std::pair<std::string, Tensor<S>*>> out;
        for (auto& l : layers) l->collect_buffers(out);
        return out;
    }

    void zero_grad() {
        for (Parameter<S>* p : parameters())
            for (auto& g : p->grad.vec()) g = S(0);
    }

    // Parameter names must be unique; called by builders after assembly.
    void check_unique_names() {
        std::set<std::string> seen;
        for (Parameter<S>* p : parameters())
            if (!seen.insert(p->name).second)
                raise(ErrorCategory::Config, "duplicate parameter name '" + p->name + "'");
        for (auto& [name, t] : buffers())
            if (!seen.insert(name).second)
                raise(ErrorCategory::Config, "duplicate buffer name '" + name + "'");
    }

    std::uint64_t last_pattern() const { return last_pattern_; }

    std::size_t tap_dim(const std::string& name) const {
        auto it = taps.find(name);
        if (it == taps.end()) raise(ErrorCategory::Tap, "unknown embedding tap '" + name + "'");
        return it->second.dim;
    }

    void save(const std::filesystem::path& path) {
        std::vector<NamedTensor> entries;
        auto add = [&entries](const std::string& name, const Tensor<S>& t) {
            NamedTensor e;
            e.name = name;
            e.dims.assign(t.shape().begin(), t.shape().end());
            e.data.resize(t.size());
            for (std::size_t i = 0; i < t.size(); ++i) e.data[i] = static_cast<float>(t[i]);
            entries.push_back(std::move(e));
        };
        for (Parameter<S>* p : parameters()) add(p->name, p->value);
        for (auto& [name, t] : buffers()) add(name, *t);
        write_archive(path, entries);
    }

    void load(const std::filesystem::path& path) {
        auto entries = read_archive(path);
        std::map<std::string, const NamedTensor*> by_name;
        for (const auto& e : entries) by_name[e.name] = &e;
        auto fetch = [&](const std::string& name, Tensor<S>& dst) {
            auto it = by_name.find(name);
            if (it == by_name.end())
                raise(ErrorCategory::Parse,
                      "archive " + path.string() + " missing tensor '" + name + "'");
            const NamedTensor& e = *it->second;
            std::vector<std::size_t> dims(e.dims.begin(), e.dims.end());
            if (dims != dst.shape())
                raise(ErrorCategory::Shape, "archive tensor '" + name + "' has shape " +
                                                shape_string(dims) + ", model expects " +
                                                shape_string(dst.shape()));
            for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<S>(e.data[i]);
        };
        for (Parameter<S>* p : parameters()) fetch(p->name, p->value);
        for (auto& [name, t] : buffers()) fetch(name, *t);
    }

private:
    std::uint64_t last_pattern_ = 0;
};

// Eval-mode activation at a registered tap.
template <typename S>
Tensor<S> extract_embedding(Model<S>& model, const Tensor<S>& batch, const std::string& tap) {
    Tensor<S> emb;
    model.forward_tapped(batch, Mode::Eval, nullptr, &tap, &emb);
    return emb;
}

}  // namespace fpd
