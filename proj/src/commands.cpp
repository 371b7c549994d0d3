#include "fpd/commands.hpp"

#include <atomic>
#include <functional>
#include <map>
#include <mutex>
#include <thread>

#include "fpd/cache.hpp"
#include "fpd/error.hpp"
#include "fpd/folds.hpp"
#include "fpd/fsutil.hpp"
#include "fpd/fusion.hpp"
#include "fpd/image.hpp"

namespace fpd {

namespace {

// ---------------------------------------------------------------------------
// Feature assembly

// All frames of one modality stacked into a single tensor, with labels and
// a key -> row index so folds can gather their slices.
struct FeatureStore {
    Tensor<float> features;
    std::vector<int> labels;
    std::map<std::string, std::size_t> row_of;
};

std::vector<std::size_t> rows_for(const FeatureStore& store,
                                  const std::vector<const FrameRecord*>& frames) {
    std::vector<std::size_t> rows;
    rows.reserve(frames.size());
    for (const FrameRecord* f : frames) {
        auto it = store.row_of.find(f->key());
        if (it == store.row_of.end())
            raise(ErrorCategory::Protocol, "no features for frame " + f->key());
        rows.push_back(it->second);
    }
    return rows;
}

TrainingSet<float> training_slice(const FeatureStore& store,
                                  const std::vector<const FrameRecord*>& frames) {
    auto rows = rows_for(store, frames);
    TrainingSet<float> set;
    set.inputs = gather_rows(store.features, rows);
    std::vector<int> labels(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) labels[i] = store.labels[rows[i]];
    set.targets = one_hot_targets<float>(labels);
    return set;
}

std::vector<int> labels_slice(const FeatureStore& store,
                              const std::vector<const FrameRecord*>& frames) {
    auto rows = rows_for(store, frames);
    std::vector<int> labels(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) labels[i] = store.labels[rows[i]];
    return labels;
}

// Element count of one sample of the given modality.
std::vector<std::size_t> sample_shape(Modality m, const RunConfig& cfg) {
    switch (m) {
        case Modality::Coords: return {kSubsetSize * 2};
        case Modality::Blendshapes: return {kBlendshapeCount};
        case Modality::Rgb:
        case Modality::Bnw: return {3, cfg.image_size, cfg.image_size};
        case Modality::BnwRgb: return {6, cfg.image_size, cfg.image_size};
        default:
            raise(ErrorCategory::Config,
                  std::string("no direct feature store for ") + modality_token(m));
    }
}

FeatureStore build_store(const std::vector<const FrameRecord*>& frames, Modality m,
                         const RunConfig& cfg, const ModalityCache& cache) {
    FeatureStore store;
    std::vector<std::size_t> shape = sample_shape(m, cfg);
    shape.insert(shape.begin(), frames.size());
    store.features = Tensor<float>(shape);
    store.labels.resize(frames.size());
    const std::size_t row_elems = store.features.size() / frames.size();

    for (std::size_t i = 0; i < frames.size(); ++i) {
        const FrameRecord& f = *frames[i];
        float* dst = store.features.data() + i * row_elems;
        auto copy_row = [&](const Tensor<float>& t) {
            if (t.size() != row_elems)
                raise(ErrorCategory::Shape, "frame " + f.key() + ": feature size " +
                                                std::to_string(t.size()) + " != expected " +
                                                std::to_string(row_elems));
            for (std::size_t e = 0; e < row_elems; ++e) dst[e] = t[e];
        };
        switch (m) {
            case Modality::Coords:
                copy_row(cache.read_coords(f).reshaped({kSubsetSize * 2}));
                break;
            case Modality::Blendshapes:
                copy_row(cache.read_blend(f));
                break;
            case Modality::Rgb:
                copy_row(preprocess_rgb(read_ppm(f.rgb_path), cfg.image_size, cfg.rgb_norm));
                break;
            case Modality::Bnw:
                copy_row(raster_to_tensor(cache.read_bnw(f), cfg.image_size));
                break;
            case Modality::BnwRgb: {
                Tensor<float> rgb =
                    preprocess_rgb(read_ppm(f.rgb_path), cfg.image_size, cfg.rgb_norm);
                Tensor<float> bnw = raster_to_tensor(cache.read_bnw(f), cfg.image_size);
                const std::size_t half = rgb.size();
                for (std::size_t e = 0; e < half; ++e) dst[e] = rgb[e];
                for (std::size_t e = 0; e < half; ++e) dst[half + e] = bnw[e];
                break;
            }
            default:
                raise(ErrorCategory::Config, "unreachable modality");
        }
        store.labels[i] = f.positive() ? 1 : 0;
        store.row_of[f.key()] = i;
    }
    return store;
}

// ---------------------------------------------------------------------------
// Config plumbing

std::vector<std::size_t> subset_for(const RunConfig& cfg) {
    return cfg.subset_indices.empty() ? default_subset_indices()
                                      : load_subset_indices(cfg.subset_indices);
}

ContourSpec contours_for(const RunConfig& cfg) {
    return cfg.contour_spec.empty() ? default_contour_spec()
                                    : load_contour_spec(cfg.contour_spec);
}

bool needs_cache(Modality m) { return m != Modality::Rgb; }

void require_cache(const Manifest& manifest, const ModalityCache& cache) {
    for (const FrameRecord* f : manifest.all_frames())
        if (!cache.fresh(*f))
            raise(ErrorCategory::Protocol,
                  "modality cache is missing or stale for frame " + f->key() +
                      "; run `preprocess` first");
}

Model<float> build_unimodal(Modality m, const RunConfig& cfg, Rng& rng) {
    switch (m) {
        case Modality::Coords: return build_fnn<float>(FnnConfig::coords_preset(), rng);
        case Modality::Blendshapes:
            return build_fnn<float>(FnnConfig::blendshapes_preset(), rng);
        case Modality::Rgb:
        case Modality::Bnw: {
            BackboneConfig bc = cfg.backbone;
            bc.in_channels = 3;
            return build_cnn<float>(bc, rng);
        }
        case Modality::BnwRgb: return build_dual_image_cnn<float>(cfg.backbone, rng);
        default:
            raise(ErrorCategory::Config,
                  std::string("no unimodal model for ") + modality_token(m));
    }
}

// ---------------------------------------------------------------------------
// Fusion training

struct FusionParts {
    Model<float> cnn;   // bnw branch
    Model<float> fnn;   // blendshape branch
    LossHistory cnn_history;
    LossHistory fnn_history;
};

FusionParts train_fusion_branches(const RunConfig& cfg, const FeatureStore& bnw_store,
                                  const FeatureStore& blend_store,
                                  const std::vector<const FrameRecord*>& train_frames,
                                  std::uint64_t seed) {
    FusionParts parts;
    {
        Rng rng(seed);
        BackboneConfig bc = cfg.backbone;
        bc.in_channels = 3;
        parts.cnn = build_cnn<float>(bc, rng);
        parts.cnn_history = fit(parts.cnn, training_slice(bnw_store, train_frames),
                                cfg.resolve_hyper(Modality::Bnw, seed));
    }
    {
        Rng rng(seed);
        parts.fnn = build_fnn<float>(FnnConfig::blendshapes_preset(), rng);
        parts.fnn_history = fit(parts.fnn, training_slice(blend_store, train_frames),
                                cfg.resolve_hyper(Modality::Blendshapes, seed));
    }
    return parts;
}

Tensor<float> embed_all(Model<float>& model, const Tensor<float>& inputs,
                        const std::string& tap, std::size_t batch = 64) {
    const std::size_t n = inputs.dim(0);
    Tensor<float> out;
    std::vector<std::size_t> rows;
    for (std::size_t start = 0; start < n; start += batch) {
        const std::size_t end = std::min(start + batch, n);
        rows.resize(end - start);
        std::iota(rows.begin(), rows.end(), start);
        Tensor<float> emb = extract_embedding(model, gather_rows(inputs, rows), tap);
        if (start == 0) out = Tensor<float>({n, emb.dim(1)});
        for (std::size_t r = 0; r < rows.size(); ++r)
            for (std::size_t c = 0; c < emb.dim(1); ++c) out.at(start + r, c) = emb.at(r, c);
    }
    return out;
}

// Embeddings of the train slice feed the head; the unimodal models stay
// frozen unless fine_tune is set, in which case gradients flow back through
// both taps and all three parameter sets step together.
LossHistory train_fusion_head(Model<float>& head, FusionParts& parts, const RunConfig& cfg,
                              const FeatureStore& bnw_store, const FeatureStore& blend_store,
                              const std::vector<const FrameRecord*>& train_frames,
                              std::uint64_t seed) {
    const Hyper hp = cfg.resolve_hyper(Modality::EarlyFusion, seed);
    TrainingSet<float> bnw_set = training_slice(bnw_store, train_frames);
    TrainingSet<float> blend_set = training_slice(blend_store, train_frames);

    if (!cfg.fine_tune) {
        TrainingSet<float> head_set;
        head_set.inputs =
            concat_embeddings(embed_all(parts.cnn, bnw_set.inputs, cfg.tap_a),
                              embed_all(parts.fnn, blend_set.inputs, cfg.tap_b));
        head_set.targets = bnw_set.targets;
        return fit(head, head_set, hp);
    }

    // end-to-end: manual batch loop over both branches and the head
    const std::size_t tap_a_idx = parts.cnn.taps.at(cfg.tap_a).layer_index;
    const std::size_t tap_b_idx = parts.fnn.taps.at(cfg.tap_b).layer_index;
    const std::size_t da = parts.cnn.tap_dim(cfg.tap_a);
    const std::size_t db = parts.fnn.tap_dim(cfg.tap_b);

    Rng rng(hp.seed);
    const std::size_t n = train_frames.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto head_params = head.parameters();
    auto cnn_params = parts.cnn.parameters();
    auto fnn_params = parts.fnn.parameters();

    LossHistory history;
    for (std::size_t epoch = 0; epoch < hp.epochs; ++epoch) {
        rng.shuffle(order);
        double loss_sum = 0.0;
        std::size_t elems = 0;
        for (auto [start, end] : batch_ranges(n, hp.batch_size)) {
            std::vector<std::size_t> rows(order.begin() + static_cast<std::ptrdiff_t>(start),
                                          order.begin() + static_cast<std::ptrdiff_t>(end));
            Tensor<float> emb_a, emb_b;
            parts.cnn.forward_tapped(gather_rows(bnw_set.inputs, rows), Mode::Train, &rng,
                                     &cfg.tap_a, &emb_a);
            parts.fnn.forward_tapped(gather_rows(blend_set.inputs, rows), Mode::Train, &rng,
                                     &cfg.tap_b, &emb_b);
            Tensor<float> x = concat_embeddings(emb_a, emb_b);
            Tensor<float> probs = head.forward(x, Mode::Train, &rng);
            Tensor<float> yb = gather_rows(bnw_set.targets, rows);
            BceResult<float> bce = bce_loss(probs, yb);
            loss_sum += bce.loss * static_cast<double>(probs.size());
            elems += probs.size();

            Tensor<float> dx = head.backward(bce.grad);
            const std::size_t batch_n = rows.size();
            Tensor<float> d_emb_a({batch_n, da});
            Tensor<float> d_emb_b({batch_n, db});
            for (std::size_t r = 0; r < batch_n; ++r) {
                for (std::size_t c = 0; c < da; ++c) d_emb_a.at(r, c) = dx.at(r, c);
                for (std::size_t c = 0; c < db; ++c) d_emb_b.at(r, c) = dx.at(r, da + c);
            }
            parts.cnn.backward_from(tap_a_idx, d_emb_a);
            parts.fnn.backward_from(tap_b_idx, d_emb_b);
            sgd_step(head_params, hp.lr);
            sgd_step(cnn_params, cfg.resolve_hyper(Modality::Bnw, seed).lr);
            sgd_step(fnn_params, cfg.resolve_hyper(Modality::Blendshapes, seed).lr);
        }
        history.epoch_mean_loss.push_back(loss_sum / static_cast<double>(elems));
    }
    return history;
}

Model<float> make_head(const RunConfig& cfg, const FusionParts& parts, std::uint64_t seed) {
    EarlyFusionConfig efc;
    efc.tap_a_dim = parts.cnn.taps.at(cfg.tap_a).dim;
    efc.tap_b_dim = parts.fnn.taps.at(cfg.tap_b).dim;
    efc.head_sizes = cfg.fusion_head_sizes;
    Rng rng(seed);
    return build_early_fusion<float>(efc, rng);
}

// ---------------------------------------------------------------------------
// Per-fold work

struct FoldModels {
    Model<float> primary;           // unimodal, or the bnw cnn for fusion
    Model<float> secondary;         // blendshape fnn for fusion
    Model<float> head;              // early fusion only
    bool has_secondary = false;
    bool has_head = false;
};

std::vector<int> fold_predictions(const RunConfig& cfg, FoldModels& models,
                                  const std::map<Modality, FeatureStore>& stores,
                                  const std::vector<const FrameRecord*>& test_frames) {
    switch (cfg.modality) {
        case Modality::EarlyFusion: {
            Tensor<float> xa = gather_rows(stores.at(Modality::Bnw).features,
                                           rows_for(stores.at(Modality::Bnw), test_frames));
            Tensor<float> xb =
                gather_rows(stores.at(Modality::Blendshapes).features,
                            rows_for(stores.at(Modality::Blendshapes), test_frames));
            Tensor<float> x = concat_embeddings(embed_all(models.primary, xa, cfg.tap_a),
                                                embed_all(models.secondary, xb, cfg.tap_b));
            return predict_class(predict_probs(models.head, x));
        }
        case Modality::LateFusion: {
            Tensor<float> xa = gather_rows(stores.at(Modality::Bnw).features,
                                           rows_for(stores.at(Modality::Bnw), test_frames));
            Tensor<float> xb =
                gather_rows(stores.at(Modality::Blendshapes).features,
                            rows_for(stores.at(Modality::Blendshapes), test_frames));
            return late_fusion_predict(predict_probs(models.primary, xa),
                                       predict_probs(models.secondary, xb));
        }
        default: {
            const FeatureStore& store = stores.at(cfg.modality);
            Tensor<float> x = gather_rows(store.features, rows_for(store, test_frames));
            return predict_class(predict_probs(models.primary, x));
        }
    }
}

FoldModels train_fold(const RunConfig& cfg, const std::map<Modality, FeatureStore>& stores,
                      const std::vector<const FrameRecord*>& train_frames, std::uint64_t seed) {
    FoldModels models;
    if (cfg.modality == Modality::EarlyFusion || cfg.modality == Modality::LateFusion) {
        FusionParts parts =
            train_fusion_branches(cfg, stores.at(Modality::Bnw),
                                  stores.at(Modality::Blendshapes), train_frames, seed);
        if (cfg.modality == Modality::EarlyFusion) {
            models.head = make_head(cfg, parts, seed);
            train_fusion_head(models.head, parts, cfg, stores.at(Modality::Bnw),
                              stores.at(Modality::Blendshapes), train_frames, seed);
            models.has_head = true;
        }
        models.primary = std::move(parts.cnn);
        models.secondary = std::move(parts.fnn);
        models.has_secondary = true;
    } else {
        Rng rng(seed);
        models.primary = build_unimodal(cfg.modality, cfg, rng);
        fit(models.primary, training_slice(stores.at(cfg.modality), train_frames),
            cfg.resolve_hyper(cfg.modality, seed));
    }
    return models;
}

void save_fold_models(const RunConfig& cfg, FoldModels& models,
                      const std::filesystem::path& fold_dir) {
    if (cfg.modality == Modality::EarlyFusion || cfg.modality == Modality::LateFusion) {
        models.primary.save(fold_dir / "weights_bnw.nt");
        models.secondary.save(fold_dir / "weights_blendshapes.nt");
        if (models.has_head) models.head.save(fold_dir / "weights_head.nt");
    } else {
        models.primary.save(fold_dir /
                            ("weights_" + std::string(modality_token(cfg.modality)) + ".nt"));
    }
}

// Runs fn(0..n-1) on up to `workers` threads; rethrows the first failure.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn) {
    if (workers <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto body = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    const std::size_t count = std::min(workers, n);
    pool.reserve(count);
    for (std::size_t t = 0; t < count; ++t) pool.emplace_back(body);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

std::vector<Modality> modalities_needed(Modality m) {
    if (m == Modality::EarlyFusion || m == Modality::LateFusion)
        return {Modality::Bnw, Modality::Blendshapes};
    return {m};
}

}  // namespace

// ---------------------------------------------------------------------------
// Commands

PreprocessResult cmd_preprocess(const RunConfig& cfg) {
    Manifest manifest = load_manifest(cfg.manifest);
    ModalityCache cache(cfg.cache_dir, cfg.raster_size);
    PreprocessStats stats =
        preprocess_frames(manifest, cache, subset_for(cfg), contours_for(cfg));
    return {stats.written, stats.skipped};
}

TrainResult cmd_train(const RunConfig& cfg) {
    Manifest manifest = load_manifest(cfg.manifest);
    ModalityCache cache(cfg.cache_dir, cfg.raster_size);
    if (needs_cache(cfg.modality)) require_cache(manifest, cache);

    std::vector<const FrameRecord*> frames;
    for (const FrameRecord* f : manifest.all_frames())
        if (!cfg.exclude_patient || f->patient_id != *cfg.exclude_patient)
            frames.push_back(f);
    if (frames.empty()) raise(ErrorCategory::Protocol, "empty training split");

    std::map<Modality, FeatureStore> stores;
    for (Modality m : modalities_needed(cfg.modality))
        stores.emplace(m, build_store(frames, m, cfg, cache));

    ensure_dir(cfg.out_dir);
    TrainResult result;
    auto save_pair = [&](Model<float>& model, const std::string& token,
                         const LossHistory& history) {
        auto wpath = cfg.out_dir / ("weights_" + token + ".nt");
        auto hpath = cfg.out_dir / ("history_" + token + ".csv");
        model.save(wpath);
        save_history(hpath, history);
        result.weight_files.push_back(wpath);
        result.history_files.push_back(hpath);
    };

    const std::uint64_t seed = cfg.seed_base;
    if (cfg.modality == Modality::EarlyFusion || cfg.modality == Modality::LateFusion) {
        FusionParts parts = train_fusion_branches(cfg, stores.at(Modality::Bnw),
                                                  stores.at(Modality::Blendshapes), frames, seed);
        // head training may fine-tune the branches, so it runs before saving
        Model<float> head;
        LossHistory head_history;
        if (cfg.modality == Modality::EarlyFusion) {
            head = make_head(cfg, parts, seed);
            head_history = train_fusion_head(head, parts, cfg, stores.at(Modality::Bnw),
                                             stores.at(Modality::Blendshapes), frames, seed);
        }
        save_pair(parts.cnn, "bnw", parts.cnn_history);
        save_pair(parts.fnn, "blendshapes", parts.fnn_history);
        if (cfg.modality == Modality::EarlyFusion) save_pair(head, "head", head_history);
    } else {
        Rng rng(seed);
        Model<float> model = build_unimodal(cfg.modality, cfg, rng);
        LossHistory history = fit(model, training_slice(stores.at(cfg.modality), frames),
                                  cfg.resolve_hyper(cfg.modality, seed));
        save_pair(model, modality_token(cfg.modality), history);
    }
    return result;
}

EvalResult cmd_eval_lopo(const RunConfig& cfg) {
    Manifest manifest = load_manifest(cfg.manifest);
    ModalityCache cache(cfg.cache_dir, cfg.raster_size);
    if (needs_cache(cfg.modality)) require_cache(manifest, cache);

    FoldPlan plan = lopo_folds(manifest);
    std::vector<const FrameRecord*> all = manifest.all_frames();
    std::map<Modality, FeatureStore> stores;
    for (Modality m : modalities_needed(cfg.modality))
        stores.emplace(m, build_store(all, m, cfg, cache));

    ensure_dir(cfg.out_dir);
    std::vector<FoldMetrics> fold_metrics(plan.folds.size());
    parallel_for(plan.folds.size(), cfg.workers, [&](std::size_t i) {
        const Fold& fold = plan.folds[i];
        const std::uint64_t seed = cfg.seed_base + i;
        FoldModels models = train_fold(cfg, stores, fold.train, seed);
        std::vector<int> preds = fold_predictions(cfg, models, stores, fold.test);
        std::vector<int> labels = labels_slice(stores.begin()->second, fold.test);
        FoldMetrics fm;
        fm.patient_id = fold.held_out_patient_id;
        fm.counts = confusion(preds, labels);
        fm.metrics = prf(fm.counts);
        fold_metrics[i] = fm;

        auto fold_dir = cfg.out_dir / ("fold_" + fold.held_out_patient_id);
        ensure_dir(fold_dir);
        save_fold_models(cfg, models, fold_dir);
    });

    Averages avg = aggregate_lopo(fold_metrics);
    EvalResult result;
    result.row = {report_modality_label(cfg.modality), report_model_label(cfg.modality), avg.f1,
                  avg.precision, avg.recall};
    result.folds = fold_metrics;
    result.report_path = cfg.out_dir / "report.csv";
    result.details_path = cfg.out_dir / "folds.csv";
    emit_report(result.report_path, {result.row});
    emit_fold_details(result.details_path, fold_metrics);
    return result;
}

std::vector<ReportRow> cmd_report(const std::vector<std::filesystem::path>& report_files,
                                  const std::filesystem::path& out_path) {
    std::vector<ReportRow> merged = merge_reports(report_files);
    emit_report(out_path, merged);
    return merged;
}

}  // namespace fpd
