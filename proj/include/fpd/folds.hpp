#pragma once

#include <string>
#include <vector>

#include "fpd/manifest.hpp"
#include "fpd/rng.hpp"

namespace fpd {

struct Fold {
    std::string held_out_patient_id;
    std::vector<const FrameRecord*> train;
    std::vector<const FrameRecord*> test;
};

struct FoldPlan {
    std::vector<Fold> folds;
};

// One fold per patient: every frame of that patient (across all their
// videos) is the test set, everything else trains. Pointers refer into the
// manifest, which must outlive the plan.
FoldPlan lopo_folds(const Manifest& m);

// Deterministic epoch batching: optional seeded shuffle, batches of
// batch_size with the final partial batch emitted.
std::vector<std::vector<const FrameRecord*>> batch_iterator(
    const std::vector<const FrameRecord*>& frames, std::size_t batch_size, Rng& rng,
    bool shuffle);

}  // namespace fpd
