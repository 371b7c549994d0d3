#include "fpd/folds.hpp"

#include "fpd/error.hpp"

namespace fpd {

FoldPlan lopo_folds(const Manifest& m) {
    if (m.patients.size() < 2)
        raise(ErrorCategory::Protocol, "leave-one-patient-out needs at least 2 patients, got " +
                                           std::to_string(m.patients.size()));
    FoldPlan plan;
    plan.folds.reserve(m.patients.size());
    for (const PatientEntry& held_out : m.patients) {
        Fold fold;
        fold.held_out_patient_id = held_out.patient_id;
        for (const PatientEntry& p : m.patients) {
            auto& side = (p.patient_id == held_out.patient_id) ? fold.test : fold.train;
            for (const VideoEntry& v : p.videos)
                for (const FrameRecord& f : v.frames) side.push_back(&f);
        }
        plan.folds.push_back(std::move(fold));
    }
    return plan;
}

std::vector<std::vector<const FrameRecord*>> batch_iterator(
    const std::vector<const FrameRecord*>& frames, std::size_t batch_size, Rng& rng,
    bool shuffle) {
    if (batch_size < 1)
        raise(ErrorCategory::Param, "batch_size must be at least 1");
    std::vector<const FrameRecord*> order = frames;
    if (shuffle) rng.shuffle(order);
    std::vector<std::vector<const FrameRecord*>> batches;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
        std::size_t end = std::min(start + batch_size, order.size());
        batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                             order.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return batches;
}

}  // namespace fpd
