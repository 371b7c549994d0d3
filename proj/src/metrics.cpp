#include "fpd/metrics.hpp"

#include "fpd/error.hpp"

namespace fpd {

ConfusionCounts confusion(const std::vector<int>& preds, const std::vector<int>& labels) {
    if (preds.size() != labels.size())
        raise(ErrorCategory::Input, "confusion: " + std::to_string(preds.size()) +
                                        " predictions vs " + std::to_string(labels.size()) +
                                        " labels");
    ConfusionCounts c;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if ((preds[i] != 0 && preds[i] != 1) || (labels[i] != 0 && labels[i] != 1))
            raise(ErrorCategory::Label, "confusion: classes must be 0 or 1");
        if (labels[i] == 1)
            preds[i] == 1 ? ++c.tp : ++c.fn;
        else
            preds[i] == 1 ? ++c.fp : ++c.tn;
    }
    return c;
}

Prf prf(const ConfusionCounts& counts) {
    Prf out;
    const std::size_t pd = counts.tp + counts.fp;
    const std::size_t rd = counts.tp + counts.fn;
    if (pd == 0)
        out.degenerate_precision = true;
    else
        out.precision = 100.0 * static_cast<double>(counts.tp) / static_cast<double>(pd);
    if (rd == 0)
        out.degenerate_recall = true;
    else
        out.recall = 100.0 * static_cast<double>(counts.tp) / static_cast<double>(rd);
    if (out.precision + out.recall == 0.0)
        out.degenerate_f1 = true;
    else
        out.f1 = 2.0 * out.precision * out.recall / (out.precision + out.recall);
    return out;
}

Averages aggregate_lopo(const std::vector<FoldMetrics>& folds) {
    if (folds.empty())
        raise(ErrorCategory::Protocol, "aggregate_lopo needs at least one fold");
    Averages avg;
    for (const FoldMetrics& f : folds) {
        avg.f1 += f.metrics.f1;
        avg.precision += f.metrics.precision;
        avg.recall += f.metrics.recall;
    }
    const double n = static_cast<double>(folds.size());
    avg.f1 /= n;
    avg.precision /= n;
    avg.recall /= n;
    return avg;
}

}  // namespace fpd
