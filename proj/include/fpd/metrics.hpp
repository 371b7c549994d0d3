#pragma once

#include <string>
#include <vector>

namespace fpd {

struct ConfusionCounts {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

    std::size_t total() const { return tp + fp + tn + fn; }
};

// Positive class is 1 (palsy present).
ConfusionCounts confusion(const std::vector<int>& preds, const std::vector<int>& labels);

// Percentages in [0,100]. A zero denominator yields 0 with the matching
// degenerate flag set; degenerate folds still enter averages at their
// recorded values.
struct Prf {
    double precision = 0.0, recall = 0.0, f1 = 0.0;
    bool degenerate_precision = false, degenerate_recall = false, degenerate_f1 = false;
};

Prf prf(const ConfusionCounts& counts);

struct FoldMetrics {
    std::string patient_id;
    ConfusionCounts counts;
    Prf metrics;
};

struct Averages {
    double f1 = 0.0, precision = 0.0, recall = 0.0;
};

// Unweighted arithmetic mean over folds (macro over patients).
Averages aggregate_lopo(const std::vector<FoldMetrics>& folds);

}  // namespace fpd
