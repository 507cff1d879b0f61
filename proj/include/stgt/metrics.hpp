#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "stgt/matrix.hpp"

namespace stgt {

struct Confusion {
    int64_t tp = 0;
    int64_t fp = 0;
    int64_t tn = 0;
    int64_t fn = 0;
};

/// Threshold rule: predicted fraudulent iff P >= threshold. Counts cover the
/// masked nodes only and are invariant to mask order.
Confusion confusion(const Matrix& p, const std::vector<int>& labels,
                    const std::vector<int>& mask, double threshold);

struct PrfScores {
    double recall = 0.0;
    double precision = 0.0;
    double f1 = 0.0;
};

/// recall = tp/(tp+fn), precision = tp/(tp+fp), f1 = 2RP/(R+P); any 0/0
/// resolves to 0.
PrfScores recall_precision_f1(int64_t tp, int64_t fp, int64_t fn);

/// Rank-based AUC (Mann–Whitney): average ranks for ties, ranks ascending
/// from 1. Requires at least one positive and one negative in the mask.
double auc_score(const std::vector<double>& scores, const std::vector<int>& labels,
                 const std::vector<int>& mask);

struct MetricsReport {
    int64_t tp = 0;
    int64_t fp = 0;
    int64_t tn = 0;
    int64_t fn = 0;
    double recall = 0.0;
    double precision = 0.0;
    double f1 = 0.0;
    double auc = 0.0;
    double threshold = 0.5;
};

MetricsReport evaluate(const Matrix& p, const std::vector<int>& labels,
                       const std::vector<int>& mask, double threshold);

/// Keys, in order: recall, precision, f1, auc, tp, fp, tn, fn, threshold.
nlohmann::ordered_json metrics_json(const MetricsReport& report);

} // namespace stgt
