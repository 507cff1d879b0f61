#include "stgt/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "stgt/errors.hpp"

namespace stgt {

namespace {

void check_mask(const Matrix& p, const std::vector<int>& labels, const std::vector<int>& mask) {
    if (p.cols != 1) throw ConfigError("scores must be a single column");
    if (static_cast<size_t>(p.rows) != labels.size()) {
        throw ConfigError("scores and labels disagree on node count");
    }
    if (mask.empty()) throw DataError("evaluation mask is empty");
    for (int idx : mask) {
        if (idx < 0 || idx >= p.rows) {
            throw ConfigError("evaluation mask index " + std::to_string(idx) + " out of range");
        }
        int y = labels[static_cast<size_t>(idx)];
        if (y != 0 && y != 1) {
            throw DataError("node " + std::to_string(idx) + " in the evaluation mask is unlabeled");
        }
    }
}

} // namespace

Confusion confusion(const Matrix& p, const std::vector<int>& labels,
                    const std::vector<int>& mask, double threshold) {
    if (!std::isfinite(threshold)) throw ConfigError("threshold must be finite");
    check_mask(p, labels, mask);
    Confusion c;
    for (int idx : mask) {
        bool predicted = p.at(idx, 0) >= threshold;
        bool actual = labels[static_cast<size_t>(idx)] == 1;
        if (predicted && actual) ++c.tp;
        else if (predicted && !actual) ++c.fp;
        else if (!predicted && actual) ++c.fn;
        else ++c.tn;
    }
    return c;
}

PrfScores recall_precision_f1(int64_t tp, int64_t fp, int64_t fn) {
    if (tp < 0 || fp < 0 || fn < 0) throw ConfigError("confusion counts must be non-negative");
    PrfScores s;
    s.recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    s.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    double denom = s.recall + s.precision;
    s.f1 = denom > 0.0 ? 2.0 * s.recall * s.precision / denom : 0.0;
    return s;
}

double auc_score(const std::vector<double>& scores, const std::vector<int>& labels,
                 const std::vector<int>& mask) {
    if (scores.size() != labels.size()) {
        throw ConfigError("scores and labels disagree on node count");
    }
    if (mask.empty()) throw DataError("evaluation mask is empty");
    int64_t positives = 0;
    int64_t negatives = 0;
    std::vector<std::pair<double, int>> ranked; // (score, label)
    ranked.reserve(mask.size());
    for (int idx : mask) {
        if (idx < 0 || static_cast<size_t>(idx) >= scores.size()) {
            throw ConfigError("evaluation mask index " + std::to_string(idx) + " out of range");
        }
        int y = labels[static_cast<size_t>(idx)];
        if (y != 0 && y != 1) {
            throw DataError("node " + std::to_string(idx) + " in the evaluation mask is unlabeled");
        }
        (y == 1 ? positives : negatives) += 1;
        ranked.emplace_back(scores[static_cast<size_t>(idx)], y);
    }
    if (positives == 0 || negatives == 0) {
        throw DataError("ranking quality is undefined with a single-class mask");
    }

    std::sort(ranked.begin(), ranked.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    // Average ranks across tied groups, ranks 1..n ascending.
    double positive_rank_sum = 0.0;
    size_t i = 0;
    while (i < ranked.size()) {
        size_t j = i;
        while (j < ranked.size() && ranked[j].first == ranked[i].first) ++j;
        double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (size_t k = i; k < j; ++k) {
            if (ranked[k].second == 1) positive_rank_sum += avg_rank;
        }
        i = j;
    }
    double np = static_cast<double>(positives);
    double nn = static_cast<double>(negatives);
    return (positive_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

MetricsReport evaluate(const Matrix& p, const std::vector<int>& labels,
                       const std::vector<int>& mask, double threshold) {
    Confusion c = confusion(p, labels, mask, threshold);
    PrfScores s = recall_precision_f1(c.tp, c.fp, c.fn);
    std::vector<double> column(static_cast<size_t>(p.rows));
    for (int i = 0; i < p.rows; ++i) column[static_cast<size_t>(i)] = p.at(i, 0);

    MetricsReport report;
    report.tp = c.tp;
    report.fp = c.fp;
    report.tn = c.tn;
    report.fn = c.fn;
    report.recall = s.recall;
    report.precision = s.precision;
    report.f1 = s.f1;
    report.auc = auc_score(column, labels, mask);
    report.threshold = threshold;
    return report;
}

nlohmann::ordered_json metrics_json(const MetricsReport& report) {
    nlohmann::ordered_json j;
    j["recall"] = report.recall;
    j["precision"] = report.precision;
    j["f1"] = report.f1;
    j["auc"] = report.auc;
    j["tp"] = report.tp;
    j["fp"] = report.fp;
    j["tn"] = report.tn;
    j["fn"] = report.fn;
    j["threshold"] = report.threshold;
    return j;
}

} // namespace stgt
