#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "stgt/ingest.hpp"
#include "stgt/record.hpp"

namespace stgt {

struct RelationSpec {
    std::string name;
    int n_entities = 0;  // full entity pool
    int fraud_pool = 0;  // small pool shared by signature fraud rows
};

/// Planted-signal transaction generator. Two fraud signatures: a spatial one
/// (signature fraud draws entities from the small per-relation pools, so
/// fraud rows share devices far more often than legitimate rows) and a
/// temporal one (fraud timestamps cluster into bursts of width burst_window,
/// while legitimate timestamps are uniform over the horizon). The
/// spatial_signal_fraction knob keeps the signatures from overlapping
/// completely: the remaining fraud rows draw entities like legitimate rows
/// and are detectable only through burst timing.
struct SynthConfig {
    int n_transactions = 4000;
    double fraud_ratio = 0.3;
    std::vector<RelationSpec> relations{{"ip", 900, 25}, {"mac", 700, 18}};
    int n_continuous = 6;
    double feature_noise = 1.0; // class-conditional Gaussian spread
    double feature_shift = 0.4; // class mean separation per feature
    double horizon = 30.0 * 86400.0; // seconds
    double burst_window = 900.0;     // seconds
    int burst_size = 24;             // fraud rows per burst (round-robin fill)
    double spatial_signal_fraction = 0.65;
    // When positive, burst centers recur at this many fixed time-of-day
    // phases (attack windows that repeat daily) instead of landing uniformly
    // over the horizon. Recurrence is what lets a model trained on early
    // days carry the timing signal across a time-boundary split.
    int daily_phases = 0;
    uint64_t seed = 1;

    void validate() const;
};

struct SynthResult {
    std::vector<TransactionRecord> records;
    /// Ground-truth generation statistics: exact class counts, per-relation
    /// pair-reuse rates per class, burst centers and intra-burst time
    /// spread, and the AUC of the known optimal linear feature score.
    nlohmann::ordered_json audit;
};

/// Deterministic under cfg.seed; exactly round(n * fraud_ratio) fraud rows.
SynthResult generate(const SynthConfig& cfg);

/// Probability that two random same-class rows share an entity under the
/// given relation column; the quantity behind the audit's reuse rates.
double pair_reuse_rate(const std::vector<TransactionRecord>& records,
                       const std::string& relation, int label);

/// Two-sided two-sample Kolmogorov–Smirnov p-value (asymptotic).
double two_sample_ks_p(std::vector<double> a, std::vector<double> b);

struct SplitMasks {
    std::vector<uint8_t> train; // timestamp < boundary
    std::vector<uint8_t> test;  // timestamp >= boundary
};

/// Time-boundary split; both sides must be nonempty.
SplitMasks split_temporal(const std::vector<TransactionRecord>& records, int64_t boundary);

/// Column layout emitted for generated data: id, timestamp, label, the
/// continuous features, the channel column, then one relation column per
/// configured relation.
CsvSchema synth_schema(const SynthConfig& cfg);

void write_schema(const std::string& path, const CsvSchema& schema);

/// Header plus one row per record, columns in schema order; continuous
/// values at full precision so parse_csv restores them bitwise.
void write_records_csv(const std::string& path, const std::vector<TransactionRecord>& records,
                       const CsvSchema& schema);

} // namespace stgt
