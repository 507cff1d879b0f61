#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "stgt/ingest.hpp"
#include "stgt/model.hpp"
#include "stgt/synthgen.hpp"
#include "stgt/train.hpp"

namespace stgt {

/// Flat dotted-key configuration against a fixed registry of known keys.
/// Values are canonicalized on entry (booleans to true/false, numbers to
/// their shortest exact form), so the hash never depends on formatting.
class RunConfig {
public:
    RunConfig(); // registry defaults

    /// `key = value` lines; blank lines and lines starting with '#' skipped.
    /// Unknown keys and malformed values are rejected with the file line.
    void load_file(const std::string& path);

    /// One `key=value` override (the --set form). Unknown keys rejected.
    void set_pair(const std::string& pair);
    void set(const std::string& key, const std::string& value);

    bool has(const std::string& key) const;
    std::string get_string(const std::string& key) const;
    double get_double(const std::string& key) const;
    int get_int(const std::string& key) const;
    int64_t get_i64(const std::string& key) const;
    uint64_t get_u64(const std::string& key) const;
    bool get_bool(const std::string& key) const;

    /// Every key in sorted order, one `key = value` line each.
    std::string resolved_text() const;

    /// 16 hex digits over the keys that determine a trained model's
    /// identity: temporal.*, gnn.*, attn.*, ingest.*, split.*, and
    /// train.seed. Training-schedule keys (lr, epochs, threshold) and
    /// synth.* stay outside: the data file itself carries the former's
    /// effect, and retraining knobs must not invalidate checkpoints they
    /// do not influence structurally.
    std::string hash() const;

    // Typed views for the pipeline stages.
    SynthConfig synth_config() const;
    GraphBuildOptions graph_options() const;
    double downsample_ratio() const;
    ModelConfig model_config(int feature_dim, int relations) const;
    TrainOptions train_options() const;
    double threshold() const;
    /// split.boundary when nonzero, otherwise the timestamp at the
    /// split.time_fraction quantile of the records.
    int64_t split_boundary(const std::vector<TransactionRecord>& records) const;

private:
    std::map<std::string, std::string> values_;
};

/// "name:entities:pool" triples separated by commas.
std::vector<RelationSpec> parse_relation_specs(const std::string& text);

} // namespace stgt
