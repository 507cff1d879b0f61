#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stgt/config.hpp"
#include "stgt/ingest.hpp"
#include "stgt/metrics.hpp"

namespace stgt {

struct PreparedDataset {
    CsvSchema schema;
    std::vector<TransactionRecord> records; // rows that became graph nodes
    int64_t boundary = 0;                   // train side is t < boundary
    MultiRelationGraph graph;
};

/// Shared front half of train/evaluate/ablate: parse `data_path` with the
/// schema file beside it (`data_path + ".schema"`), derive the time-split
/// boundary, optionally downsample legitimate training rows, fit the feature
/// codec on training rows only, and build the validated multi-relation graph.
PreparedDataset prepare_dataset(const RunConfig& cfg, const std::string& data_path);

/// Writes the synthetic dataset to `out_path` plus three sidecars:
/// `.schema` (column roles), `.audit.json` (ground-truth generation
/// statistics), and `.config.txt` (the resolved run configuration).
void cmd_generate(const RunConfig& cfg, const std::string& out_path);

/// Trains on the data file and fills `out_dir` with checkpoint.json,
/// training_log.csv, graph_summary.json, and config_resolved.txt. A diverged
/// run still writes the last finite parameters and reports success; the
/// divergence is noted on stderr.
void cmd_train(const RunConfig& cfg, const std::string& data_path, const std::string& out_dir);

/// Scores the checkpoint on the data file's test rows. Refuses checkpoints
/// whose stored config hash disagrees with the current run configuration.
/// Metrics JSON goes to stdout and to `out_path` (with a `.config.txt`
/// sidecar beside it).
void cmd_evaluate(const RunConfig& cfg, const std::string& checkpoint_path,
                  const std::string& data_path, const std::string& out_path);

struct AblationRow {
    std::string variant;
    double recall = 0.0;
    double f1 = 0.0;
    double auc = 0.0;
};

/// Trains and scores the four model variants on one shared dataset and seed:
/// the full model, then one switch off at a time (temporal encoding,
/// transformer stage, relation attention).
std::vector<AblationRow> ablation_rows(const RunConfig& cfg, const PreparedDataset& data);

/// Runs ablation_rows over the data file and writes out_dir/ablation.csv
/// ("variant,recall,f1,auc") plus config_resolved.txt.
void cmd_ablate(const RunConfig& cfg, const std::string& data_path, const std::string& out_dir);

} // namespace stgt
