#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "stgt/matrix.hpp"
#include "stgt/record.hpp"
#include "stgt/rng.hpp"

namespace stgt {

/// Column roles for a transaction CSV. Field lists keep schema-file order.
struct CsvSchema {
    std::string id_column;
    std::string timestamp_column;
    std::string label_column;
    std::vector<std::string> continuous_fields;
    std::vector<std::string> categorical_fields;
    std::vector<std::string> relation_fields;
};

/// Parses a schema file: one `role:column-name` line per CSV column, where
/// role is one of id, timestamp, label, continuous, categorical, relation.
/// Blank lines and lines starting with '#' are skipped.
CsvSchema parse_schema(const std::string& path);
CsvSchema parse_schema_text(const std::string& text, const std::string& origin);

/// Reads a CSV under the given schema. Rows come back in file order.
/// Throws DataError naming the offending line for malformed rows and a
/// schema error if a required column is missing from the header.
std::vector<TransactionRecord> parse_csv(const std::string& path, const CsvSchema& schema);
std::vector<TransactionRecord> parse_csv_text(const std::string& text, const CsvSchema& schema,
                                              const std::string& origin);

/// Keeps every fraud row; keeps each legitimate row independently with
/// probability `ratio`. Meant for training rows only.
std::vector<TransactionRecord> downsample_legitimate(const std::vector<TransactionRecord>& records,
                                                     double ratio, RngState& rng);

/// One-hot vocabularies and min-max ranges, fitted on training rows only.
class FeatureCodec {
public:
    static FeatureCodec fit(const std::vector<TransactionRecord>& train_records);

    /// Feature layout: continuous fields (sorted by name, min-max scaled,
    /// clamped to [0,1]), then one-hot blocks per categorical field (sorted
    /// by name, vocab in lexicographic order). Unseen categories encode to
    /// an all-zero block; constant continuous columns encode to 0.
    Matrix encode(const std::vector<TransactionRecord>& records) const;

    int feature_dim() const;
    const std::vector<std::string>& continuous_fields() const { return cont_fields_; }
    const std::vector<std::string>& categorical_fields() const { return cat_fields_; }
    const std::vector<std::string>& vocab(const std::string& field) const;

private:
    std::vector<std::string> cont_fields_;
    std::vector<std::pair<double, double>> cont_range_; // fitted (min, max)
    std::vector<std::string> cat_fields_;
    std::vector<std::vector<std::string>> vocabs_;
};

std::vector<double> extract_timestamps(const std::vector<TransactionRecord>& records);

/// Immutable transaction graph: one node per record, one symmetric edge set
/// per relation, plus features, timestamps, labels, and split masks.
struct MultiRelationGraph {
    int node_count = 0;
    std::vector<std::string> relation_names;
    // adjacency[r][i] = sorted neighbor ids of node i under relation r
    std::vector<std::vector<std::vector<int>>> adjacency;
    Matrix features;                 // N x s
    std::vector<double> timestamps;  // length N
    std::vector<int> labels;         // 0 / 1 / kUnlabeled
    std::vector<uint8_t> train_mask; // disjoint from test_mask
    std::vector<uint8_t> test_mask;

    size_t edge_count(int relation) const;
    std::vector<int> mask_indices(bool train) const;
};

struct GraphBuildOptions {
    // Entities touching more transactions than this get their clique
    // subsampled to cap*(cap-1)/2 seeded random pairs.
    int clique_cap = 100;
    uint64_t seed = 1;
    // When false, no edge joins a train-mask node to a test-mask node.
    bool connect_across_split = true;
};

/// Connects every pair of records sharing a non-empty entity value under
/// each relation field. Adjacency is symmetric with no self-edges.
MultiRelationGraph build_graph(const std::vector<TransactionRecord>& records,
                               const std::vector<std::string>& relation_fields,
                               const Matrix& features, const std::vector<double>& timestamps,
                               const std::vector<uint8_t>& train_mask,
                               const std::vector<uint8_t>& test_mask,
                               const GraphBuildOptions& opts = {});

/// Adjacency-only convenience for tests and inspection.
MultiRelationGraph build_graph(const std::vector<TransactionRecord>& records,
                               const std::vector<std::string>& relation_fields,
                               const GraphBuildOptions& opts = {});

/// Throws if adjacency is asymmetric, has self-edges, or sizes disagree.
void validate_graph(const MultiRelationGraph& graph);

/// Debug dump: node count, relation names, per-relation edge counts,
/// feature dimension (serialized JSON text).
std::string graph_summary_json(const MultiRelationGraph& graph);

} // namespace stgt
