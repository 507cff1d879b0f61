#include "stgt/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "stgt/errors.hpp"

namespace stgt {
namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::vector<std::string> split_line(const std::string& line, char sep) {
    std::vector<std::string> cells;
    size_t start = 0;
    while (true) {
        size_t pos = line.find(sep, start);
        if (pos == std::string::npos) {
            cells.push_back(line.substr(start));
            break;
        }
        cells.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return cells;
}

// Splits text into physical lines; strips a trailing '\r' from each.
std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    size_t start = 0;
    while (start <= text.size()) {
        size_t pos = text.find('\n', start);
        if (pos == std::string::npos) {
            if (start < text.size()) lines.push_back(text.substr(start));
            break;
        }
        lines.push_back(text.substr(start, pos - start));
        start = pos + 1;
    }
    for (auto& line : lines) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
    }
    return lines;
}

double parse_double_cell(const std::string& cell, const std::string& origin, size_t line_no,
                         const std::string& column) {
    double value = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || cell.empty()) {
        throw DataError(origin + " line " + std::to_string(line_no) + ": non-numeric value '" +
                        cell + "' in column '" + column + "'");
    }
    if (!std::isfinite(value)) {
        // A NaN here would otherwise poison the fitted feature range.
        throw DataError(origin + " line " + std::to_string(line_no) + ": non-finite value '" +
                        cell + "' in column '" + column + "'");
    }
    return value;
}

int64_t parse_timestamp_cell(const std::string& cell, const std::string& origin, size_t line_no,
                             const std::string& column) {
    int64_t value = 0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || cell.empty()) {
        throw DataError(origin + " line " + std::to_string(line_no) + ": invalid timestamp '" +
                        cell + "' in column '" + column + "'");
    }
    return value;
}

size_t column_index(const std::vector<std::string>& header, const std::string& name,
                    const std::string& origin) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
        throw DataError(origin + ": header is missing column '" + name + "'");
    }
    return static_cast<size_t>(it - header.begin());
}

} // namespace

CsvSchema parse_schema_text(const std::string& text, const std::string& origin) {
    CsvSchema schema;
    auto lines = split_lines(text);
    for (size_t i = 0; i < lines.size(); ++i) {
        const std::string& line = lines[i];
        if (line.empty() || line[0] == '#') continue;
        size_t colon = line.find(':');
        if (colon == std::string::npos) {
            throw DataError(origin + " line " + std::to_string(i + 1) +
                            ": expected 'role:column-name'");
        }
        std::string role = line.substr(0, colon);
        std::string name = line.substr(colon + 1);
        if (name.empty()) {
            throw DataError(origin + " line " + std::to_string(i + 1) + ": empty column name");
        }
        if (role == "id") {
            if (!schema.id_column.empty()) {
                throw DataError(origin + ": duplicate id column declaration");
            }
            schema.id_column = name;
        } else if (role == "timestamp") {
            if (!schema.timestamp_column.empty()) {
                throw DataError(origin + ": duplicate timestamp column declaration");
            }
            schema.timestamp_column = name;
        } else if (role == "label") {
            if (!schema.label_column.empty()) {
                throw DataError(origin + ": duplicate label column declaration");
            }
            schema.label_column = name;
        } else if (role == "continuous") {
            schema.continuous_fields.push_back(name);
        } else if (role == "categorical") {
            schema.categorical_fields.push_back(name);
        } else if (role == "relation") {
            schema.relation_fields.push_back(name);
        } else {
            throw DataError(origin + " line " + std::to_string(i + 1) + ": unknown role '" +
                            role + "'");
        }
    }
    if (schema.id_column.empty()) throw DataError(origin + ": no id column declared");
    if (schema.timestamp_column.empty()) {
        throw DataError(origin + ": no timestamp column declared");
    }
    if (schema.label_column.empty()) throw DataError(origin + ": no label column declared");
    return schema;
}

CsvSchema parse_schema(const std::string& path) {
    return parse_schema_text(read_file(path), path);
}

std::vector<TransactionRecord> parse_csv_text(const std::string& text, const CsvSchema& schema,
                                              const std::string& origin) {
    auto lines = split_lines(text);
    if (lines.empty() || lines[0].empty()) {
        throw DataError(origin + ": missing header row");
    }
    auto header = split_line(lines[0], ',');

    size_t id_idx = column_index(header, schema.id_column, origin);
    size_t ts_idx = column_index(header, schema.timestamp_column, origin);
    size_t label_idx = column_index(header, schema.label_column, origin);
    std::vector<size_t> cont_idx, cat_idx, rel_idx;
    for (const auto& f : schema.continuous_fields) {
        cont_idx.push_back(column_index(header, f, origin));
    }
    for (const auto& f : schema.categorical_fields) {
        cat_idx.push_back(column_index(header, f, origin));
    }
    for (const auto& f : schema.relation_fields) {
        rel_idx.push_back(column_index(header, f, origin));
    }

    std::vector<TransactionRecord> records;
    for (size_t i = 1; i < lines.size(); ++i) {
        const std::string& line = lines[i];
        if (line.empty()) continue;
        size_t line_no = i + 1; // header is physical line 1
        auto cells = split_line(line, ',');
        if (cells.size() != header.size()) {
            throw DataError(origin + " line " + std::to_string(line_no) + ": expected " +
                            std::to_string(header.size()) + " fields, got " +
                            std::to_string(cells.size()));
        }
        TransactionRecord rec;
        rec.txn_id = cells[id_idx];
        if (rec.txn_id.empty()) {
            throw DataError(origin + " line " + std::to_string(line_no) + ": empty id");
        }
        rec.timestamp = parse_timestamp_cell(cells[ts_idx], origin, line_no, schema.timestamp_column);
        const std::string& label_cell = cells[label_idx];
        if (label_cell.empty()) {
            rec.label = kUnlabeled;
        } else if (label_cell == "0") {
            rec.label = 0;
        } else if (label_cell == "1") {
            rec.label = 1;
        } else {
            throw DataError(origin + " line " + std::to_string(line_no) + ": invalid label '" +
                            label_cell + "' (expected 0, 1, or empty)");
        }
        for (size_t f = 0; f < cont_idx.size(); ++f) {
            rec.continuous[schema.continuous_fields[f]] =
                parse_double_cell(cells[cont_idx[f]], origin, line_no, schema.continuous_fields[f]);
        }
        for (size_t f = 0; f < cat_idx.size(); ++f) {
            rec.categorical[schema.categorical_fields[f]] = cells[cat_idx[f]];
        }
        for (size_t f = 0; f < rel_idx.size(); ++f) {
            rec.relations[schema.relation_fields[f]] = cells[rel_idx[f]];
        }
        records.push_back(std::move(rec));
    }
    return records;
}

std::vector<TransactionRecord> parse_csv(const std::string& path, const CsvSchema& schema) {
    return parse_csv_text(read_file(path), schema, path);
}

std::vector<TransactionRecord> downsample_legitimate(const std::vector<TransactionRecord>& records,
                                                     double ratio, RngState& rng) {
    if (!(ratio > 0.0) || ratio > 1.0) {
        throw ConfigError("downsample ratio must be in (0, 1], got " + std::to_string(ratio));
    }
    std::vector<TransactionRecord> kept;
    kept.reserve(records.size());
    for (const auto& rec : records) {
        if (rec.label == 1 || rng.bernoulli(ratio)) kept.push_back(rec);
    }
    return kept;
}

FeatureCodec FeatureCodec::fit(const std::vector<TransactionRecord>& train_records) {
    FeatureCodec codec;
    std::set<std::string> cont_names, cat_names;
    for (const auto& rec : train_records) {
        for (const auto& [name, _] : rec.continuous) cont_names.insert(name);
        for (const auto& [name, _] : rec.categorical) cat_names.insert(name);
    }
    codec.cont_fields_.assign(cont_names.begin(), cont_names.end());
    codec.cat_fields_.assign(cat_names.begin(), cat_names.end());

    for (const auto& field : codec.cont_fields_) {
        double lo = 0.0, hi = 0.0;
        bool seen = false;
        for (const auto& rec : train_records) {
            auto it = rec.continuous.find(field);
            if (it == rec.continuous.end()) continue;
            if (!seen) {
                lo = hi = it->second;
                seen = true;
            } else {
                lo = std::min(lo, it->second);
                hi = std::max(hi, it->second);
            }
        }
        codec.cont_range_.emplace_back(lo, hi);
    }
    for (const auto& field : codec.cat_fields_) {
        std::set<std::string> values;
        for (const auto& rec : train_records) {
            auto it = rec.categorical.find(field);
            if (it != rec.categorical.end()) values.insert(it->second);
        }
        codec.vocabs_.emplace_back(values.begin(), values.end());
    }
    return codec;
}

int FeatureCodec::feature_dim() const {
    int dim = static_cast<int>(cont_fields_.size());
    for (const auto& vocab : vocabs_) dim += static_cast<int>(vocab.size());
    return dim;
}

const std::vector<std::string>& FeatureCodec::vocab(const std::string& field) const {
    for (size_t i = 0; i < cat_fields_.size(); ++i) {
        if (cat_fields_[i] == field) return vocabs_[i];
    }
    throw ConfigError("unknown categorical field: " + field);
}

Matrix FeatureCodec::encode(const std::vector<TransactionRecord>& records) const {
    Matrix x(static_cast<int>(records.size()), feature_dim());
    for (size_t r = 0; r < records.size(); ++r) {
        int col = 0;
        for (size_t f = 0; f < cont_fields_.size(); ++f, ++col) {
            auto it = records[r].continuous.find(cont_fields_[f]);
            if (it == records[r].continuous.end()) continue;
            auto [lo, hi] = cont_range_[f];
            if (hi > lo) {
                double scaled = (it->second - lo) / (hi - lo);
                x.at(static_cast<int>(r), col) = std::clamp(scaled, 0.0, 1.0);
            }
            // constant column (hi == lo) stays 0
        }
        for (size_t f = 0; f < cat_fields_.size(); ++f) {
            const auto& vocab = vocabs_[f];
            auto it = records[r].categorical.find(cat_fields_[f]);
            if (it != records[r].categorical.end()) {
                auto pos = std::lower_bound(vocab.begin(), vocab.end(), it->second);
                if (pos != vocab.end() && *pos == it->second) {
                    x.at(static_cast<int>(r), col + static_cast<int>(pos - vocab.begin())) = 1.0;
                }
                // unseen category leaves the whole block at 0
            }
            col += static_cast<int>(vocab.size());
        }
    }
    return x;
}

std::vector<double> extract_timestamps(const std::vector<TransactionRecord>& records) {
    std::vector<double> ts;
    ts.reserve(records.size());
    for (const auto& rec : records) ts.push_back(static_cast<double>(rec.timestamp));
    return ts;
}

size_t MultiRelationGraph::edge_count(int relation) const {
    size_t total = 0;
    for (const auto& nbrs : adjacency.at(static_cast<size_t>(relation))) total += nbrs.size();
    return total / 2;
}

std::vector<int> MultiRelationGraph::mask_indices(bool train) const {
    const auto& mask = train ? train_mask : test_mask;
    std::vector<int> idx;
    for (size_t i = 0; i < mask.size(); ++i) {
        if (mask[i]) idx.push_back(static_cast<int>(i));
    }
    return idx;
}

MultiRelationGraph build_graph(const std::vector<TransactionRecord>& records,
                               const std::vector<std::string>& relation_fields,
                               const Matrix& features, const std::vector<double>& timestamps,
                               const std::vector<uint8_t>& train_mask,
                               const std::vector<uint8_t>& test_mask,
                               const GraphBuildOptions& opts) {
    if (opts.clique_cap < 2) {
        throw ConfigError("clique cap must be at least 2, got " + std::to_string(opts.clique_cap));
    }
    const int n = static_cast<int>(records.size());
    MultiRelationGraph graph;
    graph.node_count = n;
    graph.relation_names = relation_fields;
    graph.features = features;
    graph.timestamps = timestamps;
    graph.train_mask = train_mask;
    graph.test_mask = test_mask;
    graph.labels.reserve(records.size());
    for (const auto& rec : records) graph.labels.push_back(rec.label);

    const bool split_aware = !opts.connect_across_split && !train_mask.empty() &&
                             !test_mask.empty();
    auto crosses_split = [&](int a, int b) {
        return split_aware && ((train_mask[static_cast<size_t>(a)] &&
                                test_mask[static_cast<size_t>(b)]) ||
                               (test_mask[static_cast<size_t>(a)] &&
                                train_mask[static_cast<size_t>(b)]));
    };

    RngState base(opts.seed);
    graph.adjacency.resize(relation_fields.size());
    for (size_t r = 0; r < relation_fields.size(); ++r) {
        const std::string& field = relation_fields[r];
        auto& adj = graph.adjacency[r];
        adj.assign(static_cast<size_t>(n), {});

        std::map<std::string, std::vector<int>> groups;
        for (int i = 0; i < n; ++i) {
            auto it = records[static_cast<size_t>(i)].relations.find(field);
            if (it == records[static_cast<size_t>(i)].relations.end() || it->second.empty()) {
                continue;
            }
            groups[it->second].push_back(i);
        }

        RngState rel_rng = base.fork(field);
        auto add_edge = [&](int a, int b) {
            if (crosses_split(a, b)) return;
            adj[static_cast<size_t>(a)].push_back(b);
            adj[static_cast<size_t>(b)].push_back(a);
        };
        for (auto& [entity, members] : groups) {
            const size_t k = members.size();
            if (k < 2) continue;
            // Sort members by transaction id so edge choices depend only on
            // record identity, not on input row order.
            std::sort(members.begin(), members.end(), [&](int a, int b) {
                return records[static_cast<size_t>(a)].txn_id <
                       records[static_cast<size_t>(b)].txn_id;
            });
            const size_t cap = static_cast<size_t>(opts.clique_cap);
            if (k <= cap) {
                for (size_t a = 0; a < k; ++a) {
                    for (size_t b = a + 1; b < k; ++b) add_edge(members[a], members[b]);
                }
            } else {
                // Oversized entity: keep exactly cap*(cap-1)/2 distinct pairs,
                // chosen by a stream seeded from (relation, entity).
                RngState ent_rng = rel_rng.fork(entity);
                const size_t target = cap * (cap - 1) / 2;
                std::set<std::pair<size_t, size_t>> chosen;
                while (chosen.size() < target) {
                    size_t a = ent_rng.uniform_u64(k);
                    size_t b = ent_rng.uniform_u64(k);
                    if (a == b) continue;
                    if (a > b) std::swap(a, b);
                    chosen.emplace(a, b);
                }
                for (const auto& [a, b] : chosen) add_edge(members[a], members[b]);
            }
        }
        for (auto& nbrs : adj) std::sort(nbrs.begin(), nbrs.end());
    }
    return graph;
}

MultiRelationGraph build_graph(const std::vector<TransactionRecord>& records,
                               const std::vector<std::string>& relation_fields,
                               const GraphBuildOptions& opts) {
    return build_graph(records, relation_fields, Matrix(), extract_timestamps(records), {}, {},
                       opts);
}

void validate_graph(const MultiRelationGraph& graph) {
    if (graph.adjacency.size() != graph.relation_names.size()) {
        throw DataError("graph relation count mismatch");
    }
    for (size_t r = 0; r < graph.adjacency.size(); ++r) {
        const auto& adj = graph.adjacency[r];
        if (adj.size() != static_cast<size_t>(graph.node_count)) {
            throw DataError("graph adjacency size mismatch for relation " +
                            graph.relation_names[r]);
        }
        for (size_t i = 0; i < adj.size(); ++i) {
            for (int j : adj[i]) {
                if (j < 0 || j >= graph.node_count) {
                    throw DataError("graph neighbor id out of range");
                }
                if (j == static_cast<int>(i)) throw DataError("graph has a self-edge");
                const auto& back = adj[static_cast<size_t>(j)];
                if (!std::binary_search(back.begin(), back.end(), static_cast<int>(i))) {
                    throw DataError("graph adjacency is not symmetric");
                }
            }
            if (!std::is_sorted(adj[i].begin(), adj[i].end())) {
                throw DataError("graph neighbor lists must be sorted");
            }
            if (std::adjacent_find(adj[i].begin(), adj[i].end()) != adj[i].end()) {
                throw DataError("graph has duplicate edges");
            }
        }
    }
}

std::string graph_summary_json(const MultiRelationGraph& graph) {
    nlohmann::json summary;
    summary["node_count"] = graph.node_count;
    summary["feature_dim"] = graph.features.cols;
    nlohmann::json relations = nlohmann::json::array();
    for (size_t r = 0; r < graph.relation_names.size(); ++r) {
        relations.push_back({{"name", graph.relation_names[r]},
                             {"edges", graph.edge_count(static_cast<int>(r))}});
    }
    summary["relations"] = relations;
    return summary.dump(2);
}

} // namespace stgt
