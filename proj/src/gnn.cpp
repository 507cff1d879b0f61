#include "stgt/gnn.hpp"

#include "stgt/errors.hpp"

namespace stgt {

AggrKind parse_aggr(const std::string& name) {
    if (name == "mean") return AggrKind::mean;
    if (name == "sum") return AggrKind::sum;
    throw ConfigError("unknown aggregation '" + name + "' (expected mean or sum)");
}

std::string aggr_name(AggrKind aggr) {
    return aggr == AggrKind::mean ? "mean" : "sum";
}

GnnLayerParams make_gnn_layer(int relations, int dim, RngState& rng) {
    if (relations < 1) throw ConfigError("gnn layer needs at least one relation");
    if (dim < 1) throw ConfigError("gnn dim must be positive");
    GnnLayerParams params;
    for (int r = 0; r < relations; ++r) {
        params.W_self_diff.push_back(glorot_init(rng, 2 * dim, dim));
    }
    params.q = glorot_init(rng, 1, dim);
    params.W2 = glorot_init(rng, dim, dim);
    params.b = Matrix(1, dim);
    return params;
}

Matrix initial_embed(const Matrix& x, const Matrix& w1) {
    return map_tanh(matmul(x, w1));
}

Matrix aggregate_rows(const Matrix& h, const std::vector<std::vector<int>>& adj, AggrKind aggr,
                      SumMode mode) {
    if (adj.size() != static_cast<size_t>(h.rows)) {
        throw ConfigError("adjacency size does not match embedding rows");
    }
    Matrix out(h.rows, h.cols);
    ExactSum acc;
    for (int i = 0; i < h.rows; ++i) {
        const auto& nbrs = adj[static_cast<size_t>(i)];
        if (nbrs.empty()) continue; // aggregate stays zero
        const double deg = static_cast<double>(nbrs.size());
        for (int c = 0; c < h.cols; ++c) {
            double total;
            if (mode == SumMode::exact) {
                acc.reset();
                for (int j : nbrs) acc.add(h.at(j, c));
                total = acc.value();
            } else {
                total = 0.0;
                for (int j : nbrs) total += h.at(j, c);
            }
            out.at(i, c) = aggr == AggrKind::mean ? total / deg : total;
        }
    }
    return out;
}

Aggregates neighbor_aggregates(const Matrix& h, const std::vector<std::vector<int>>& adj,
                               AggrKind aggr, SumMode mode) {
    Aggregates out{aggregate_rows(h, adj, aggr, mode), Matrix(h.rows, h.cols)};
    for (int i = 0; i < h.rows; ++i) {
        const double deg = static_cast<double>(adj[static_cast<size_t>(i)].size());
        if (deg == 0.0) continue; // difference stays zero
        for (int c = 0; c < h.cols; ++c) {
            out.difference.at(i, c) = aggr == AggrKind::mean
                                          ? h.at(i, c) - out.neighbor.at(i, c)
                                          : deg * h.at(i, c) - out.neighbor.at(i, c);
        }
    }
    return out;
}

Matrix intra_relation(const Matrix& h, const std::vector<std::vector<int>>& adj,
                      const Matrix& w_self_diff, AggrKind aggr, SumMode mode) {
    if (w_self_diff.rows != 2 * h.cols || w_self_diff.cols != h.cols) {
        throw ConfigError("relation projection must map 2d -> d");
    }
    Aggregates agg = neighbor_aggregates(h, adj, aggr, mode);
    Matrix both = concat_cols({&agg.neighbor, &agg.difference});
    return map_tanh(matmul(both, w_self_diff));
}

RelationFusion relation_attention(const std::vector<Matrix>& per_relation, const Matrix& q,
                                  const Matrix& w2, const Matrix& b, SumMode mode) {
    if (per_relation.empty()) throw ConfigError("relation attention needs at least one relation");
    const Matrix& first = per_relation.front();
    if (first.rows < 1) throw ConfigError("relation attention needs at least one node");
    for (const auto& h : per_relation) {
        if (!h.same_shape(first)) {
            throw ConfigError("relation embeddings must share one shape");
        }
    }
    const int R = static_cast<int>(per_relation.size());

    // w_r = graph-wide mean of q . tanh(h W2 + b).
    Matrix w(1, R);
    for (int r = 0; r < R; ++r) {
        Matrix scored = map_tanh(add_row_broadcast(matmul(per_relation[static_cast<size_t>(r)], w2), b));
        Matrix per_node = matmul_nt(scored, q); // N x 1
        w.at(0, r) = col_means(per_node, mode).at(0, 0);
    }
    Matrix alpha = softmax_rows(w, mode);

    RelationFusion fusion;
    fusion.scores.assign(w.data.begin(), w.data.end());
    fusion.alpha.assign(alpha.data.begin(), alpha.data.end());
    fusion.fused = Matrix(first.rows, first.cols);
    for (int r = 0; r < R; ++r) {
        const double a = alpha.at(0, r);
        const Matrix& h = per_relation[static_cast<size_t>(r)];
        for (size_t i = 0; i < h.data.size(); ++i) fusion.fused.data[i] += a * h.data[i];
    }
    return fusion;
}

Matrix fuse_layers(const std::vector<Matrix>& per_layer) {
    if (per_layer.empty()) throw ConfigError("layer fusion needs at least one layer");
    std::vector<const Matrix*> parts;
    for (const auto& h : per_layer) {
        if (h.cols != per_layer.front().cols || h.rows != per_layer.front().rows) {
            throw ConfigError("layer fusion requires matching shapes across layers");
        }
        parts.push_back(&h);
    }
    return concat_cols(parts);
}

} // namespace stgt
