#include "stgt/model.hpp"

#include <cmath>

#include "stgt/errors.hpp"
#include "stgt/rng.hpp"
#include "stgt/tape.hpp"
#include "stgt/temporal.hpp"

namespace stgt {

void ModelConfig::validate() const {
    if (feature_dim < 1) throw ConfigError("model needs feature_dim >= 1");
    if (relations < 1) throw ConfigError("model needs at least one relation");
    if (layers < 1) throw ConfigError("gnn.layers must be >= 1");
    if (dim < 1) throw ConfigError("gnn.dim must be >= 1");
    if (heads < 1) throw ConfigError("attn.heads must be >= 1");
    if (fused_width() % heads != 0) {
        throw ConfigError("attn.heads (" + std::to_string(heads) +
                          ") must divide the fused width (" + std::to_string(fused_width()) +
                          ")");
    }
    if (ffn_mult < 1) throw ConfigError("attn.ffn_mult must be >= 1");
    if (max_nodes < 1) throw ConfigError("attn.max_nodes must be >= 1");
    if (!(time_scale > 0.0)) throw ConfigError("temporal.time_scale must be positive");
}

ModelParams::ModelParams(const ModelConfig& cfg) : config(cfg) {
    config.validate();
    const int s = cfg.feature_dim, d = cfg.dim, D = cfg.fused_width();
    const int d_k = D / cfg.heads, f = cfg.ffn_mult * D, m = cfg.mlp_hidden();
    W1 = Matrix(s, d);
    T_linear = Matrix(d, d);
    T_bias = Matrix(1, d);
    gnn.resize(static_cast<size_t>(cfg.layers));
    for (auto& layer : gnn) {
        layer.W_self_diff.assign(static_cast<size_t>(cfg.relations), Matrix(2 * d, d));
        layer.q = Matrix(1, d);
        layer.W2 = Matrix(d, d);
        layer.b = Matrix(1, d);
    }
    transformer.head.assign(static_cast<size_t>(cfg.heads),
                            HeadParams{Matrix(D, d_k), Matrix(D, d_k), Matrix(D, d_k)});
    transformer.wo = Matrix(cfg.heads * d_k, D);
    transformer.ffn_w1 = Matrix(D, f);
    transformer.ffn_b1 = Matrix(1, f);
    transformer.ffn_w2 = Matrix(f, D);
    transformer.ffn_b2 = Matrix(1, D);
    transformer.norm1_gain = Matrix(1, D);
    transformer.norm1_bias = Matrix(1, D);
    transformer.norm2_gain = Matrix(1, D);
    transformer.norm2_bias = Matrix(1, D);
    mlp_w1 = Matrix(D, m);
    mlp_b1 = Matrix(1, m);
    mlp_w2 = Matrix(m, 1);
    mlp_b2 = Matrix(1, 1);
}

void ModelParams::visit(const std::function<void(const std::string&, Matrix&, ParamKind)>& fn) {
    fn("embed.W1", W1, ParamKind::weight);
    fn("temporal.T_linear", T_linear, ParamKind::weight);
    fn("temporal.T_bias", T_bias, ParamKind::bias);
    for (size_t l = 0; l < gnn.size(); ++l) {
        const std::string prefix = "gnn" + std::to_string(l + 1) + ".";
        for (size_t r = 0; r < gnn[l].W_self_diff.size(); ++r) {
            fn(prefix + "rel" + std::to_string(r + 1) + ".W", gnn[l].W_self_diff[r],
               ParamKind::weight);
        }
        fn(prefix + "q", gnn[l].q, ParamKind::weight);
        fn(prefix + "W2", gnn[l].W2, ParamKind::weight);
        fn(prefix + "b", gnn[l].b, ParamKind::bias);
    }
    for (size_t s = 0; s < transformer.head.size(); ++s) {
        const std::string prefix = "attn.head" + std::to_string(s + 1) + ".";
        fn(prefix + "wq", transformer.head[s].wq, ParamKind::weight);
        fn(prefix + "wk", transformer.head[s].wk, ParamKind::weight);
        fn(prefix + "wv", transformer.head[s].wv, ParamKind::weight);
    }
    fn("attn.wo", transformer.wo, ParamKind::weight);
    fn("attn.ffn_w1", transformer.ffn_w1, ParamKind::weight);
    fn("attn.ffn_b1", transformer.ffn_b1, ParamKind::bias);
    fn("attn.ffn_w2", transformer.ffn_w2, ParamKind::weight);
    fn("attn.ffn_b2", transformer.ffn_b2, ParamKind::bias);
    fn("attn.norm1_gain", transformer.norm1_gain, ParamKind::gain);
    fn("attn.norm1_bias", transformer.norm1_bias, ParamKind::bias);
    fn("attn.norm2_gain", transformer.norm2_gain, ParamKind::gain);
    fn("attn.norm2_bias", transformer.norm2_bias, ParamKind::bias);
    fn("head.w1", mlp_w1, ParamKind::weight);
    fn("head.b1", mlp_b1, ParamKind::bias);
    fn("head.w2", mlp_w2, ParamKind::weight);
    fn("head.b2", mlp_b2, ParamKind::bias);
}

void ModelParams::visit(
    const std::function<void(const std::string&, const Matrix&, ParamKind)>& fn) const {
    const_cast<ModelParams*>(this)->visit(
        [&fn](const std::string& name, Matrix& m, ParamKind kind) { fn(name, m, kind); });
}

size_t ModelParams::param_count() const {
    size_t total = 0;
    visit([&](const std::string&, const Matrix& m, ParamKind) { total += m.size(); });
    return total;
}

std::vector<double> ModelParams::flatten() const {
    std::vector<double> flat;
    flat.reserve(param_count());
    visit([&](const std::string&, const Matrix& m, ParamKind) {
        flat.insert(flat.end(), m.data.begin(), m.data.end());
    });
    return flat;
}

void ModelParams::set_flat(const std::vector<double>& flat) {
    if (flat.size() != param_count()) {
        throw ConfigError("flat parameter vector has " + std::to_string(flat.size()) +
                          " values, model expects " + std::to_string(param_count()));
    }
    size_t offset = 0;
    visit([&](const std::string&, Matrix& m, ParamKind) {
        std::copy(flat.begin() + static_cast<long>(offset),
                  flat.begin() + static_cast<long>(offset + m.size()), m.data.begin());
        offset += m.size();
    });
}

std::pair<size_t, size_t> ModelParams::flat_range(const std::string& name) const {
    size_t offset = 0, start = 0, end = 0;
    visit([&](const std::string& n, const Matrix& m, ParamKind) {
        if (n == name) {
            start = offset;
            end = offset + m.size();
        }
        offset += m.size();
    });
    return {start, end};
}

ModelParams init_params(const ModelConfig& cfg, uint64_t seed) {
    ModelParams params(cfg);
    RngState root(seed);
    params.visit([&](const std::string& name, Matrix& m, ParamKind kind) {
        switch (kind) {
        case ParamKind::bias:
            break; // stays zero
        case ParamKind::gain:
            for (auto& v : m.data) v = 1.0;
            break;
        case ParamKind::weight:
            if (!cfg.temporal_enabled && name.rfind("temporal.", 0) == 0) break;
            RngState stream = root.fork(name);
            m = glorot_init(stream, m.rows, m.cols);
            break;
        }
    });
    return params;
}

namespace {

/// Node ids of everything the trace and the gradient extractor need.
struct BuiltModel {
    std::vector<std::string> param_names;
    std::vector<int> param_ids;
    int h0 = -1, h0t = -1, h_cat = -1, z = -1, logits = -1, p = -1;
    std::vector<std::vector<int>> relation_h;
    std::vector<int> alpha;
    std::vector<int> fused;
};

void check_stage(const Tape& tape, int id, const char* stage) {
    check_finite(tape.value(id), stage);
}

BuiltModel build_model(Tape& tape, const MultiRelationGraph& graph, const ModelParams& params) {
    const ModelConfig& cfg = params.config;
    cfg.validate();
    const int n = graph.node_count;
    if (n < 1) throw DataError("graph has no nodes");
    if (n > cfg.max_nodes) {
        throw ConfigError("graph has " + std::to_string(n) +
                          " nodes; global attention is capped at attn.max_nodes = " +
                          std::to_string(cfg.max_nodes));
    }
    if (graph.features.rows != n || graph.features.cols != cfg.feature_dim) {
        throw ConfigError("initial embedding: features are " +
                          std::to_string(graph.features.rows) + "x" +
                          std::to_string(graph.features.cols) + ", expected " +
                          std::to_string(n) + "x" + std::to_string(cfg.feature_dim));
    }
    if (graph.adjacency.size() != static_cast<size_t>(cfg.relations)) {
        throw ConfigError("graph has " + std::to_string(graph.adjacency.size()) +
                          " relations, model expects " + std::to_string(cfg.relations));
    }
    if (graph.timestamps.size() != static_cast<size_t>(n)) {
        throw DataError("temporal injection: need one timestamp per node");
    }

    BuiltModel built;
    // Load every parameter onto the tape in visit order.
    params.visit([&](const std::string& name, const Matrix& m, ParamKind) {
        built.param_names.push_back(name);
        built.param_ids.push_back(tape.leaf(m));
    });
    auto param_id = [&](const std::string& name) {
        for (size_t i = 0; i < built.param_names.size(); ++i) {
            if (built.param_names[i] == name) return built.param_ids[i];
        }
        throw ConfigError("unknown parameter name: " + name);
    };

    // Attribute-driven embedding.
    int x = tape.constant(graph.features);
    built.h0 = tape.tanh_op(tape.matmul(x, param_id("embed.W1")));
    check_stage(tape, built.h0, "initial embedding");

    // Temporal encoding: fixed sinusoidal basis, learnable projection.
    int base = tape.constant(
        base_matrix(graph.timestamps, cfg.dim, cfg.time_scale, cfg.standard_sinusoid));
    int te = tape.add_row_broadcast(tape.matmul(base, param_id("temporal.T_linear")),
                                    param_id("temporal.T_bias"));
    built.h0t = tape.add(built.h0, te);
    check_stage(tape, built.h0t, "temporal injection");

    // Per-degree weights used to realize the difference aggregate.
    std::vector<std::vector<double>> nonempty(graph.adjacency.size());
    std::vector<std::vector<double>> degree(graph.adjacency.size());
    for (size_t r = 0; r < graph.adjacency.size(); ++r) {
        nonempty[r].resize(static_cast<size_t>(n));
        degree[r].resize(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) {
            const double deg = static_cast<double>(graph.adjacency[r][static_cast<size_t>(i)].size());
            degree[r][static_cast<size_t>(i)] = deg;
            nonempty[r][static_cast<size_t>(i)] = deg > 0.0 ? 1.0 : 0.0;
        }
    }

    int h_prev = built.h0t;
    for (int l = 0; l < cfg.layers; ++l) {
        const std::string prefix = "gnn" + std::to_string(l + 1) + ".";
        const int q_id = param_id(prefix + "q");
        const int w2_id = param_id(prefix + "W2");
        const int b_id = param_id(prefix + "b");

        std::vector<int> rel_h;
        std::vector<int> scores;
        for (int r = 0; r < cfg.relations; ++r) {
            const auto* adj = &graph.adjacency[static_cast<size_t>(r)];
            const int w_id = param_id(prefix + "rel" + std::to_string(r + 1) + ".W");
            int a = tape.neighbor_aggregate(h_prev, adj, cfg.aggr == AggrKind::mean);
            int b;
            if (cfg.aggr == AggrKind::mean) {
                // mean_j (h_i - h_j) = h_i - a_i, zeroed on isolated nodes
                b = tape.scale_rows_const(tape.sub(h_prev, a), nonempty[static_cast<size_t>(r)]);
            } else {
                // sum_j (h_i - h_j) = deg_i * h_i - a_i
                b = tape.sub(tape.scale_rows_const(h_prev, degree[static_cast<size_t>(r)]), a);
            }
            int h_r = tape.tanh_op(tape.matmul(tape.concat({a, b}), w_id));
            rel_h.push_back(h_r);

            if (cfg.relation_attention_enabled) {
                // Relation score: graph-wide mean of q . tanh(h W2 + b).
                int scored = tape.tanh_op(tape.add_row_broadcast(tape.matmul(h_r, w2_id), b_id));
                scores.push_back(tape.col_mean(tape.matmul_nt(scored, q_id)));
            }
        }
        int alpha;
        int fused = -1;
        if (cfg.relation_attention_enabled) {
            alpha = tape.softmax(tape.concat(scores));
            for (int r = 0; r < cfg.relations; ++r) {
                int weighted = tape.scale_by_entry(rel_h[static_cast<size_t>(r)], alpha, 0, r);
                fused = r == 0 ? weighted : tape.add(fused, weighted);
            }
        } else {
            // Ablation: blend relations uniformly instead of by attention.
            Matrix uniform(1, cfg.relations);
            for (auto& v : uniform.data) v = 1.0 / static_cast<double>(cfg.relations);
            alpha = tape.constant(uniform);
            for (int r = 0; r < cfg.relations; ++r) {
                fused = r == 0 ? rel_h[0] : tape.add(fused, rel_h[static_cast<size_t>(r)]);
            }
            fused = tape.scale_const(fused, 1.0 / static_cast<double>(cfg.relations));
        }
        const std::string stage = "gnn layer " + std::to_string(l + 1);
        check_stage(tape, fused, stage.c_str());

        built.relation_h.push_back(std::move(rel_h));
        built.alpha.push_back(alpha);
        built.fused.push_back(fused);
        h_prev = fused;
    }

    built.h_cat = cfg.layers == 1 ? built.fused[0] : tape.concat(built.fused);
    check_stage(tape, built.h_cat, "layer fusion");

    if (cfg.transformer_enabled) {
        // Global self-attention block.
        std::vector<int> head_out;
        for (int s = 0; s < cfg.heads; ++s) {
            const std::string prefix = "attn.head" + std::to_string(s + 1) + ".";
            int q = tape.matmul(built.h_cat, param_id(prefix + "wq"));
            int k = tape.matmul(built.h_cat, param_id(prefix + "wk"));
            int v = tape.matmul(built.h_cat, param_id(prefix + "wv"));
            head_out.push_back(tape.attention(q, k, v));
        }
        int attn = tape.matmul(cfg.heads == 1 ? head_out[0] : tape.concat(head_out),
                               param_id("attn.wo"));
        int stage1 = tape.layer_norm(tape.add(built.h_cat, attn), param_id("attn.norm1_gain"),
                                     param_id("attn.norm1_bias"), kLayerNormEps);
        int hidden = tape.tanh_op(tape.add_row_broadcast(
            tape.matmul(stage1, param_id("attn.ffn_w1")), param_id("attn.ffn_b1")));
        int ffn = tape.add_row_broadcast(tape.matmul(hidden, param_id("attn.ffn_w2")),
                                         param_id("attn.ffn_b2"));
        built.z = tape.layer_norm(tape.add(stage1, ffn), param_id("attn.norm2_gain"),
                                  param_id("attn.norm2_bias"), kLayerNormEps);
        check_stage(tape, built.z, "transformer");
    } else {
        // Ablation: the fused embedding feeds the head directly.
        built.z = built.h_cat;
    }

    // Prediction head.
    int m1 = tape.tanh_op(tape.add_row_broadcast(tape.matmul(built.z, param_id("head.w1")),
                                                 param_id("head.b1")));
    built.logits = tape.add_row_broadcast(tape.matmul(m1, param_id("head.w2")),
                                          param_id("head.b2"));
    check_stage(tape, built.logits, "prediction head");
    built.p = tape.clamp(tape.sigmoid_op(built.logits), kProbClamp, 1.0 - kProbClamp);
    return built;
}

} // namespace

ForwardTrace forward(const MultiRelationGraph& graph, const ModelParams& params, SumMode mode) {
    Tape tape(mode);
    BuiltModel built = build_model(tape, graph, params);

    ForwardTrace trace;
    trace.h0 = tape.value(built.h0);
    trace.h0t = tape.value(built.h0t);
    for (size_t l = 0; l < built.fused.size(); ++l) {
        std::vector<Matrix> rel;
        for (int id : built.relation_h[l]) rel.push_back(tape.value(id));
        trace.relation_h.push_back(std::move(rel));
        const Matrix& a = tape.value(built.alpha[l]);
        trace.alpha.emplace_back(a.data.begin(), a.data.end());
        trace.fused.push_back(tape.value(built.fused[l]));
    }
    trace.h_cat = tape.value(built.h_cat);
    trace.z = tape.value(built.z);
    trace.logits = tape.value(built.logits);
    trace.p = tape.value(built.p);
    return trace;
}

double model_loss(const MultiRelationGraph& graph, const ModelParams& params,
                  const std::vector<int>& mask, SumMode mode) {
    Tape tape(mode);
    BuiltModel built = build_model(tape, graph, params);
    double loss = bce_loss_value(tape.value(built.p), graph.labels, mask, mode);
    if (!std::isfinite(loss)) throw NumericError("loss is not finite");
    return loss;
}

GradientResult compute_gradients(const MultiRelationGraph& graph, const ModelParams& params,
                                 const std::vector<int>& mask, SumMode mode) {
    Tape tape(mode);
    BuiltModel built = build_model(tape, graph, params);
    int loss = tape.bce_loss(built.p, graph.labels, mask);
    check_stage(tape, loss, "loss");
    tape.backward(loss);

    GradientResult result;
    result.loss = tape.value(loss).at(0, 0);
    result.grad.reserve(params.param_count());
    for (size_t i = 0; i < built.param_ids.size(); ++i) {
        const Matrix& g = tape.grad(built.param_ids[i]);
        check_finite(g, ("gradient of " + built.param_names[i]).c_str());
        result.grad.insert(result.grad.end(), g.data.begin(), g.data.end());
    }
    return result;
}

} // namespace stgt
