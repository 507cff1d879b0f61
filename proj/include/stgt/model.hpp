#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "stgt/attention.hpp"
#include "stgt/gnn.hpp"
#include "stgt/ingest.hpp"
#include "stgt/matrix.hpp"

namespace stgt {

struct ModelConfig {
    int feature_dim = 0; // s, taken from the encoded data
    int relations = 0;   // R, taken from the graph
    int layers = 2;      // L
    int dim = 32;        // d
    int heads = 4;       // S
    int ffn_mult = 4;
    int max_nodes = 20000;
    bool temporal_enabled = true;
    bool standard_sinusoid = false;
    bool transformer_enabled = true;        // off: z = fused embedding directly
    bool relation_attention_enabled = true; // off: uniform alpha = 1/R
    double time_scale = 3600.0;
    AggrKind aggr = AggrKind::mean;

    int fused_width() const { return layers * dim; }
    int mlp_hidden() const { return fused_width() / 2 > 0 ? fused_width() / 2 : 1; }
    void validate() const;
};

enum class ParamKind { weight, bias, gain };

/// Every learnable matrix, visitable in one fixed, named order; the flat
/// view used by the optimizer and checkpoints follows that order.
struct ModelParams {
    ModelConfig config;
    Matrix W1;               // s x d
    Matrix T_linear;         // d x d
    Matrix T_bias;           // 1 x d
    std::vector<GnnLayerParams> gnn;
    TransformerParams transformer;
    Matrix mlp_w1, mlp_b1, mlp_w2, mlp_b2;

    ModelParams() = default;
    /// All-zero parameters with the shapes the config dictates.
    explicit ModelParams(const ModelConfig& cfg);

    void visit(const std::function<void(const std::string&, Matrix&, ParamKind)>& fn);
    void visit(const std::function<void(const std::string&, const Matrix&, ParamKind)>& fn) const;

    size_t param_count() const;
    std::vector<double> flatten() const;
    void set_flat(const std::vector<double>& flat);
    /// [start, end) of a named matrix within the flat vector; (0, 0) when
    /// the name is unknown.
    std::pair<size_t, size_t> flat_range(const std::string& name) const;
};

/// Glorot weights, zero biases, unit norm gains. Each matrix draws from its
/// own name-keyed stream, so changing one component's shape never shifts
/// another's initial values. With temporal disabled, T_linear and T_bias
/// start (and stay) zero.
ModelParams init_params(const ModelConfig& cfg, uint64_t seed);

struct ForwardTrace {
    Matrix h0;  // N x d, attribute embedding
    Matrix h0t; // N x d, after temporal injection
    std::vector<std::vector<Matrix>> relation_h; // [layer][relation] N x d
    std::vector<std::vector<double>> alpha;      // [layer][relation]
    std::vector<Matrix> fused;                   // [layer] N x d
    Matrix h_cat;  // N x (L*d)
    Matrix z;      // N x (L*d), transformer output
    Matrix logits; // N x 1
    Matrix p;      // N x 1, sigmoid clamped to [1e-7, 1-1e-7]
};

/// Full pipeline with intermediates retained. Shape problems and non-finite
/// values surface with the failing stage named.
ForwardTrace forward(const MultiRelationGraph& graph, const ModelParams& params,
                     SumMode mode = SumMode::exact);

/// Loss only (no gradients): summed masked binary cross-entropy of the
/// forward probabilities.
double model_loss(const MultiRelationGraph& graph, const ModelParams& params,
                  const std::vector<int>& mask, SumMode mode = SumMode::fast);

struct GradientResult {
    double loss = 0.0;
    std::vector<double> grad; // aligned with ModelParams::flatten()
};

/// Reverse-mode derivatives of the masked loss for every parameter.
GradientResult compute_gradients(const MultiRelationGraph& graph, const ModelParams& params,
                                 const std::vector<int>& mask,
                                 SumMode mode = SumMode::fast);

} // namespace stgt
