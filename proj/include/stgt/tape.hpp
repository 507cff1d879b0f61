#pragma once

#include <functional>
#include <vector>

#include "stgt/matrix.hpp"

namespace stgt {

/// Reverse-mode gradient tape over Matrix values. Build a computation by
/// chaining ops (each returns a node id), then call backward(root) on a 1x1
/// node to fill every reachable node's gradient. Ops that take raw pointers
/// (adjacency) require the pointee to outlive the tape.
class Tape {
public:
    explicit Tape(SumMode mode = SumMode::fast) : mode_(mode) {}

    SumMode mode() const { return mode_; }
    int size() const { return static_cast<int>(nodes_.size()); }

    /// Tracked input (parameter or data); constant() is an alias that reads
    /// better at call sites for non-learnable values.
    int leaf(Matrix value);
    int constant(Matrix value) { return leaf(std::move(value)); }

    const Matrix& value(int id) const;
    /// Gradient accumulated by backward(); zero-shaped until then.
    const Matrix& grad(int id);

    int matmul(int a, int b);
    int matmul_nt(int a, int b); // a * b^T
    int add(int a, int b);
    int sub(int a, int b);
    int tanh_op(int a);
    int sigmoid_op(int a);
    int add_row_broadcast(int m, int row);
    int concat(const std::vector<int>& parts);
    int scale_const(int a, double c);
    /// Per-row scaling by a fixed weight vector (one weight per row).
    int scale_rows_const(int a, std::vector<double> weights);
    /// m * s(r, c) where s is another node; used to blend relation
    /// embeddings by their attention weight.
    int scale_by_entry(int m, int s, int r, int c);
    /// Column means: N x d -> 1 x d.
    int col_mean(int a);
    /// Row-wise softmax (used on the 1 x R relation-score vector).
    int softmax(int a);
    /// Sum of all entries -> 1 x 1.
    int sum_entries(int a);
    /// Neighborhood aggregate of h over a fixed adjacency: row i is the
    /// mean (or sum) of h's rows over adj[i]; empty neighborhoods give 0.
    int neighbor_aggregate(int h, const std::vector<std::vector<int>>* adj, bool mean);
    /// softmax(q k^T / sqrt(d_k)) v, streamed; never materializes N x N.
    int attention(int q, int k, int v);
    int layer_norm(int x, int gain, int bias, double eps);
    int clamp(int a, double lo, double hi);
    /// Summed binary cross-entropy over the masked rows of an N x 1
    /// probability column: -sum_{i in mask} [y ln p + (1-y) ln(1-p)].
    int bce_loss(int p, std::vector<int> labels, std::vector<int> mask);

    /// Seeds d(root)/d(root) = 1 and sweeps the tape in reverse.
    void backward(int root);

private:
    struct Node {
        Matrix value;
        Matrix grad; // empty until backward touches it
        std::function<void(Tape&, int)> back;
    };

    std::vector<Node> nodes_;
    SumMode mode_;

    int push(Matrix value, std::function<void(Tape&, int)> back);
    Matrix& ensure_grad(int id);
    const Node& node(int id) const;
};

/// The BCE kernel shared by the tape op and the standalone evaluation path:
/// probabilities are clamped to [1e-7, 1-1e-7] before the logs.
double bce_loss_value(const Matrix& p, const std::vector<int>& labels,
                      const std::vector<int>& mask, SumMode mode);

inline constexpr double kProbClamp = 1e-7;

} // namespace stgt
