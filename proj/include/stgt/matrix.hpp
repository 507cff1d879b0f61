#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace stgt {

/// Dense row-major matrix of doubles. Vectors are 1xN or Nx1 matrices.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(int r, int c, double fill = 0.0)
        : rows(r), cols(c), data(static_cast<size_t>(r) * c, fill) {}

    static Matrix row_vector(std::vector<double> v) {
        Matrix m;
        m.rows = 1;
        m.cols = static_cast<int>(v.size());
        m.data = std::move(v);
        return m;
    }

    double& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
    double at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }

    std::span<double> row_span(int r) {
        return {data.data() + static_cast<size_t>(r) * cols, static_cast<size_t>(cols)};
    }
    std::span<const double> row_span(int r) const {
        return {data.data() + static_cast<size_t>(r) * cols, static_cast<size_t>(cols)};
    }

    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
    size_t size() const { return data.size(); }
    bool empty() const { return data.empty(); }
};

/// Exact (correctly rounded) sum of doubles via non-overlapping partials.
/// The result is independent of the order terms are added in, which is what
/// makes whole-graph reductions invariant under node relabeling.
class ExactSum {
public:
    void add(double x);
    void reset() { n_ = 0; nonfinite_ = false; plain_ = 0.0; }
    double value() const;

private:
    // 53-bit doubles over the full exponent range admit at most ~40
    // non-overlapping partials, so a fixed buffer suffices.
    double p_[48];
    int n_ = 0;
    bool nonfinite_ = false;
    double plain_ = 0.0;
};

/// Summation strategy for reductions along the node axis.
/// `exact` is order-invariant (permutation-equivariant bitwise); `fast` is
/// plain left-to-right accumulation, used inside the training loop.
enum class SumMode { exact, fast };

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix matmul_nt(const Matrix& a, const Matrix& b); // a * b^T
Matrix transpose(const Matrix& m);
Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& m, double c);
Matrix map_tanh(const Matrix& m);
Matrix map_sigmoid(const Matrix& m);

/// Adds a 1xC row vector to every row of an RxC matrix.
Matrix add_row_broadcast(const Matrix& m, const Matrix& row);

/// Column-wise concatenation; all inputs must share the row count.
Matrix concat_cols(const std::vector<const Matrix*>& parts);

/// Mean over rows -> 1xC. Node-axis reduction, so the mode matters.
Matrix col_means(const Matrix& m, SumMode mode = SumMode::exact);

/// Mean within each row -> Rx1.
Matrix row_means(const Matrix& m);

/// Row-wise softmax, stabilized by per-row max subtraction.
Matrix softmax_rows(const Matrix& m, SumMode mode = SumMode::exact);

/// Per-row standardization followed by the affine map gain*x_hat + bias.
/// gain and bias are 1xC; eps sits inside the variance square root.
Matrix layer_norm_rows(const Matrix& m, const Matrix& gain, const Matrix& bias, double eps);

/// Throws NumericError naming `stage` if any entry is NaN or infinite.
void check_finite(const Matrix& m, const char* stage);

} // namespace stgt
