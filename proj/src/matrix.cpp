#include "stgt/matrix.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "stgt/errors.hpp"

namespace stgt {

namespace {

[[noreturn]] void shape_error(const char* op, const Matrix& a, const Matrix& b) {
    throw ConfigError(std::string(op) + ": shape mismatch (" + std::to_string(a.rows) + "x" +
                      std::to_string(a.cols) + " vs " + std::to_string(b.rows) + "x" +
                      std::to_string(b.cols) + ")");
}

} // namespace

void ExactSum::add(double x) {
    if (nonfinite_) {
        plain_ += x;
        return;
    }
    if (!std::isfinite(x)) {
        double s = x;
        for (int j = 0; j < n_; ++j) s += p_[j];
        nonfinite_ = true;
        plain_ = s;
        n_ = 0;
        return;
    }
    int i = 0;
    for (int j = 0; j < n_; ++j) {
        double y = p_[j];
        if (std::fabs(x) < std::fabs(y)) std::swap(x, y);
        double hi = x + y;
        double lo = y - (hi - x);
        if (lo != 0.0) p_[i++] = lo;
        x = hi;
    }
    if (!std::isfinite(x)) {
        nonfinite_ = true;
        plain_ = x;
        n_ = 0;
        return;
    }
    p_[i++] = x;
    n_ = i;
}

double ExactSum::value() const {
    if (nonfinite_) return plain_;
    if (n_ == 0) return 0.0;
    // Round the partials (non-overlapping, increasing magnitude) to one
    // double, fixing up the case where the discarded tail straddles a
    // rounding boundary so that the result is the correctly rounded sum.
    int n = n_;
    double hi = p_[--n];
    double lo = 0.0;
    while (n > 0) {
        double x = hi;
        double y = p_[--n];
        hi = x + y;
        double yr = hi - x;
        lo = y - yr;
        if (lo != 0.0) break;
    }
    if (n > 0 && ((lo < 0.0 && p_[n - 1] < 0.0) || (lo > 0.0 && p_[n - 1] > 0.0))) {
        double y = lo * 2.0;
        double x = hi + y;
        double yr = x - hi;
        if (y == yr) hi = x;
    }
    return hi;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) shape_error("matmul", a, b);
    Matrix out(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i) {
        const double* arow = a.data.data() + static_cast<size_t>(i) * a.cols;
        double* orow = out.data.data() + static_cast<size_t>(i) * b.cols;
        for (int k = 0; k < a.cols; ++k) {
            double aik = arow[k];
            if (aik == 0.0) continue;
            const double* brow = b.data.data() + static_cast<size_t>(k) * b.cols;
            for (int j = 0; j < b.cols; ++j) orow[j] += aik * brow[j];
        }
    }
    return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    if (a.cols != b.cols) shape_error("matmul_nt", a, b);
    Matrix out(a.rows, b.rows);
    for (int i = 0; i < a.rows; ++i) {
        const double* arow = a.data.data() + static_cast<size_t>(i) * a.cols;
        for (int j = 0; j < b.rows; ++j) {
            const double* brow = b.data.data() + static_cast<size_t>(j) * b.cols;
            double s = 0.0;
            for (int k = 0; k < a.cols; ++k) s += arow[k] * brow[k];
            out.at(i, j) = s;
        }
    }
    return out;
}

Matrix transpose(const Matrix& m) {
    Matrix out(m.cols, m.rows);
    for (int i = 0; i < m.rows; ++i)
        for (int j = 0; j < m.cols; ++j) out.at(j, i) = m.at(i, j);
    return out;
}

Matrix add(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) shape_error("add", a, b);
    Matrix out = a;
    for (size_t i = 0; i < out.size(); ++i) out.data[i] += b.data[i];
    return out;
}

Matrix sub(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) shape_error("sub", a, b);
    Matrix out = a;
    for (size_t i = 0; i < out.size(); ++i) out.data[i] -= b.data[i];
    return out;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) shape_error("hadamard", a, b);
    Matrix out = a;
    for (size_t i = 0; i < out.size(); ++i) out.data[i] *= b.data[i];
    return out;
}

Matrix scale(const Matrix& m, double c) {
    Matrix out = m;
    for (double& v : out.data) v *= c;
    return out;
}

Matrix map_tanh(const Matrix& m) {
    Matrix out = m;
    for (double& v : out.data) v = std::tanh(v);
    return out;
}

Matrix map_sigmoid(const Matrix& m) {
    Matrix out = m;
    for (double& v : out.data) v = 1.0 / (1.0 + std::exp(-v));
    return out;
}

Matrix add_row_broadcast(const Matrix& m, const Matrix& row) {
    if (row.rows != 1 || row.cols != m.cols) shape_error("add_row_broadcast", m, row);
    Matrix out = m;
    for (int i = 0; i < m.rows; ++i)
        for (int j = 0; j < m.cols; ++j) out.at(i, j) += row.at(0, j);
    return out;
}

Matrix concat_cols(const std::vector<const Matrix*>& parts) {
    if (parts.empty()) throw ConfigError("concat_cols: no inputs");
    int rows = parts[0]->rows;
    int cols = 0;
    for (const Matrix* p : parts) {
        if (p->rows != rows) shape_error("concat_cols", *parts[0], *p);
        cols += p->cols;
    }
    Matrix out(rows, cols);
    for (int i = 0; i < rows; ++i) {
        int off = 0;
        for (const Matrix* p : parts) {
            for (int j = 0; j < p->cols; ++j) out.at(i, off + j) = p->at(i, j);
            off += p->cols;
        }
    }
    return out;
}

Matrix col_means(const Matrix& m, SumMode mode) {
    Matrix out(1, m.cols);
    if (m.rows == 0) return out;
    if (mode == SumMode::exact) {
        ExactSum acc;
        for (int j = 0; j < m.cols; ++j) {
            acc.reset();
            for (int i = 0; i < m.rows; ++i) acc.add(m.at(i, j));
            out.at(0, j) = acc.value() / m.rows;
        }
    } else {
        for (int j = 0; j < m.cols; ++j) {
            double s = 0.0;
            for (int i = 0; i < m.rows; ++i) s += m.at(i, j);
            out.at(0, j) = s / m.rows;
        }
    }
    return out;
}

Matrix row_means(const Matrix& m) {
    Matrix out(m.rows, 1);
    for (int i = 0; i < m.rows; ++i) {
        double s = 0.0;
        for (int j = 0; j < m.cols; ++j) s += m.at(i, j);
        out.at(i, 0) = m.cols > 0 ? s / m.cols : 0.0;
    }
    return out;
}

Matrix softmax_rows(const Matrix& m, SumMode mode) {
    Matrix out(m.rows, m.cols);
    ExactSum acc;
    for (int i = 0; i < m.rows; ++i) {
        double mx = m.at(i, 0);
        for (int j = 1; j < m.cols; ++j) mx = std::max(mx, m.at(i, j));
        double denom;
        if (mode == SumMode::exact) {
            acc.reset();
            for (int j = 0; j < m.cols; ++j) {
                double e = std::exp(m.at(i, j) - mx);
                out.at(i, j) = e;
                acc.add(e);
            }
            denom = acc.value();
        } else {
            double s = 0.0;
            for (int j = 0; j < m.cols; ++j) {
                double e = std::exp(m.at(i, j) - mx);
                out.at(i, j) = e;
                s += e;
            }
            denom = s;
        }
        for (int j = 0; j < m.cols; ++j) out.at(i, j) /= denom;
    }
    return out;
}

Matrix layer_norm_rows(const Matrix& m, const Matrix& gain, const Matrix& bias, double eps) {
    if (gain.rows != 1 || gain.cols != m.cols) shape_error("layer_norm_rows", m, gain);
    if (bias.rows != 1 || bias.cols != m.cols) shape_error("layer_norm_rows", m, bias);
    if (!(eps > 0.0)) throw ConfigError("layer_norm_rows: eps must be > 0");
    Matrix out(m.rows, m.cols);
    for (int i = 0; i < m.rows; ++i) {
        double mean = 0.0;
        for (int j = 0; j < m.cols; ++j) mean += m.at(i, j);
        mean /= m.cols;
        double var = 0.0;
        for (int j = 0; j < m.cols; ++j) {
            double d = m.at(i, j) - mean;
            var += d * d;
        }
        var /= m.cols;
        double inv = 1.0 / std::sqrt(var + eps);
        for (int j = 0; j < m.cols; ++j)
            out.at(i, j) = gain.at(0, j) * ((m.at(i, j) - mean) * inv) + bias.at(0, j);
    }
    return out;
}

void check_finite(const Matrix& m, const char* stage) {
    for (double v : m.data) {
        if (!std::isfinite(v))
            throw NumericError(std::string(stage) + ": non-finite value encountered");
    }
}

} // namespace stgt
