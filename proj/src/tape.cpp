#include "stgt/tape.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "stgt/attention.hpp"
#include "stgt/errors.hpp"
#include "stgt/gnn.hpp"

namespace stgt {
namespace {

void accumulate(Matrix& dst, const Matrix& src) {
    for (size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += src.data[i];
}

} // namespace

double bce_loss_value(const Matrix& p, const std::vector<int>& labels,
                      const std::vector<int>& mask, SumMode mode) {
    if (p.cols != 1) throw ConfigError("loss expects an N x 1 probability column");
    if (labels.size() != static_cast<size_t>(p.rows)) {
        throw ConfigError("loss needs one label per probability row");
    }
    if (mask.empty()) throw DataError("loss is undefined on an empty mask");

    auto term = [&](int i) {
        if (i < 0 || i >= p.rows) throw ConfigError("loss mask index out of range");
        int y = labels[static_cast<size_t>(i)];
        if (y != 0 && y != 1) throw DataError("loss mask selects an unlabeled node");
        double prob = std::clamp(p.at(i, 0), kProbClamp, 1.0 - kProbClamp);
        return y == 1 ? -std::log(prob) : -std::log(1.0 - prob);
    };

    if (mode == SumMode::exact) {
        ExactSum acc;
        for (int i : mask) acc.add(term(i));
        return acc.value();
    }
    double total = 0.0;
    for (int i : mask) total += term(i);
    return total;
}

int Tape::push(Matrix value, std::function<void(Tape&, int)> back) {
    nodes_.push_back(Node{std::move(value), Matrix(), std::move(back)});
    return static_cast<int>(nodes_.size()) - 1;
}

const Tape::Node& Tape::node(int id) const {
    if (id < 0 || id >= size()) throw ConfigError("tape node id out of range");
    return nodes_[static_cast<size_t>(id)];
}

const Matrix& Tape::value(int id) const { return node(id).value; }

Matrix& Tape::ensure_grad(int id) {
    Node& n = nodes_.at(static_cast<size_t>(id));
    if (n.grad.empty()) n.grad = Matrix(n.value.rows, n.value.cols);
    return n.grad;
}

const Matrix& Tape::grad(int id) { return ensure_grad(id); }

int Tape::leaf(Matrix value) { return push(std::move(value), nullptr); }

int Tape::matmul(int a, int b) {
    Matrix out = stgt::matmul(value(a), value(b));
    return push(std::move(out), [a, b](Tape& t, int self) {
        const Matrix& g = t.node(self).grad;
        accumulate(t.ensure_grad(a), stgt::matmul_nt(g, t.value(b)));
        accumulate(t.ensure_grad(b), stgt::matmul(transpose(t.value(a)), g));
    });
}

int Tape::matmul_nt(int a, int b) {
    Matrix out = stgt::matmul_nt(value(a), value(b));
    return push(std::move(out), [a, b](Tape& t, int self) {
        const Matrix& g = t.node(self).grad;
        accumulate(t.ensure_grad(a), stgt::matmul(g, t.value(b)));
        accumulate(t.ensure_grad(b), stgt::matmul(transpose(g), t.value(a)));
    });
}

int Tape::add(int a, int b) {
    Matrix out = stgt::add(value(a), value(b));
    return push(std::move(out), [a, b](Tape& t, int self) {
        const Matrix& g = t.node(self).grad;
        accumulate(t.ensure_grad(a), g);
        accumulate(t.ensure_grad(b), g);
    });
}

int Tape::sub(int a, int b) {
    Matrix out = stgt::sub(value(a), value(b));
    return push(std::move(out), [a, b](Tape& t, int self) {
        const Matrix& g = t.node(self).grad;
        accumulate(t.ensure_grad(a), g);
        Matrix& gb = t.ensure_grad(b);
        for (size_t i = 0; i < gb.data.size(); ++i) gb.data[i] -= g.data[i];
    });
}

int Tape::tanh_op(int a) {
    Matrix out = map_tanh(value(a));
    return push(std::move(out), [a](Tape& t, int self) {
        const Matrix& g = t.node(self).grad;
        const Matrix& y = t.value(self);
        Matrix& ga = t.ensure_grad(a);
        for (size_t i = 0; i < ga.data.size(); ++i) {
            ga.data[i] += g.data[i] * (1.0 - y.data[i] * y.data[i]);
        }
    });
}

int Tape::sigmoid_op(int a) {
    Matrix out = map_sigmoid(value(a));
    return push(std::move(out), [a](Tape& t, int self) {
        const Matrix& g = t.node(self).grad;
        const Matrix& y = t.value(self);
        Matrix& ga = t.ensure_grad(a);
        for (size_t i = 0; i < ga.data.size(); ++i) {
            ga.data[i] += g.data[i] * y.data[i] * (1.0 - y.data[i]);
        }
    });
}

int Tape::add_row_broadcast(int m, int row) {
    Matrix out = stgt::add_row_broadcast(value(m), value(row));
    return push(std::move(out), [m, row](Tape& t, int self) {
        const Matrix& g = t.node(self).grad;
        accumulate(t.ensure_grad(m), g);
        Matrix& grow = t.ensure_grad(row);
        for (int i = 0; i < g.rows; ++i) {
            for (int c = 0; c < g.cols; ++c) grow.at(0, c) += g.at(i, c);
        }
    });
}

int Tape::concat(const std::vector<int>& parts) {
    std::vector<const Matrix*> views;
    views.reserve(parts.size());
    for (int id : parts) views.push_back(&value(id));
    Matrix out = concat_cols(views);
    std::vector<int> captured = parts;
    return push(std::move(out), [captured](Tape& t, int self) {
        const Matrix& g = t.node(self).grad;
        int offset = 0;
        for (int id : captured) {
            Matrix& gp = t.ensure_grad(id);
            for (int i = 0; i < gp.rows; ++i) {
                for (int c = 0; c < gp.cols; ++c) gp.at(i, c) += g.at(i, offset + c);
            }
            offset += gp.cols;
        }
    });
}

int Tape::scale_const(int a, double c) {
    Matrix out = scale(value(a), c);
    return push(std::move(out), [a, c](Tape& t, int self) {
        const Matrix& g = t.node(self).grad;
        Matrix& ga = t.ensure_grad(a);
        for (size_t i = 0; i < ga.data.size(); ++i) ga.data[i] += g.data[i] * c;
    });
}

int Tape::scale_rows_const(int a, std::vector<double> weights) {
    const Matrix& x = value(a);
    if (weights.size() != static_cast<size_t>(x.rows)) {
        throw ConfigError("row scaling needs one weight per row");
    }
    Matrix out(x.rows, x.cols);
    for (int i = 0; i < x.rows; ++i) {
        for (int c = 0; c < x.cols; ++c) out.at(i, c) = x.at(i, c) * weights[static_cast<size_t>(i)];
    }
    return push(std::move(out), [a, w = std::move(weights)](Tape& t, int self) {
        const Matrix& g = t.node(self).grad;
        Matrix& ga = t.ensure_grad(a);
        for (int i = 0; i < g.rows; ++i) {
            for (int c = 0; c < g.cols; ++c) ga.at(i, c) += g.at(i, c) * w[static_cast<size_t>(i)];
        }
    });
}

int Tape::scale_by_entry(int m, int s, int r, int c) {
    const Matrix& sv = value(s);
    if (r < 0 || r >= sv.rows || c < 0 || c >= sv.cols) {
        throw ConfigError("scaling entry out of range");
    }
    Matrix out = scale(value(m), sv.at(r, c));
    return push(std::move(out), [m, s, r, c](Tape& t, int self) {
        const Matrix& g = t.node(self).grad;
        const double sval = t.value(s).at(r, c);
        const Matrix& mv = t.value(m);
        Matrix& gm = t.ensure_grad(m);
        double entry_grad = 0.0;
        for (size_t i = 0; i < gm.data.size(); ++i) {
            gm.data[i] += g.data[i] * sval;
            entry_grad += g.data[i] * mv.data[i];
        }
        t.ensure_grad(s).at(r, c) += entry_grad;
    });
}

int Tape::col_mean(int a) {
    Matrix out = col_means(value(a), mode_);
    return push(std::move(out), [a](Tape& t, int self) {
        const Matrix& g = t.node(self).grad;
        Matrix& ga = t.ensure_grad(a);
        const double inv_n = 1.0 / static_cast<double>(ga.rows);
        for (int i = 0; i < ga.rows; ++i) {
            for (int c = 0; c < ga.cols; ++c) ga.at(i, c) += g.at(0, c) * inv_n;
        }
    });
}

int Tape::softmax(int a) {
    Matrix out = softmax_rows(value(a), mode_);
    return push(std::move(out), [a](Tape& t, int self) {
        const Matrix& g = t.node(self).grad;
        const Matrix& y = t.value(self);
        Matrix& ga = t.ensure_grad(a);
        for (int i = 0; i < y.rows; ++i) {
            double dot = 0.0;
            for (int c = 0; c < y.cols; ++c) dot += g.at(i, c) * y.at(i, c);
            for (int c = 0; c < y.cols; ++c) {
                ga.at(i, c) += y.at(i, c) * (g.at(i, c) - dot);
            }
        }
    });
}

int Tape::sum_entries(int a) {
    const Matrix& x = value(a);
    Matrix out(1, 1);
    if (mode_ == SumMode::exact) {
        ExactSum acc;
        for (double v : x.data) acc.add(v);
        out.at(0, 0) = acc.value();
    } else {
        double total = 0.0;
        for (double v : x.data) total += v;
        out.at(0, 0) = total;
    }
    return push(std::move(out), [a](Tape& t, int self) {
        const double g = t.node(self).grad.at(0, 0);
        Matrix& ga = t.ensure_grad(a);
        for (auto& v : ga.data) v += g;
    });
}

int Tape::neighbor_aggregate(int h, const std::vector<std::vector<int>>* adj, bool mean) {
    const AggrKind aggr = mean ? AggrKind::mean : AggrKind::sum;
    Matrix out = aggregate_rows(value(h), *adj, aggr, mode_);
    return push(std::move(out), [h, adj, mean](Tape& t, int self) {
        const Matrix& g = t.node(self).grad;
        Matrix& gh = t.ensure_grad(h);
        for (int i = 0; i < g.rows; ++i) {
            const auto& nbrs = (*adj)[static_cast<size_t>(i)];
            if (nbrs.empty()) continue;
            const double w = mean ? 1.0 / static_cast<double>(nbrs.size()) : 1.0;
            for (int j : nbrs) {
                for (int c = 0; c < g.cols; ++c) gh.at(j, c) += g.at(i, c) * w;
            }
        }
    });
}

int Tape::attention(int q, int k, int v) {
    Matrix out = attention_head(value(q), value(k), value(v), mode_);
    return push(std::move(out), [q, k, v](Tape& t, int self) {
        const Matrix& g = t.node(self).grad;
        const Matrix& qv = t.value(q);
        const Matrix& kv = t.value(k);
        const Matrix& vv = t.value(v);
        Matrix& gq = t.ensure_grad(q);
        Matrix& gk = t.ensure_grad(k);
        Matrix& gv = t.ensure_grad(v);

        const int n = qv.rows;
        const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(qv.cols));
        std::vector<double> weight(static_cast<size_t>(n));
        std::vector<double> gscore(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) {
            // Recompute row i's attention weights instead of storing N x N.
            double max_score = -std::numeric_limits<double>::infinity();
            for (int j = 0; j < n; ++j) {
                double dot = 0.0;
                for (int c = 0; c < qv.cols; ++c) dot += qv.at(i, c) * kv.at(j, c);
                weight[static_cast<size_t>(j)] = dot * inv_sqrt_dk;
                max_score = std::max(max_score, weight[static_cast<size_t>(j)]);
            }
            double denom = 0.0;
            for (int j = 0; j < n; ++j) {
                weight[static_cast<size_t>(j)] = std::exp(weight[static_cast<size_t>(j)] - max_score);
                denom += weight[static_cast<size_t>(j)];
            }
            for (int j = 0; j < n; ++j) weight[static_cast<size_t>(j)] /= denom;

            // Softmax backward along row i, then distribute to Q, K, V.
            double dot_gw = 0.0;
            for (int j = 0; j < n; ++j) {
                double ga = 0.0;
                for (int c = 0; c < vv.cols; ++c) ga += g.at(i, c) * vv.at(j, c);
                gscore[static_cast<size_t>(j)] = ga;
                dot_gw += ga * weight[static_cast<size_t>(j)];
            }
            for (int j = 0; j < n; ++j) {
                const double w = weight[static_cast<size_t>(j)];
                const double gs = w * (gscore[static_cast<size_t>(j)] - dot_gw) * inv_sqrt_dk;
                for (int c = 0; c < qv.cols; ++c) {
                    gq.at(i, c) += gs * kv.at(j, c);
                    gk.at(j, c) += gs * qv.at(i, c);
                }
                for (int c = 0; c < vv.cols; ++c) gv.at(j, c) += w * g.at(i, c);
            }
        }
    });
}

int Tape::layer_norm(int x, int gain, int bias, double eps) {
    Matrix out = layer_norm_rows(value(x), value(gain), value(bias), eps);
    return push(std::move(out), [x, gain, bias, eps](Tape& t, int self) {
        const Matrix& g = t.node(self).grad;
        const Matrix& xv = t.value(x);
        const Matrix& gv = t.value(gain);
        Matrix& gx = t.ensure_grad(x);
        Matrix& ggain = t.ensure_grad(gain);
        Matrix& gbias = t.ensure_grad(bias);

        const int cols = xv.cols;
        std::vector<double> xhat(static_cast<size_t>(cols));
        std::vector<double> dy(static_cast<size_t>(cols));
        for (int i = 0; i < xv.rows; ++i) {
            double mean = 0.0;
            for (int c = 0; c < cols; ++c) mean += xv.at(i, c);
            mean /= cols;
            double var = 0.0;
            for (int c = 0; c < cols; ++c) {
                double d = xv.at(i, c) - mean;
                var += d * d;
            }
            var /= cols;
            const double inv_std = 1.0 / std::sqrt(var + eps);

            double mean_dy = 0.0, mean_dy_xhat = 0.0;
            for (int c = 0; c < cols; ++c) {
                xhat[static_cast<size_t>(c)] = (xv.at(i, c) - mean) * inv_std;
                dy[static_cast<size_t>(c)] = g.at(i, c) * gv.at(0, c);
                mean_dy += dy[static_cast<size_t>(c)];
                mean_dy_xhat += dy[static_cast<size_t>(c)] * xhat[static_cast<size_t>(c)];
                ggain.at(0, c) += g.at(i, c) * xhat[static_cast<size_t>(c)];
                gbias.at(0, c) += g.at(i, c);
            }
            mean_dy /= cols;
            mean_dy_xhat /= cols;
            for (int c = 0; c < cols; ++c) {
                gx.at(i, c) += inv_std * (dy[static_cast<size_t>(c)] - mean_dy -
                                          xhat[static_cast<size_t>(c)] * mean_dy_xhat);
            }
        }
    });
}

int Tape::clamp(int a, double lo, double hi) {
    const Matrix& x = value(a);
    Matrix out(x.rows, x.cols);
    for (size_t i = 0; i < x.data.size(); ++i) out.data[i] = std::clamp(x.data[i], lo, hi);
    return push(std::move(out), [a, lo, hi](Tape& t, int self) {
        const Matrix& g = t.node(self).grad;
        const Matrix& x = t.value(a);
        Matrix& ga = t.ensure_grad(a);
        for (size_t i = 0; i < ga.data.size(); ++i) {
            if (x.data[i] >= lo && x.data[i] <= hi) ga.data[i] += g.data[i];
        }
    });
}

int Tape::bce_loss(int p, std::vector<int> labels, std::vector<int> mask) {
    Matrix out(1, 1);
    out.at(0, 0) = bce_loss_value(value(p), labels, mask, mode_);
    return push(std::move(out),
                [p, labels = std::move(labels), mask = std::move(mask)](Tape& t, int self) {
                    const double g = t.node(self).grad.at(0, 0);
                    const Matrix& pv = t.value(p);
                    Matrix& gp = t.ensure_grad(p);
                    for (int i : mask) {
                        const double prob = pv.at(i, 0);
                        const int y = labels[static_cast<size_t>(i)];
                        gp.at(i, 0) +=
                            g * (y == 1 ? -1.0 / prob : 1.0 / (1.0 - prob));
                    }
                });
}

void Tape::backward(int root) {
    const Matrix& rv = value(root);
    if (rv.rows != 1 || rv.cols != 1) {
        throw ConfigError("backward root must be a 1x1 node");
    }
    ensure_grad(root).at(0, 0) = 1.0;
    for (int id = root; id >= 0; --id) {
        Node& n = nodes_[static_cast<size_t>(id)];
        if (n.grad.empty() || !n.back) continue;
        n.back(*this, id);
    }
}

} // namespace stgt
