// Copyright 2026 The s3kit Authors
// SPDX-License-Identifier: Apache-2.0

#include "s3kit/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "s3kit/error.hpp"

namespace s3kit::ops {

namespace {

template <typename T>
using Node = detail::Node<T>;

template <typename T>
Tensor<T> make_result(Shape shape, std::vector<T> data, std::vector<const Tensor<T>*> inputs,
                      std::function<void(Node<T>&)> backward) {
    Tensor<T> out(std::move(shape), std::move(data));
    if (!grad_enabled()) return out;
    bool needs = false;
    for (const auto* in : inputs) needs = needs || in->requires_grad();
    if (!needs) return out;
    auto& node = *out.node();
    node.requires_grad = true;
    for (const auto* in : inputs) node.parents.push_back(in->node());
    node.backward = std::move(backward);
    return out;
}

template <typename T>
bool wants(const Node<T>& self, std::size_t i) {
    return self.parents[i]->requires_grad;
}

template <typename T>
void require_matrix(const Tensor<T>& t, const char* op) {
    if (t.rank() != 2) throw usage_error(std::string(op) + ": expected a matrix, got shape " + shape_string(t.shape()));
}

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw usage_error(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                          shape_string(b.shape()));
    }
}

// out[m,n] (+)= a[m,k] * b[k,n], double accumulation per output row.
template <typename T>
void gemm_nn(const T* a, const T* b, T* out, std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
    std::vector<double> acc(n);
    for (std::size_t i = 0; i < m; ++i) {
        std::fill(acc.begin(), acc.end(), 0.0);
        const T* arow = a + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = arow[p];
            const T* brow = b + p * n;
            for (std::size_t j = 0; j < n; ++j) acc[j] += av * static_cast<double>(brow[j]);
        }
        T* orow = out + i * n;
        for (std::size_t j = 0; j < n; ++j) orow[j] = static_cast<T>((accumulate ? orow[j] : T(0)) + acc[j]);
    }
}

// out[m,k] += a[m,n] * b[k,n]^T
template <typename T>
void gemm_nt_acc(const T* a, const T* b, T* out, std::size_t m, std::size_t n, std::size_t k) {
    for (std::size_t i = 0; i < m; ++i) {
        const T* arow = a + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const T* brow = b + p * n;
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) s += static_cast<double>(arow[j]) * brow[j];
            out[i * k + p] += static_cast<T>(s);
        }
    }
}

// out[k,n] += a[m,k]^T * b[m,n]
template <typename T>
void gemm_tn_acc(const T* a, const T* b, T* out, std::size_t m, std::size_t k, std::size_t n) {
    std::vector<double> acc(k * n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        const T* brow = b + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = a[i * k + p];
            if (av == 0.0) continue;
            double* arow = acc.data() + p * n;
            for (std::size_t j = 0; j < n; ++j) arow[j] += av * static_cast<double>(brow[j]);
        }
    }
    for (std::size_t i = 0; i < k * n; ++i) out[i] += static_cast<T>(acc[i]);
}

double gelu_value(double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }

double gelu_slope(double x) {
    const double cdf = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
    const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
    return cdf + x * pdf;
}

} // namespace

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
    require_matrix(a, "matmul");
    require_matrix(b, "matmul");
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    if (b.dim(0) != k) {
        throw usage_error("matmul: inner dimensions differ " + shape_string(a.shape()) + " x " +
                          shape_string(b.shape()));
    }
    std::vector<T> out(m * n);
    gemm_nn(a.data().data(), b.data().data(), out.data(), m, k, n, false);
    return make_result<T>({m, n}, std::move(out), {&a, &b}, [m, k, n](Node<T>& self) {
        const auto& pa = *self.parents[0];
        const auto& pb = *self.parents[1];
        if (wants(self, 0)) gemm_nt_acc(self.grad.data(), pb.data.data(), self.parents[0]->ensure_grad().data(), m, n, k);
        if (wants(self, 1)) gemm_tn_acc(pa.data.data(), self.grad.data(), self.parents[1]->ensure_grad().data(), m, k, n);
    });
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
    require_same_shape(a, b, "add");
    std::vector<T> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
    return make_result<T>(a.shape(), std::move(out), {&a, &b}, [](Node<T>& self) {
        for (std::size_t p = 0; p < 2; ++p) {
            if (!wants(self, p)) continue;
            auto& g = self.parents[p]->ensure_grad();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
        }
    });
}

template <typename T>
Tensor<T> add_bias(const Tensor<T>& x, const Tensor<T>& bias) {
    require_matrix(x, "add_bias");
    const std::size_t m = x.dim(0), n = x.dim(1);
    if (bias.size() != n) throw usage_error("add_bias: bias length does not match columns");
    std::vector<T> out(m * n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[i * n + j] = x.data()[i * n + j] + bias.data()[j];
    return make_result<T>(x.shape(), std::move(out), {&x, &bias}, [m, n](Node<T>& self) {
        if (wants(self, 0)) {
            auto& g = self.parents[0]->ensure_grad();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
        }
        if (wants(self, 1)) {
            auto& g = self.parents[1]->ensure_grad();
            for (std::size_t j = 0; j < n; ++j) {
                double s = 0.0;
                for (std::size_t i = 0; i < m; ++i) s += self.grad[i * n + j];
                g[j] += static_cast<T>(s);
            }
        }
    });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
    require_same_shape(a, b, "mul");
    std::vector<T> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
    return make_result<T>(a.shape(), std::move(out), {&a, &b}, [](Node<T>& self) {
        const auto& da = self.parents[0]->data;
        const auto& db = self.parents[1]->data;
        if (wants(self, 0)) {
            auto& g = self.parents[0]->ensure_grad();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * db[i];
        }
        if (wants(self, 1)) {
            auto& g = self.parents[1]->ensure_grad();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * da[i];
        }
    });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& x, double factor) {
    std::vector<T> out(x.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<T>(x.data()[i] * factor);
    return make_result<T>(x.shape(), std::move(out), {&x}, [factor](Node<T>& self) {
        auto& g = self.parents[0]->ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += static_cast<T>(self.grad[i] * factor);
    });
}

template <typename T>
Tensor<T> gelu(const Tensor<T>& x) {
    std::vector<T> out(x.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<T>(gelu_value(x.data()[i]));
    return make_result<T>(x.shape(), std::move(out), {&x}, [](Node<T>& self) {
        const auto& in = self.parents[0]->data;
        auto& g = self.parents[0]->ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += static_cast<T>(self.grad[i] * gelu_slope(in[i]));
    });
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
    std::vector<T> out(x.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.data()[i] > T(0) ? x.data()[i] : T(0);
    return make_result<T>(x.shape(), std::move(out), {&x}, [](Node<T>& self) {
        const auto& in = self.parents[0]->data;
        auto& g = self.parents[0]->ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i)
            if (in[i] > T(0)) g[i] += self.grad[i];
    });
}

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gain, const Tensor<T>& bias, double eps) {
    require_matrix(x, "layer_norm");
    const std::size_t m = x.dim(0), n = x.dim(1);
    if (gain.size() != n || bias.size() != n) throw usage_error("layer_norm: gain/bias length mismatch");
    std::vector<T> out(m * n);
    std::vector<double> xhat(m * n), rstd(m);
    for (std::size_t i = 0; i < m; ++i) {
        const T* row = x.data().data() + i * n;
        double mean = 0.0;
        for (std::size_t j = 0; j < n; ++j) mean += row[j];
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t j = 0; j < n; ++j) var += (row[j] - mean) * (row[j] - mean);
        var /= static_cast<double>(n);
        rstd[i] = 1.0 / std::sqrt(var + eps);
        for (std::size_t j = 0; j < n; ++j) {
            xhat[i * n + j] = (row[j] - mean) * rstd[i];
            out[i * n + j] = static_cast<T>(xhat[i * n + j] * gain.data()[j] + bias.data()[j]);
        }
    }
    return make_result<T>(
        x.shape(), std::move(out), {&x, &gain, &bias},
        [m, n, xhat = std::move(xhat), rstd = std::move(rstd)](Node<T>& self) {
            const auto& gv = self.parents[1]->data;
            if (wants(self, 0)) {
                auto& gx = self.parents[0]->ensure_grad();
                std::vector<double> dxhat(n);
                for (std::size_t i = 0; i < m; ++i) {
                    double mean_d = 0.0, mean_dx = 0.0;
                    for (std::size_t j = 0; j < n; ++j) {
                        dxhat[j] = static_cast<double>(self.grad[i * n + j]) * gv[j];
                        mean_d += dxhat[j];
                        mean_dx += dxhat[j] * xhat[i * n + j];
                    }
                    mean_d /= static_cast<double>(n);
                    mean_dx /= static_cast<double>(n);
                    for (std::size_t j = 0; j < n; ++j)
                        gx[i * n + j] += static_cast<T>(rstd[i] * (dxhat[j] - mean_d - xhat[i * n + j] * mean_dx));
                }
            }
            for (std::size_t p = 1; p < 3; ++p) {
                if (!wants(self, p)) continue;
                auto& g = self.parents[p]->ensure_grad();
                for (std::size_t j = 0; j < n; ++j) {
                    double s = 0.0;
                    for (std::size_t i = 0; i < m; ++i)
                        s += static_cast<double>(self.grad[i * n + j]) * (p == 1 ? xhat[i * n + j] : 1.0);
                    g[j] += static_cast<T>(s);
                }
            }
        });
}

template <typename T>
Tensor<T> embedding_lookup(const Tensor<T>& table, std::span<const std::int32_t> ids) {
    require_matrix(table, "embedding_lookup");
    const std::size_t vocab = table.dim(0), d = table.dim(1);
    std::vector<std::int32_t> index(ids.begin(), ids.end());
    std::vector<T> out(index.size() * d);
    for (std::size_t t = 0; t < index.size(); ++t) {
        if (index[t] < 0 || static_cast<std::size_t>(index[t]) >= vocab) {
            throw usage_error("embedding_lookup: id " + std::to_string(index[t]) + " outside table of " +
                              std::to_string(vocab) + " rows");
        }
        std::copy_n(table.data().data() + index[t] * d, d, out.data() + t * d);
    }
    const std::size_t rows = index.size();
    return make_result<T>({rows, d}, std::move(out), {&table}, [d, index = std::move(index)](Node<T>& self) {
        auto& g = self.parents[0]->ensure_grad();
        for (std::size_t t = 0; t < index.size(); ++t)
            for (std::size_t j = 0; j < d; ++j) g[index[t] * d + j] += self.grad[t * d + j];
    });
}

template <typename T>
Tensor<T> softmax_cross_entropy(const Tensor<T>& logits, std::span<const std::int32_t> targets,
                                std::span<const std::uint8_t> mask) {
    require_matrix(logits, "softmax_cross_entropy");
    const std::size_t rows = logits.dim(0), vocab = logits.dim(1);
    if (targets.size() != rows || mask.size() != rows) {
        throw usage_error("softmax_cross_entropy: targets/mask length must equal logits rows");
    }
    std::vector<std::size_t> selected;
    for (std::size_t t = 0; t < rows; ++t) {
        if (!mask[t]) continue;
        if (targets[t] < 0 || static_cast<std::size_t>(targets[t]) >= vocab) {
            throw usage_error("softmax_cross_entropy: target out of range");
        }
        selected.push_back(t);
    }
    if (selected.empty()) throw data_error("softmax_cross_entropy: mask selects no positions");

    std::vector<double> probs(selected.size() * vocab);
    std::vector<std::int32_t> chosen(selected.size());
    double total = 0.0;
    for (std::size_t s = 0; s < selected.size(); ++s) {
        const T* row = logits.data().data() + selected[s] * vocab;
        double mx = row[0];
        for (std::size_t j = 1; j < vocab; ++j) mx = std::max(mx, static_cast<double>(row[j]));
        double z = 0.0;
        for (std::size_t j = 0; j < vocab; ++j) {
            probs[s * vocab + j] = std::exp(row[j] - mx);
            z += probs[s * vocab + j];
        }
        for (std::size_t j = 0; j < vocab; ++j) probs[s * vocab + j] /= z;
        chosen[s] = targets[selected[s]];
        total += std::log(z) + mx - row[chosen[s]];
    }
    const double inv = 1.0 / static_cast<double>(selected.size());
    return make_result<T>(
        Shape{}, std::vector<T>{static_cast<T>(total * inv)}, {&logits},
        [vocab, inv, selected = std::move(selected), chosen = std::move(chosen),
         probs = std::move(probs)](Node<T>& self) {
            auto& g = self.parents[0]->ensure_grad();
            const double upstream = self.grad[0];
            for (std::size_t s = 0; s < selected.size(); ++s) {
                T* grow = g.data() + selected[s] * vocab;
                for (std::size_t j = 0; j < vocab; ++j) {
                    const double onehot = static_cast<std::int32_t>(j) == chosen[s] ? 1.0 : 0.0;
                    grow[j] += static_cast<T>(upstream * inv * (probs[s * vocab + j] - onehot));
                }
            }
        });
}

template <typename T>
Tensor<T> causal_attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v, std::size_t n_heads) {
    require_matrix(q, "causal_attention");
    require_same_shape(q, k, "causal_attention");
    require_same_shape(q, v, "causal_attention");
    const std::size_t len = q.dim(0), d = q.dim(1);
    if (n_heads == 0 || d % n_heads != 0) throw usage_error("causal_attention: d not divisible by n_heads");
    const std::size_t dh = d / n_heads;
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));

    // probs[h][i*len + j] for j <= i
    std::vector<double> probs(n_heads * len * len, 0.0);
    std::vector<T> out(len * d);
    const T* qd = q.data().data();
    const T* kd = k.data().data();
    const T* vd = v.data().data();
    std::vector<double> acc(dh);
    for (std::size_t h = 0; h < n_heads; ++h) {
        const std::size_t off = h * dh;
        for (std::size_t i = 0; i < len; ++i) {
            double* p = probs.data() + (h * len + i) * len;
            double mx = -1e300;
            for (std::size_t j = 0; j <= i; ++j) {
                double s = 0.0;
                for (std::size_t c = 0; c < dh; ++c) s += static_cast<double>(qd[i * d + off + c]) * kd[j * d + off + c];
                p[j] = s * inv_sqrt;
                mx = std::max(mx, p[j]);
            }
            double z = 0.0;
            for (std::size_t j = 0; j <= i; ++j) {
                p[j] = std::exp(p[j] - mx);
                z += p[j];
            }
            std::fill(acc.begin(), acc.end(), 0.0);
            for (std::size_t j = 0; j <= i; ++j) {
                p[j] /= z;
                for (std::size_t c = 0; c < dh; ++c) acc[c] += p[j] * vd[j * d + off + c];
            }
            for (std::size_t c = 0; c < dh; ++c) out[i * d + off + c] = static_cast<T>(acc[c]);
        }
    }
    return make_result<T>(
        q.shape(), std::move(out), {&q, &k, &v},
        [len, d, dh, n_heads, inv_sqrt, probs = std::move(probs)](Node<T>& self) {
            const auto& qv = self.parents[0]->data;
            const auto& kv = self.parents[1]->data;
            const auto& vv = self.parents[2]->data;
            const auto& go = self.grad;
            std::vector<double> dq(len * d, 0.0), dk(len * d, 0.0), dv(len * d, 0.0), ds(len);
            for (std::size_t h = 0; h < n_heads; ++h) {
                const std::size_t off = h * dh;
                for (std::size_t i = 0; i < len; ++i) {
                    const double* p = probs.data() + (h * len + i) * len;
                    double dot = 0.0;
                    for (std::size_t j = 0; j <= i; ++j) {
                        double dp = 0.0;
                        for (std::size_t c = 0; c < dh; ++c) {
                            dp += static_cast<double>(go[i * d + off + c]) * vv[j * d + off + c];
                            dv[j * d + off + c] += p[j] * go[i * d + off + c];
                        }
                        ds[j] = dp;
                        dot += p[j] * dp;
                    }
                    for (std::size_t j = 0; j <= i; ++j) {
                        const double dscore = p[j] * (ds[j] - dot) * inv_sqrt;
                        for (std::size_t c = 0; c < dh; ++c) {
                            dq[i * d + off + c] += dscore * kv[j * d + off + c];
                            dk[j * d + off + c] += dscore * qv[i * d + off + c];
                        }
                    }
                }
            }
            const std::vector<double>* parts[3] = {&dq, &dk, &dv};
            for (std::size_t p = 0; p < 3; ++p) {
                if (!wants(self, p)) continue;
                auto& g = self.parents[p]->ensure_grad();
                for (std::size_t i = 0; i < g.size(); ++i) g[i] += static_cast<T>((*parts[p])[i]);
            }
        });
}

template <typename T>
Tensor<T> overwrite_rows(const Tensor<T>& base, std::span<const std::size_t> rows, const Tensor<T>& replacement) {
    require_matrix(base, "overwrite_rows");
    require_matrix(replacement, "overwrite_rows");
    const std::size_t d = base.dim(1);
    if (replacement.dim(1) != d || replacement.dim(0) != rows.size()) {
        throw usage_error("overwrite_rows: replacement shape " + shape_string(replacement.shape()) +
                          " does not fit " + std::to_string(rows.size()) + " rows of width " + std::to_string(d));
    }
    std::vector<std::size_t> index(rows.begin(), rows.end());
    std::vector<T> out(base.data().begin(), base.data().end());
    std::vector<std::uint8_t> replaced(base.dim(0), 0);
    for (std::size_t r = 0; r < index.size(); ++r) {
        if (index[r] >= base.dim(0)) throw usage_error("overwrite_rows: row index out of range");
        replaced[index[r]] = 1;
        std::copy_n(replacement.data().data() + r * d, d, out.data() + index[r] * d);
    }
    return make_result<T>(base.shape(), std::move(out), {&base, &replacement},
                          [d, index = std::move(index), replaced = std::move(replaced)](Node<T>& self) {
                              if (wants(self, 0)) {
                                  auto& g = self.parents[0]->ensure_grad();
                                  for (std::size_t i = 0; i < replaced.size(); ++i)
                                      if (!replaced[i])
                                          for (std::size_t j = 0; j < d; ++j) g[i * d + j] += self.grad[i * d + j];
                              }
                              if (wants(self, 1)) {
                                  auto& g = self.parents[1]->ensure_grad();
                                  for (std::size_t r = 0; r < index.size(); ++r)
                                      for (std::size_t j = 0; j < d; ++j) g[r * d + j] += self.grad[index[r] * d + j];
                              }
                          });
}

template <typename T>
Tensor<T> mean_rows(const Tensor<T>& x) {
    require_matrix(x, "mean_rows");
    const std::size_t m = x.dim(0), n = x.dim(1);
    if (m == 0) throw usage_error("mean_rows: empty matrix");
    std::vector<T> out(n);
    for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < m; ++i) s += x.data()[i * n + j];
        out[j] = static_cast<T>(s / static_cast<double>(m));
    }
    return make_result<T>({1, n}, std::move(out), {&x}, [m, n](Node<T>& self) {
        auto& g = self.parents[0]->ensure_grad();
        const double inv = 1.0 / static_cast<double>(m);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) g[i * n + j] += static_cast<T>(self.grad[j] * inv);
    });
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape) {
    if (shape_size(shape) != x.size()) {
        throw usage_error("reshape: cannot view " + shape_string(x.shape()) + " as " + shape_string(shape));
    }
    std::vector<T> out(x.data().begin(), x.data().end());
    return make_result<T>(std::move(shape), std::move(out), {&x}, [](Node<T>& self) {
        auto& g = self.parents[0]->ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
    double s = 0.0;
    for (auto v : x.data()) s += v;
    return make_result<T>(Shape{}, std::vector<T>{static_cast<T>(s)}, {&x}, [](Node<T>& self) {
        auto& g = self.parents[0]->ensure_grad();
        for (auto& gi : g) gi += self.grad[0];
    });
}

#define S3KIT_INSTANTIATE_OPS(T)                                                                                   \
    template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                                                 \
    template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                                    \
    template Tensor<T> add_bias(const Tensor<T>&, const Tensor<T>&);                                               \
    template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                                                    \
    template Tensor<T> scale(const Tensor<T>&, double);                                                            \
    template Tensor<T> gelu(const Tensor<T>&);                                                                     \
    template Tensor<T> relu(const Tensor<T>&);                                                                     \
    template Tensor<T> layer_norm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, double);                   \
    template Tensor<T> embedding_lookup(const Tensor<T>&, std::span<const std::int32_t>);                          \
    template Tensor<T> softmax_cross_entropy(const Tensor<T>&, std::span<const std::int32_t>,                      \
                                             std::span<const std::uint8_t>);                                       \
    template Tensor<T> causal_attention(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, std::size_t);        \
    template Tensor<T> overwrite_rows(const Tensor<T>&, std::span<const std::size_t>, const Tensor<T>&);           \
    template Tensor<T> mean_rows(const Tensor<T>&);                                                                \
    template Tensor<T> reshape(const Tensor<T>&, Shape);                                                           \
    template Tensor<T> sum(const Tensor<T>&);

S3KIT_INSTANTIATE_OPS(float)
S3KIT_INSTANTIATE_OPS(double)

} // namespace s3kit::ops
