// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The maeslab Authors

#include "maeslab/diffcore/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "maeslab/errors.hpp"

namespace maeslab::diff {

namespace {

using detail::Node;

bool is_suffix(const Shape& small, const Shape& big) {
  if (small.size() > big.size()) return false;
  return std::equal(small.rbegin(), small.rend(), big.rbegin());
}

struct Broadcast {
  Shape out;
  std::size_t na;
  std::size_t nb;
};

Broadcast broadcast(const Tensor& a, const Tensor& b, std::string_view op) {
  const auto& sa = a.shape();
  const auto& sb = b.shape();
  if (is_suffix(sb, sa)) return {sa, a.size(), b.size()};
  if (is_suffix(sa, sb)) return {sb, a.size(), b.size()};
  throw ConfigError(std::string(op) + ": shapes " + shape_string(sa) + " and " + shape_string(sb) +
                    " do not broadcast (only leading-batch broadcasting is supported)");
}

// Accumulation target for parent i, or nullptr when it does not need grad.
double* grad_of(Node& self, std::size_t i) {
  Node& p = *self.parents[i];
  if (!p.requires_grad) return nullptr;
  p.ensure_grad();
  return p.grad.data();
}

const std::vector<double>& value_of(const Node& self, std::size_t i) { return self.parents[i]->value; }

std::size_t last_dim(const Tensor& a, std::string_view op) {
  if (a.rank() == 0) throw ConfigError(std::string(op) + ": needs rank >= 1, got a scalar");
  return a.shape().back();
}

Shape drop_last(const Shape& s) { return Shape(s.begin(), s.end() - 1); }

template <typename F, typename D>
Tensor unary(const Tensor& a, F f, D dfdx_from_xy) {
  const auto x = a.values();
  std::vector<double> y(x.size());
  std::transform(x.begin(), x.end(), y.begin(), f);
  return Tensor::from_op(a.shape(), std::move(y), {a}, [dfdx_from_xy](Node& self) {
    double* ga = grad_of(self, 0);
    if (!ga) return;
    const auto& x = value_of(self, 0);
    for (std::size_t i = 0; i < x.size(); ++i) ga[i] += self.grad[i] * dfdx_from_xy(x[i], self.value[i]);
  });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  const auto bc = broadcast(a, b, "add");
  const auto va = a.values();
  const auto vb = b.values();
  std::vector<double> out(numel(bc.out));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i % bc.na] + vb[i % bc.nb];
  return Tensor::from_op(bc.out, std::move(out), {a, b}, [na = bc.na, nb = bc.nb](Node& self) {
    const auto& g = self.grad;
    if (double* ga = grad_of(self, 0))
      for (std::size_t i = 0; i < g.size(); ++i) ga[i % na] += g[i];
    if (double* gb = grad_of(self, 1))
      for (std::size_t i = 0; i < g.size(); ++i) gb[i % nb] += g[i];
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  const auto bc = broadcast(a, b, "sub");
  const auto va = a.values();
  const auto vb = b.values();
  std::vector<double> out(numel(bc.out));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i % bc.na] - vb[i % bc.nb];
  return Tensor::from_op(bc.out, std::move(out), {a, b}, [na = bc.na, nb = bc.nb](Node& self) {
    const auto& g = self.grad;
    if (double* ga = grad_of(self, 0))
      for (std::size_t i = 0; i < g.size(); ++i) ga[i % na] += g[i];
    if (double* gb = grad_of(self, 1))
      for (std::size_t i = 0; i < g.size(); ++i) gb[i % nb] -= g[i];
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  const auto bc = broadcast(a, b, "mul");
  const auto va = a.values();
  const auto vb = b.values();
  std::vector<double> out(numel(bc.out));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i % bc.na] * vb[i % bc.nb];
  return Tensor::from_op(bc.out, std::move(out), {a, b}, [na = bc.na, nb = bc.nb](Node& self) {
    const auto& g = self.grad;
    const auto& va = value_of(self, 0);
    const auto& vb = value_of(self, 1);
    if (double* ga = grad_of(self, 0))
      for (std::size_t i = 0; i < g.size(); ++i) ga[i % na] += g[i] * vb[i % nb];
    if (double* gb = grad_of(self, 1))
      for (std::size_t i = 0; i < g.size(); ++i) gb[i % nb] += g[i] * va[i % na];
  });
}

Tensor affine(const Tensor& a, double scale, double shift) {
  return unary(
      a, [scale, shift](double x) { return scale * x + shift; },
      [scale](double, double) { return scale; });
}

Tensor sigmoid(const Tensor& a) {
  return unary(
      a,
      [](double x) {
        if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh(const Tensor& a) {
  return unary(
      a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor exp(const Tensor& a) {
  return unary(
      a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
  return unary(
      a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tensor clamp(const Tensor& a, double lo, double hi) {
  if (!(lo <= hi)) throw ConfigError("clamp: lo must not exceed hi");
  return unary(
      a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
      [lo, hi](double x, double) { return (x > lo && x < hi) ? 1.0 : 0.0; });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (b.rank() != 2 || a.rank() == 0 || a.shape().back() != b.dim(0)) {
    throw ConfigError("matmul: shapes " + shape_string(a.shape()) + " and " +
                      shape_string(b.shape()) + " do not conform");
  }
  const std::size_t k = b.dim(0);
  const std::size_t m = b.dim(1);
  const std::size_t rows = a.size() / k;
  const auto va = a.values();
  const auto vb = b.values();
  std::vector<double> out(rows * m, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    double* o = out.data() + r * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double s = va[r * k + p];
      const double* brow = vb.data() + p * m;
      for (std::size_t j = 0; j < m; ++j) o[j] += s * brow[j];
    }
  }
  Shape shape = drop_last(a.shape());
  shape.push_back(m);
  return Tensor::from_op(std::move(shape), std::move(out), {a, b}, [rows, k, m](Node& self) {
    const auto& g = self.grad;
    const auto& va = value_of(self, 0);
    const auto& vb = value_of(self, 1);
    if (double* ga = grad_of(self, 0)) {
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t p = 0; p < k; ++p) {
          double acc = 0.0;
          for (std::size_t j = 0; j < m; ++j) acc += g[r * m + j] * vb[p * m + j];
          ga[r * k + p] += acc;
        }
    }
    if (double* gb = grad_of(self, 1)) {
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t p = 0; p < k; ++p) {
          const double s = va[r * k + p];
          for (std::size_t j = 0; j < m; ++j) gb[p * m + j] += s * g[r * m + j];
        }
    }
  });
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  if (b.rank() != 2 || a.rank() == 0 || a.shape().back() != b.dim(1)) {
    throw ConfigError("matmul_nt: shapes " + shape_string(a.shape()) + " and " +
                      shape_string(b.shape()) + " do not conform");
  }
  const std::size_t k = b.dim(1);
  const std::size_t m = b.dim(0);
  const std::size_t rows = a.size() / k;
  const auto va = a.values();
  const auto vb = b.values();
  std::vector<double> out(rows * m);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* arow = va.data() + r * k;
    for (std::size_t j = 0; j < m; ++j) {
      const double* brow = vb.data() + j * k;
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
      out[r * m + j] = acc;
    }
  }
  Shape shape = drop_last(a.shape());
  shape.push_back(m);
  return Tensor::from_op(std::move(shape), std::move(out), {a, b}, [rows, k, m](Node& self) {
    const auto& g = self.grad;
    const auto& va = value_of(self, 0);
    const auto& vb = value_of(self, 1);
    if (double* ga = grad_of(self, 0)) {
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < m; ++j) {
          const double s = g[r * m + j];
          if (s == 0.0) continue;
          for (std::size_t p = 0; p < k; ++p) ga[r * k + p] += s * vb[j * k + p];
        }
    }
    if (double* gb = grad_of(self, 1)) {
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < m; ++j) {
          const double s = g[r * m + j];
          if (s == 0.0) continue;
          for (std::size_t p = 0; p < k; ++p) gb[j * k + p] += s * va[r * k + p];
        }
    }
  });
}

Tensor transpose(const Tensor& a) {
  if (a.rank() != 2) throw ConfigError("transpose: needs rank 2, got " + shape_string(a.shape()));
  const std::size_t r = a.dim(0);
  const std::size_t c = a.dim(1);
  const auto va = a.values();
  std::vector<double> out(r * c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = va[i * c + j];
  return Tensor::from_op({c, r}, std::move(out), {a}, [r, c](Node& self) {
    if (double* ga = grad_of(self, 0))
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += self.grad[j * r + i];
  });
}

Tensor softmax(const Tensor& a) {
  const std::size_t k = last_dim(a, "softmax");
  const std::size_t rows = a.size() / k;
  const auto x = a.values();
  std::vector<double> y(x.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = x.data() + r * k;
    double* yr = y.data() + r * k;
    const double mx = *std::max_element(xr, xr + k);
    double z = 0.0;
    for (std::size_t j = 0; j < k; ++j) z += (yr[j] = std::exp(xr[j] - mx));
    for (std::size_t j = 0; j < k; ++j) yr[j] /= z;
  }
  return Tensor::from_op(a.shape(), std::move(y), {a}, [rows, k](Node& self) {
    double* ga = grad_of(self, 0);
    if (!ga) return;
    for (std::size_t r = 0; r < rows; ++r) {
      const double* yr = self.value.data() + r * k;
      const double* gr = self.grad.data() + r * k;
      double dot = 0.0;
      for (std::size_t j = 0; j < k; ++j) dot += gr[j] * yr[j];
      for (std::size_t j = 0; j < k; ++j) ga[r * k + j] += yr[j] * (gr[j] - dot);
    }
  });
}

Tensor log_softmax(const Tensor& a) {
  const std::size_t k = last_dim(a, "log_softmax");
  const std::size_t rows = a.size() / k;
  const auto x = a.values();
  std::vector<double> y(x.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = x.data() + r * k;
    const double mx = *std::max_element(xr, xr + k);
    double z = 0.0;
    for (std::size_t j = 0; j < k; ++j) z += std::exp(xr[j] - mx);
    const double lse = mx + std::log(z);
    for (std::size_t j = 0; j < k; ++j) y[r * k + j] = xr[j] - lse;
  }
  return Tensor::from_op(a.shape(), std::move(y), {a}, [rows, k](Node& self) {
    double* ga = grad_of(self, 0);
    if (!ga) return;
    for (std::size_t r = 0; r < rows; ++r) {
      const double* yr = self.value.data() + r * k;
      const double* gr = self.grad.data() + r * k;
      double total = 0.0;
      for (std::size_t j = 0; j < k; ++j) total += gr[j];
      for (std::size_t j = 0; j < k; ++j) ga[r * k + j] += gr[j] - std::exp(yr[j]) * total;
    }
  });
}

Tensor logsumexp(const Tensor& a) {
  const std::size_t k = last_dim(a, "logsumexp");
  const std::size_t rows = a.size() / k;
  const auto x = a.values();
  std::vector<double> y(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = x.data() + r * k;
    const double mx = *std::max_element(xr, xr + k);
    if (std::isinf(mx) && mx < 0) {
      y[r] = mx;
      continue;
    }
    double z = 0.0;
    for (std::size_t j = 0; j < k; ++j) z += std::exp(xr[j] - mx);
    y[r] = mx + std::log(z);
  }
  return Tensor::from_op(drop_last(a.shape()), std::move(y), {a}, [rows, k](Node& self) {
    double* ga = grad_of(self, 0);
    if (!ga) return;
    const auto& x = value_of(self, 0);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t j = 0; j < k; ++j)
        ga[r * k + j] += self.grad[r] * std::exp(x[r * k + j] - self.value[r]);
  });
}

Tensor sum(const Tensor& a) {
  const auto x = a.values();
  double s = 0.0;
  for (double v : x) s += v;
  return Tensor::from_op({}, {s}, {a}, [](Node& self) {
    if (double* ga = grad_of(self, 0)) {
      const std::size_t n = self.parents[0]->value.size();
      for (std::size_t i = 0; i < n; ++i) ga[i] += self.grad[0];
    }
  });
}

Tensor mean(const Tensor& a) { return affine(sum(a), 1.0 / static_cast<double>(a.size()), 0.0); }

Tensor sum_last(const Tensor& a) {
  const std::size_t k = last_dim(a, "sum_last");
  const std::size_t rows = a.size() / k;
  const auto x = a.values();
  std::vector<double> y(rows, 0.0);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < k; ++j) y[r] += x[r * k + j];
  return Tensor::from_op(drop_last(a.shape()), std::move(y), {a}, [rows, k](Node& self) {
    if (double* ga = grad_of(self, 0))
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < k; ++j) ga[r * k + j] += self.grad[r];
  });
}

Tensor sum_leading(const Tensor& a) {
  const std::size_t k = last_dim(a, "sum_leading");
  const std::size_t rows = a.size() / k;
  const auto x = a.values();
  std::vector<double> y(k, 0.0);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < k; ++j) y[j] += x[r * k + j];
  return Tensor::from_op({k}, std::move(y), {a}, [rows, k](Node& self) {
    if (double* ga = grad_of(self, 0))
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < k; ++j) ga[r * k + j] += self.grad[j];
  });
}

Tensor concat(std::span<const Tensor> parts) {
  if (parts.empty()) throw ConfigError("concat: no inputs");
  const Shape lead = drop_last(Shape(parts[0].shape().begin(), parts[0].shape().end()));
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const auto& p : parts) {
    const std::size_t k = last_dim(p, "concat");
    if (drop_last(p.shape()) != lead) {
      throw ConfigError("concat: shapes " + shape_string(parts[0].shape()) + " and " +
                        shape_string(p.shape()) + " differ in leading dimensions");
    }
    widths.push_back(k);
    total += k;
  }
  const std::size_t rows = numel(lead);
  std::vector<double> out(rows * total);
  std::size_t offset = 0;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const auto x = parts[i].values();
    const std::size_t k = widths[i];
    for (std::size_t r = 0; r < rows; ++r)
      std::copy_n(x.data() + r * k, k, out.data() + r * total + offset);
    offset += k;
  }
  Shape shape = lead;
  shape.push_back(total);
  std::vector<Tensor> parents(parts.begin(), parts.end());
  return Tensor::from_op(std::move(shape), std::move(out), std::move(parents),
                         [rows, total, widths](Node& self) {
                           std::size_t offset = 0;
                           for (std::size_t i = 0; i < widths.size(); ++i) {
                             const std::size_t k = widths[i];
                             if (double* gp = grad_of(self, i))
                               for (std::size_t r = 0; r < rows; ++r)
                                 for (std::size_t j = 0; j < k; ++j)
                                   gp[r * k + j] += self.grad[r * total + offset + j];
                             offset += k;
                           }
                         });
}

Tensor slice(const Tensor& a, std::size_t begin, std::size_t end) {
  const std::size_t k = last_dim(a, "slice");
  if (begin >= end || end > k) {
    throw ConfigError("slice: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                      ") invalid for shape " + shape_string(a.shape()));
  }
  const std::size_t w = end - begin;
  const std::size_t rows = a.size() / k;
  const auto x = a.values();
  std::vector<double> out(rows * w);
  for (std::size_t r = 0; r < rows; ++r) std::copy_n(x.data() + r * k + begin, w, out.data() + r * w);
  Shape shape = drop_last(a.shape());
  shape.push_back(w);
  return Tensor::from_op(std::move(shape), std::move(out), {a}, [rows, k, w, begin](Node& self) {
    if (double* ga = grad_of(self, 0))
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < w; ++j) ga[r * k + begin + j] += self.grad[r * w + j];
  });
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (numel(shape) != a.size()) {
    throw ConfigError("reshape: cannot view " + shape_string(a.shape()) + " as " + shape_string(shape));
  }
  std::vector<double> out(a.values().begin(), a.values().end());
  return Tensor::from_op(std::move(shape), std::move(out), {a}, [](Node& self) {
    if (double* ga = grad_of(self, 0))
      for (std::size_t i = 0; i < self.grad.size(); ++i) ga[i] += self.grad[i];
  });
}

Tensor repeat_middle(const Tensor& a, std::size_t count) {
  const std::size_t k = last_dim(a, "repeat_middle");
  if (count == 0) throw ConfigError("repeat_middle: count must be positive");
  const std::size_t rows = a.size() / k;
  const auto x = a.values();
  std::vector<double> out(rows * count * k);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < count; ++c) std::copy_n(x.data() + r * k, k, out.data() + (r * count + c) * k);
  Shape shape = drop_last(a.shape());
  shape.push_back(count);
  shape.push_back(k);
  return Tensor::from_op(std::move(shape), std::move(out), {a}, [rows, count, k](Node& self) {
    if (double* ga = grad_of(self, 0))
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < count; ++c)
          for (std::size_t j = 0; j < k; ++j) ga[r * k + j] += self.grad[(r * count + c) * k + j];
  });
}

Tensor broadcast_leading(const Tensor& a, std::size_t count) {
  if (count == 0) throw ConfigError("broadcast_leading: count must be positive");
  const std::size_t n = a.size();
  const auto x = a.values();
  std::vector<double> out(count * n);
  for (std::size_t c = 0; c < count; ++c) std::copy(x.begin(), x.end(), out.begin() + c * n);
  Shape shape{count};
  shape.insert(shape.end(), a.shape().begin(), a.shape().end());
  return Tensor::from_op(std::move(shape), std::move(out), {a}, [count, n](Node& self) {
    if (double* ga = grad_of(self, 0))
      for (std::size_t c = 0; c < count; ++c)
        for (std::size_t i = 0; i < n; ++i) ga[i] += self.grad[c * n + i];
  });
}

std::string_view op_name(OpKind kind) noexcept {
  switch (kind) {
    case OpKind::add: return "add";
    case OpKind::sub: return "sub";
    case OpKind::mul: return "mul";
    case OpKind::affine: return "affine";
    case OpKind::sigmoid: return "sigmoid";
    case OpKind::tanh: return "tanh";
    case OpKind::exp: return "exp";
    case OpKind::log: return "log";
    case OpKind::clamp: return "clamp";
    case OpKind::matmul: return "matmul";
    case OpKind::matmul_nt: return "matmul_nt";
    case OpKind::transpose: return "transpose";
    case OpKind::softmax: return "softmax";
    case OpKind::log_softmax: return "log_softmax";
    case OpKind::logsumexp: return "logsumexp";
    case OpKind::sum: return "sum";
    case OpKind::mean: return "mean";
    case OpKind::sum_last: return "sum_last";
    case OpKind::sum_leading: return "sum_leading";
    case OpKind::concat: return "concat";
    case OpKind::slice: return "slice";
    case OpKind::reshape: return "reshape";
    case OpKind::repeat_middle: return "repeat_middle";
    case OpKind::broadcast_leading: return "broadcast_leading";
  }
  return "unknown";
}

const std::vector<OpKind>& all_op_kinds() {
  static const std::vector<OpKind> kinds{
      OpKind::add,       OpKind::sub,         OpKind::mul,           OpKind::affine,
      OpKind::sigmoid,   OpKind::tanh,        OpKind::exp,           OpKind::log,
      OpKind::clamp,     OpKind::matmul,      OpKind::matmul_nt,     OpKind::transpose,
      OpKind::softmax,   OpKind::log_softmax, OpKind::logsumexp,     OpKind::sum,
      OpKind::mean,      OpKind::sum_last,    OpKind::sum_leading,   OpKind::concat,
      OpKind::slice,     OpKind::reshape,     OpKind::repeat_middle, OpKind::broadcast_leading};
  return kinds;
}

Tensor forward_op(OpKind kind, std::span<const Tensor> inputs, const OpAttributes& attrs) {
  const auto need = [&](std::size_t n) {
    if (inputs.size() != n) {
      throw ConfigError(std::string(op_name(kind)) + ": expects " + std::to_string(n) + " inputs, got " +
                        std::to_string(inputs.size()));
    }
  };
  switch (kind) {
    case OpKind::add: need(2); return add(inputs[0], inputs[1]);
    case OpKind::sub: need(2); return sub(inputs[0], inputs[1]);
    case OpKind::mul: need(2); return mul(inputs[0], inputs[1]);
    case OpKind::affine: need(1); return affine(inputs[0], attrs.scale, attrs.shift);
    case OpKind::sigmoid: need(1); return sigmoid(inputs[0]);
    case OpKind::tanh: need(1); return tanh(inputs[0]);
    case OpKind::exp: need(1); return exp(inputs[0]);
    case OpKind::log: need(1); return log(inputs[0]);
    case OpKind::clamp: need(1); return clamp(inputs[0], attrs.lo, attrs.hi);
    case OpKind::matmul: need(2); return matmul(inputs[0], inputs[1]);
    case OpKind::matmul_nt: need(2); return matmul_nt(inputs[0], inputs[1]);
    case OpKind::transpose: need(1); return transpose(inputs[0]);
    case OpKind::softmax: need(1); return softmax(inputs[0]);
    case OpKind::log_softmax: need(1); return log_softmax(inputs[0]);
    case OpKind::logsumexp: need(1); return logsumexp(inputs[0]);
    case OpKind::sum: need(1); return sum(inputs[0]);
    case OpKind::mean: need(1); return mean(inputs[0]);
    case OpKind::sum_last: need(1); return sum_last(inputs[0]);
    case OpKind::sum_leading: need(1); return sum_leading(inputs[0]);
    case OpKind::concat: return concat(inputs);
    case OpKind::slice: need(1); return slice(inputs[0], attrs.begin, attrs.end);
    case OpKind::reshape: need(1); return reshape(inputs[0], attrs.shape);
    case OpKind::repeat_middle: need(1); return repeat_middle(inputs[0], attrs.count);
    case OpKind::broadcast_leading: need(1); return broadcast_leading(inputs[0], attrs.count);
  }
  throw ConfigError("unknown op kind");
}

}  // namespace maeslab::diff
