// Copyright 2026 The cs-lab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cslab/nn/ops.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "cslab/error.h"

namespace cslab::nn {

namespace {

void require_same(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b)) {
    throw ContractError(std::string(op) + ": shape mismatch " + a.shape_string() +
                        " vs " + b.shape_string());
  }
}

template <typename F, typename D>
Var unary(Var a, F f, D df) {
  const Tensor& x = a.value();
  Tensor y(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  Tape* t = a.tape();
  Tensor xs = x;
  Tensor ys = y;
  return t->record(std::move(y), {a}, [t, a, xs, ys, df](const Tensor& g) {
    Tensor gi(g.rows(), g.cols());
    for (std::size_t i = 0; i < g.size(); ++i) gi[i] = g[i] * df(xs[i], ys[i]);
    t->accumulate(a, gi);
  });
}

// out = a * b for plain tensors.
Tensor mm(const Tensor& a, const Tensor& b) {
  Tensor out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double av = a(i, k);
      if (av == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += av * b(k, j);
    }
  }
  return out;
}

// out = a * b^T
Tensor mm_nt(const Tensor& a, const Tensor& b) {
  Tensor out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.rows(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(j, k);
      out(i, j) = s;
    }
  }
  return out;
}

// out = a^T * b
Tensor mm_tn(const Tensor& a, const Tensor& b) {
  Tensor out(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double av = a(k, i);
      if (av == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += av * b(k, j);
    }
  }
  return out;
}

Tensor softmax_rows(const Tensor& x, bool causal) {
  Tensor y(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const std::size_t width = causal ? std::min(r + 1, x.cols()) : x.cols();
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < width; ++c) mx = std::max(mx, x(r, c));
    double z = 0.0;
    for (std::size_t c = 0; c < width; ++c) {
      y(r, c) = std::exp(x(r, c) - mx);
      z += y(r, c);
    }
    for (std::size_t c = 0; c < width; ++c) y(r, c) /= z;
  }
  return y;
}

}  // namespace

Var add(Var a, Var b) {
  require_same(a.value(), b.value(), "add");
  Tensor y = a.value();
  y += b.value();
  Tape* t = a.tape();
  return t->record(std::move(y), {a, b}, [t, a, b](const Tensor& g) {
    t->accumulate(a, g);
    t->accumulate(b, g);
  });
}

Var sub(Var a, Var b) {
  require_same(a.value(), b.value(), "sub");
  Tensor y = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] -= bv[i];
  Tape* t = a.tape();
  return t->record(std::move(y), {a, b}, [t, a, b](const Tensor& g) {
    t->accumulate(a, g);
    Tensor neg = g;
    for (double& v : neg.data()) v = -v;
    t->accumulate(b, neg);
  });
}

Var mul(Var a, Var b) {
  require_same(a.value(), b.value(), "mul");
  Tensor y = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= bv[i];
  Tape* t = a.tape();
  return t->record(std::move(y), {a, b}, [t, a, b](const Tensor& g) {
    if (a.requires_grad()) {
      Tensor ga = g;
      const Tensor& bv = b.value();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] *= bv[i];
      t->accumulate(a, ga);
    }
    if (b.requires_grad()) {
      Tensor gb = g;
      const Tensor& av = a.value();
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] *= av[i];
      t->accumulate(b, gb);
    }
  });
}

Var add_row(Var a, Var row_var) {
  const Tensor& x = a.value();
  const Tensor& r = row_var.value();
  if (r.rows() != 1 || r.cols() != x.cols()) {
    throw ContractError("add_row: cannot broadcast " + r.shape_string() + " over " +
                        x.shape_string());
  }
  Tensor y = x;
  for (std::size_t i = 0; i < y.rows(); ++i) {
    for (std::size_t j = 0; j < y.cols(); ++j) y(i, j) += r(0, j);
  }
  Tape* t = a.tape();
  return t->record(std::move(y), {a, row_var}, [t, a, row_var](const Tensor& g) {
    t->accumulate(a, g);
    if (row_var.requires_grad()) {
      Tensor gr(1, g.cols());
      for (std::size_t i = 0; i < g.rows(); ++i) {
        for (std::size_t j = 0; j < g.cols(); ++j) gr(0, j) += g(i, j);
      }
      t->accumulate(row_var, gr);
    }
  });
}

Var scale(Var a, double s) {
  Tensor y = a.value();
  for (double& v : y.data()) v *= s;
  Tape* t = a.tape();
  return t->record(std::move(y), {a}, [t, a, s](const Tensor& g) {
    Tensor gi = g;
    for (double& v : gi.data()) v *= s;
    t->accumulate(a, gi);
  });
}

Var add_scalar(Var a, double s) {
  Tensor y = a.value();
  for (double& v : y.data()) v += s;
  Tape* t = a.tape();
  return t->record(std::move(y), {a}, [t, a](const Tensor& g) { t->accumulate(a, g); });
}

Var scale_by(Var a, Var s) {
  if (s.value().size() != 1) {
    throw ContractError("scale_by: factor must be 1x1, got " + s.value().shape_string());
  }
  const double sv = s.value()[0];
  Tensor y = a.value();
  for (double& v : y.data()) v *= sv;
  Tape* t = a.tape();
  return t->record(std::move(y), {a, s}, [t, a, s, sv](const Tensor& g) {
    const Tensor& av = a.value();
    Tensor ga = g;
    double gs = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      ga[i] *= sv;
      gs += g[i] * av[i];
    }
    t->accumulate(a, ga);
    t->accumulate(s, Tensor::scalar(gs));
  });
}

Var matmul(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.cols() != bv.rows()) {
    throw ContractError("matmul: " + av.shape_string() + " * " + bv.shape_string());
  }
  Tape* t = a.tape();
  return t->record(mm(av, bv), {a, b}, [t, a, b](const Tensor& g) {
    if (a.requires_grad()) t->accumulate(a, mm_nt(g, b.value()));
    if (b.requires_grad()) t->accumulate(b, mm_tn(a.value(), g));
  });
}

Var matmul_nt(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.cols() != bv.cols()) {
    throw ContractError("matmul_nt: " + av.shape_string() + " * " +
                        bv.shape_string() + "^T");
  }
  Tape* t = a.tape();
  return t->record(mm_nt(av, bv), {a, b}, [t, a, b](const Tensor& g) {
    if (a.requires_grad()) t->accumulate(a, mm(g, b.value()));
    if (b.requires_grad()) t->accumulate(b, mm_tn(g, a.value()));
  });
}

Var transpose(Var a) {
  const Tensor& x = a.value();
  Tensor y(x.cols(), x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) y(j, i) = x(i, j);
  }
  Tape* t = a.tape();
  return t->record(std::move(y), {a}, [t, a](const Tensor& g) {
    Tensor gi(g.cols(), g.rows());
    for (std::size_t i = 0; i < g.rows(); ++i) {
      for (std::size_t j = 0; j < g.cols(); ++j) gi(j, i) = g(i, j);
    }
    t->accumulate(a, gi);
  });
}

Var sigmoid(Var a) {
  return unary(
      a,
      [](double x) {
        if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var tanh(Var a) {
  return unary(
      a, [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Var relu(Var a) {
  return unary(
      a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var exp(Var a) {
  return unary(
      a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var log(Var a) {
  return unary(
      a, [](double x) { return std::log(x); },
      [](double x, double) { return 1.0 / x; });
}

Var softmax(Var a, bool causal) {
  Tensor y = softmax_rows(a.value(), causal);
  Tape* t = a.tape();
  Tensor ys = y;
  return t->record(std::move(y), {a}, [t, a, ys](const Tensor& g) {
    Tensor gi(g.rows(), g.cols());
    for (std::size_t r = 0; r < g.rows(); ++r) {
      double dot = 0.0;
      for (std::size_t c = 0; c < g.cols(); ++c) dot += g(r, c) * ys(r, c);
      for (std::size_t c = 0; c < g.cols(); ++c) {
        gi(r, c) = ys(r, c) * (g(r, c) - dot);
      }
    }
    t->accumulate(a, gi);
  });
}

Var log_softmax(Var a) {
  const Tensor& x = a.value();
  Tensor p = softmax_rows(x, false);
  Tensor y(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < x.cols(); ++c) mx = std::max(mx, x(r, c));
    double z = 0.0;
    for (std::size_t c = 0; c < x.cols(); ++c) z += std::exp(x(r, c) - mx);
    const double lz = mx + std::log(z);
    for (std::size_t c = 0; c < x.cols(); ++c) y(r, c) = x(r, c) - lz;
  }
  Tape* t = a.tape();
  return t->record(std::move(y), {a}, [t, a, p](const Tensor& g) {
    Tensor gi(g.rows(), g.cols());
    for (std::size_t r = 0; r < g.rows(); ++r) {
      double total = 0.0;
      for (std::size_t c = 0; c < g.cols(); ++c) total += g(r, c);
      for (std::size_t c = 0; c < g.cols(); ++c) gi(r, c) = g(r, c) - p(r, c) * total;
    }
    t->accumulate(a, gi);
  });
}

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  const std::size_t rows = a.rows();
  const std::size_t cols = a.cols();
  Tape* t = a.tape();
  return t->record(Tensor::scalar(s), {a}, [t, a, rows, cols](const Tensor& g) {
    t->accumulate(a, Tensor(rows, cols, g[0]));
  });
}

Var mean(Var a) {
  const std::size_t n = a.value().size();
  if (n == 0) throw ContractError("mean of an empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(n));
}

Var sum_rows(Var a) {
  const Tensor& x = a.value();
  Tensor y(1, x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) y(0, j) += x(i, j);
  }
  const std::size_t rows = x.rows();
  Tape* t = a.tape();
  return t->record(std::move(y), {a}, [t, a, rows](const Tensor& g) {
    Tensor gi(rows, g.cols());
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < g.cols(); ++j) gi(i, j) = g(0, j);
    }
    t->accumulate(a, gi);
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ContractError("concat_cols of nothing");
  const std::size_t rows = parts[0].rows();
  std::size_t cols = 0;
  for (const Var& p : parts) {
    if (p.rows() != rows) throw ContractError("concat_cols: row count mismatch");
    cols += p.cols();
  }
  Tensor y(rows, cols);
  std::size_t off = 0;
  for (const Var& p : parts) {
    const Tensor& v = p.value();
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < v.cols(); ++j) y(i, off + j) = v(i, j);
    }
    off += v.cols();
  }
  Tape* t = parts[0].tape();
  return t->record(std::move(y), parts, [t, parts](const Tensor& g) {
    std::size_t off = 0;
    for (const Var& p : parts) {
      const std::size_t w = p.cols();
      if (p.requires_grad()) {
        Tensor gp(g.rows(), w);
        for (std::size_t i = 0; i < g.rows(); ++i) {
          for (std::size_t j = 0; j < w; ++j) gp(i, j) = g(i, off + j);
        }
        t->accumulate(p, gp);
      }
      off += w;
    }
  });
}

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw ContractError("concat_rows of nothing");
  const std::size_t cols = parts[0].cols();
  std::vector<double> data;
  for (const Var& p : parts) {
    if (p.cols() != cols) throw ContractError("concat_rows: column count mismatch");
    const auto& d = p.value().data();
    data.insert(data.end(), d.begin(), d.end());
  }
  const std::size_t rows = data.size() / std::max<std::size_t>(cols, 1);
  Tape* t = parts[0].tape();
  return t->record(Tensor(rows, cols, std::move(data)), parts,
                   [t, parts](const Tensor& g) {
                     std::size_t off = 0;
                     for (const Var& p : parts) {
                       const std::size_t n = p.value().size();
                       if (p.requires_grad()) {
                         Tensor gp(p.rows(), p.cols());
                         std::copy_n(g.data().begin() + static_cast<std::ptrdiff_t>(off),
                                     n, gp.data().begin());
                         t->accumulate(p, gp);
                       }
                       off += n;
                     }
                   });
}

Var slice_cols(Var a, std::size_t begin, std::size_t end) {
  const Tensor& x = a.value();
  if (begin > end || end > x.cols()) {
    throw ContractError("slice_cols [" + std::to_string(begin) + ", " +
                        std::to_string(end) + ") of " + x.shape_string());
  }
  Tensor y(x.rows(), end - begin);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = begin; j < end; ++j) y(i, j - begin) = x(i, j);
  }
  const std::size_t cols = x.cols();
  Tape* t = a.tape();
  return t->record(std::move(y), {a}, [t, a, begin, end, cols](const Tensor& g) {
    Tensor gi(g.rows(), cols);
    for (std::size_t i = 0; i < g.rows(); ++i) {
      for (std::size_t j = begin; j < end; ++j) gi(i, j) = g(i, j - begin);
    }
    t->accumulate(a, gi);
  });
}

Var slice_rows(Var a, std::size_t begin, std::size_t end) {
  const Tensor& x = a.value();
  if (begin > end || end > x.rows()) {
    throw ContractError("slice_rows [" + std::to_string(begin) + ", " +
                        std::to_string(end) + ") of " + x.shape_string());
  }
  const std::size_t cols = x.cols();
  std::vector<double> data(x.data().begin() + static_cast<std::ptrdiff_t>(begin * cols),
                           x.data().begin() + static_cast<std::ptrdiff_t>(end * cols));
  const std::size_t rows = x.rows();
  Tape* t = a.tape();
  return t->record(Tensor(end - begin, cols, std::move(data)), {a},
                   [t, a, begin, rows, cols](const Tensor& g) {
                     Tensor gi(rows, cols);
                     std::copy(g.data().begin(), g.data().end(),
                               gi.data().begin() +
                                   static_cast<std::ptrdiff_t>(begin * cols));
                     t->accumulate(a, gi);
                   });
}

Var row(Var a, std::size_t r) { return slice_rows(a, r, r + 1); }

Var pick(Var a, std::size_t r, std::size_t c) {
  const Tensor& x = a.value();
  if (r >= x.rows() || c >= x.cols()) {
    throw ContractError("pick (" + std::to_string(r) + ", " + std::to_string(c) +
                        ") of " + x.shape_string());
  }
  const std::size_t rows = x.rows();
  const std::size_t cols = x.cols();
  Tape* t = a.tape();
  return t->record(Tensor::scalar(x(r, c)), {a},
                   [t, a, r, c, rows, cols](const Tensor& g) {
                     Tensor gi(rows, cols);
                     gi(r, c) = g[0];
                     t->accumulate(a, gi);
                   });
}

Var gather_rows(Var table, const std::vector<std::size_t>& ids) {
  const Tensor& x = table.value();
  Tensor y(ids.size(), x.cols());
  for (std::size_t k = 0; k < ids.size(); ++k) {
    if (ids[k] >= x.rows()) {
      throw ContractError("gather_rows: id " + std::to_string(ids[k]) +
                          " out of range for " + x.shape_string());
    }
    std::copy_n(x.row_span(ids[k]).begin(), x.cols(), y.row_span(k).begin());
  }
  Tape* t = table.tape();
  return t->record(std::move(y), {table}, [t, table, ids](const Tensor& g) {
    Tensor& gt = t->grad_buffer(table);
    for (std::size_t k = 0; k < ids.size(); ++k) {
      auto dst = gt.row_span(ids[k]);
      auto src = g.row_span(k);
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
    }
  });
}

Var dropout(Var a, double p, Rng& rng) {
  if (p < 0.0 || p >= 1.0) throw ContractError("dropout rate must be in [0, 1)");
  if (p == 0.0) return a;
  Tensor mask(a.rows(), a.cols());
  const double keep = 1.0 / (1.0 - p);
  for (double& m : mask.data()) m = rng.bernoulli(p) ? 0.0 : keep;
  return mul(a, a.tape()->constant(std::move(mask)));
}

Var cross_entropy(Var logits, const std::vector<std::size_t>& targets) {
  const Tensor& x = logits.value();
  if (targets.size() != x.rows()) {
    throw ContractError("cross_entropy: " + std::to_string(targets.size()) +
                        " targets for " + x.shape_string() + " logits");
  }
  Tensor p = softmax_rows(x, false);
  double loss = 0.0;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    if (targets[r] >= x.cols()) throw ContractError("cross_entropy: target out of range");
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < x.cols(); ++c) mx = std::max(mx, x(r, c));
    double z = 0.0;
    for (std::size_t c = 0; c < x.cols(); ++c) z += std::exp(x(r, c) - mx);
    loss += mx + std::log(z) - x(r, targets[r]);
  }
  Tape* t = logits.tape();
  return t->record(Tensor::scalar(loss), {logits},
                   [t, logits, p, targets](const Tensor& g) {
                     Tensor gi = p;
                     for (std::size_t r = 0; r < gi.rows(); ++r) gi(r, targets[r]) -= 1.0;
                     for (double& v : gi.data()) v *= g[0];
                     t->accumulate(logits, gi);
                   });
}

}  // namespace cslab::nn
