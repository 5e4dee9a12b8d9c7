// SPDX-License-Identifier: Apache-2.0
#include "driftbench/ndcore/ops.hpp"

#include <cmath>
#include <memory>

#include "driftbench/common/errors.hpp"

namespace driftbench::nd {
namespace {

void require_rank2(const Tensor& t, const char* op, const char* what) {
  if (t.rank() != 2) {
    throw DimensionError(std::string(op) + ": " + what + " must be rank-2, got " + shape_str(t.shape()));
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
  }
}

// out[n×m] += a[n×k]·b[k×m]
void gemm_acc(const double* a, const double* b, double* out, std::size_t n, std::size_t k, std::size_t m) {
  for (std::size_t r = 0; r < n; ++r) {
    double* orow = out + r * m;
    const double* arow = a + r * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      const double* brow = b + p * m;
      for (std::size_t c = 0; c < m; ++c) orow[c] += av * brow[c];
    }
  }
}

// da[n×k] += dout[n×m]·bᵀ
void gemm_nt_acc(const double* dout, const double* b, double* da, std::size_t n, std::size_t k, std::size_t m) {
  for (std::size_t r = 0; r < n; ++r) {
    const double* drow = dout + r * m;
    double* darow = da + r * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double* brow = b + p * m;
      double s = 0.0;
      for (std::size_t c = 0; c < m; ++c) s += drow[c] * brow[c];
      darow[p] += s;
    }
  }
}

// db[k×m] += aᵀ·dout
void gemm_tn_acc(const double* a, const double* dout, double* db, std::size_t n, std::size_t k, std::size_t m) {
  for (std::size_t r = 0; r < n; ++r) {
    const double* arow = a + r * k;
    const double* drow = dout + r * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      double* dbrow = db + p * m;
      for (std::size_t c = 0; c < m; ++c) dbrow[c] += av * drow[c];
    }
  }
}

}  // namespace

Var affine(Var x, Var w, Var b) {
  const Tensor& xv = x.value();
  const Tensor& wv = w.value();
  const Tensor& bv = b.value();
  require_rank2(xv, "affine", "x");
  require_rank2(wv, "affine", "W");
  const std::size_t n = xv.rows(), din = xv.cols(), dout = wv.cols();
  if (wv.rows() != din || bv.size() != dout) {
    throw DimensionError("affine: x " + shape_str(xv.shape()) + " does not conform to W " +
                         shape_str(wv.shape()) + " and b " + shape_str(bv.shape()));
  }
  Tensor out(Shape{n, dout});
  double* o = out.data().data();
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < dout; ++c) o[r * dout + c] = bv[c];
  }
  gemm_acc(xv.data().data(), wv.data().data(), o, n, din, dout);

  const std::size_t xi = x.id(), wi = w.id(), bi = b.id();
  return x.tape().record(std::move(out), {x, w, b}, [xi, wi, bi, n, din, dout](Tape& t, std::size_t self) {
    const double* g = t.adjoint(self).data();
    if (t.requires_grad(xi)) {
      gemm_nt_acc(g, t.value(wi).data().data(), t.adjoint(xi).data(), n, din, dout);
    }
    if (t.requires_grad(wi)) {
      gemm_tn_acc(t.value(xi).data().data(), g, t.adjoint(wi).data(), n, din, dout);
    }
    if (t.requires_grad(bi)) {
      double* db = t.adjoint(bi).data();
      for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < dout; ++c) db[c] += g[r * dout + c];
      }
    }
  });
}

Var matmul(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_rank2(av, "matmul", "a");
  require_rank2(bv, "matmul", "b");
  const std::size_t n = av.rows(), k = av.cols(), m = bv.cols();
  if (bv.rows() != k) {
    throw DimensionError("matmul: " + shape_str(av.shape()) + " x " + shape_str(bv.shape()));
  }
  Tensor out(Shape{n, m});
  gemm_acc(av.data().data(), bv.data().data(), out.data().data(), n, k, m);
  const std::size_t ai = a.id(), bi = b.id();
  return a.tape().record(std::move(out), {a, b}, [ai, bi, n, k, m](Tape& t, std::size_t self) {
    const double* g = t.adjoint(self).data();
    if (t.requires_grad(ai)) gemm_nt_acc(g, t.value(bi).data().data(), t.adjoint(ai).data(), n, k, m);
    if (t.requires_grad(bi)) gemm_tn_acc(t.value(ai).data().data(), g, t.adjoint(bi).data(), n, k, m);
  });
}

Var add(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_same_shape(av, bv, "add");
  Tensor out(av.shape());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] + bv[i];
  const std::size_t ai = a.id(), bi = b.id();
  return a.tape().record(std::move(out), {a, b}, [ai, bi](Tape& t, std::size_t self) {
    std::span<const double> g = t.adjoint(self);
    for (std::size_t id : {ai, bi}) {
      if (!t.requires_grad(id)) continue;
      std::span<double> d = t.adjoint(id);
      for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
    }
  });
}

Var scale(Var a, double s) {
  const Tensor& av = a.value();
  Tensor out(av.shape());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = s * av[i];
  const std::size_t ai = a.id();
  return a.tape().record(std::move(out), {a}, [ai, s](Tape& t, std::size_t self) {
    std::span<const double> g = t.adjoint(self);
    std::span<double> d = t.adjoint(ai);
    for (std::size_t i = 0; i < g.size(); ++i) d[i] += s * g[i];
  });
}

Var relu(Var x) {
  const Tensor& xv = x.value();
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = xv[i] > 0.0 ? xv[i] : 0.0;
  const std::size_t xi = x.id();
  return x.tape().record(std::move(out), {x}, [xi](Tape& t, std::size_t self) {
    std::span<const double> g = t.adjoint(self);
    std::span<const double> v = t.value(xi).data();
    std::span<double> d = t.adjoint(xi);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (v[i] > 0.0) d[i] += g[i];
    }
  });
}

Var tanh(Var x) {
  const Tensor& xv = x.value();
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = std::tanh(xv[i]);
  const std::size_t xi = x.id();
  return x.tape().record(std::move(out), {x}, [xi](Tape& t, std::size_t self) {
    std::span<const double> g = t.adjoint(self);
    std::span<const double> y = t.value(self).data();
    std::span<double> d = t.adjoint(xi);
    for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * (1.0 - y[i] * y[i]);
  });
}

Var layer_norm(Var x, Var gain, Var bias, double eps) {
  const Tensor& xv = x.value();
  require_rank2(xv, "layer_norm", "x");
  if (!(eps > 0.0)) throw ConfigError("layer_norm: eps must be positive");
  const std::size_t n = xv.rows(), d = xv.cols();
  if (d < 2) throw DimensionError("layer_norm: degenerate dimension d=" + std::to_string(d) + " (need d >= 2)");
  const Tensor& gv = gain.value();
  const Tensor& bv = bias.value();
  if (gv.size() != d || bv.size() != d) {
    throw DimensionError("layer_norm: gain " + shape_str(gv.shape()) + " / bias " + shape_str(bv.shape()) +
                         " do not match row width " + std::to_string(d));
  }

  auto xhat = std::make_shared<std::vector<double>>(n * d);
  auto inv_std = std::make_shared<std::vector<double>>(n);
  Tensor out(Shape{n, d});
  for (std::size_t r = 0; r < n; ++r) {
    const double* row = xv.data().data() + r * d;
    double mean = 0.0;
    for (std::size_t c = 0; c < d; ++c) mean += row[c];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t c = 0; c < d; ++c) var += (row[c] - mean) * (row[c] - mean);
    var /= static_cast<double>(d);
    const double inv = 1.0 / std::sqrt(var + eps);
    (*inv_std)[r] = inv;
    for (std::size_t c = 0; c < d; ++c) {
      const double h = (row[c] - mean) * inv;
      (*xhat)[r * d + c] = h;
      out[r * d + c] = h * gv[c] + bv[c];
    }
  }

  const std::size_t xi = x.id(), gi = gain.id(), bi = bias.id();
  return x.tape().record(std::move(out), {x, gain, bias}, [=](Tape& t, std::size_t self) {
    const double* g = t.adjoint(self).data();
    const double* gamma = t.value(gi).data().data();
    const std::vector<double>& xh = *xhat;
    if (t.requires_grad(gi)) {
      double* dg = t.adjoint(gi).data();
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < d; ++c) dg[c] += g[r * d + c] * xh[r * d + c];
    }
    if (t.requires_grad(bi)) {
      double* db = t.adjoint(bi).data();
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < d; ++c) db[c] += g[r * d + c];
    }
    if (t.requires_grad(xi)) {
      double* dx = t.adjoint(xi).data();
      const double dd = static_cast<double>(d);
      for (std::size_t r = 0; r < n; ++r) {
        double sum_dh = 0.0, sum_dh_h = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
          const double dh = g[r * d + c] * gamma[c];
          sum_dh += dh;
          sum_dh_h += dh * xh[r * d + c];
        }
        const double k = (*inv_std)[r] / dd;
        for (std::size_t c = 0; c < d; ++c) {
          const double dh = g[r * d + c] * gamma[c];
          dx[r * d + c] += k * (dd * dh - sum_dh - xh[r * d + c] * sum_dh_h);
        }
      }
    }
  });
}

Var reshape(Var x, Shape shape) {
  Tensor out(std::move(shape), std::vector<double>(x.value().data().begin(), x.value().data().end()));
  const std::size_t xi = x.id();
  return x.tape().record(std::move(out), {x}, [xi](Tape& t, std::size_t self) {
    std::span<const double> g = t.adjoint(self);
    std::span<double> d = t.adjoint(xi);
    for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no operands");
  const std::size_t n = parts.front().value().rows();
  std::vector<std::size_t> widths, ids;
  std::size_t total = 0;
  for (const Var& p : parts) {
    require_rank2(p.value(), "concat_cols", "operand");
    if (p.value().rows() != n) {
      throw DimensionError("concat_cols: row mismatch " + shape_str(p.value().shape()) + " vs " +
                           std::to_string(n) + " rows");
    }
    widths.push_back(p.value().cols());
    ids.push_back(p.id());
    total += p.value().cols();
  }
  Tensor out(Shape{n, total});
  std::size_t off = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const double* src = parts[k].value().data().data();
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < widths[k]; ++c) out[r * total + off + c] = src[r * widths[k] + c];
    off += widths[k];
  }
  return parts.front().tape().record(std::move(out), parts, [=](Tape& t, std::size_t self) {
    const double* g = t.adjoint(self).data();
    std::size_t o = 0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (t.requires_grad(ids[k])) {
        double* d = t.adjoint(ids[k]).data();
        for (std::size_t r = 0; r < n; ++r)
          for (std::size_t c = 0; c < widths[k]; ++c) d[r * widths[k] + c] += g[r * total + o + c];
      }
      o += widths[k];
    }
  });
}

Var mse_loss(Var pred, Var target) {
  const Tensor& p = pred.value();
  const Tensor& q = target.value();
  require_same_shape(p, q, "mse_loss");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += (p[i] - q[i]) * (p[i] - q[i]);
  const double count = static_cast<double>(p.size());
  const std::size_t pi = pred.id(), qi = target.id();
  return pred.tape().record(Tensor::scalar(s / count), {pred, target}, [pi, qi, count](Tape& t, std::size_t self) {
    const double g = t.adjoint(self)[0];
    std::span<const double> pv = t.value(pi).data();
    std::span<const double> qv = t.value(qi).data();
    if (t.requires_grad(pi)) {
      std::span<double> d = t.adjoint(pi);
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += g * 2.0 * (pv[i] - qv[i]) / count;
    }
    if (t.requires_grad(qi)) {
      std::span<double> d = t.adjoint(qi);
      for (std::size_t i = 0; i < d.size(); ++i) d[i] -= g * 2.0 * (pv[i] - qv[i]) / count;
    }
  });
}

Var l2_penalty(const std::vector<Var>& blocks, std::span<const double> gammas) {
  if (blocks.size() != gammas.size()) {
    throw DimensionError("l2_penalty: " + std::to_string(blocks.size()) + " blocks but " +
                         std::to_string(gammas.size()) + " gammas");
  }
  if (blocks.empty()) throw DimensionError("l2_penalty: no blocks");
  std::vector<double> gs(gammas.begin(), gammas.end());
  for (double g : gs) {
    if (g < 0.0) throw ConfigError("l2_penalty: negative gamma");
  }
  double s = 0.0;
  std::vector<std::size_t> ids;
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    double sq = 0.0;
    for (double v : blocks[k].value().data()) sq += v * v;
    s += gs[k] * sq;
    ids.push_back(blocks[k].id());
  }
  return blocks.front().tape().record(Tensor::scalar(s), blocks, [ids, gs](Tape& t, std::size_t self) {
    const double g = t.adjoint(self)[0];
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (!t.requires_grad(ids[k])) continue;
      std::span<const double> v = t.value(ids[k]).data();
      std::span<double> d = t.adjoint(ids[k]);
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += g * 2.0 * gs[k] * v[i];
    }
  });
}

}  // namespace driftbench::nd
