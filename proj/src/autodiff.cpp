#include "treglab/autodiff.hpp"

#include <cmath>
#include <memory>
#include <numbers>
#include <string>

namespace treglab {

namespace {

constexpr double kInvSqrt2 = 0.7071067811865476;
constexpr double kInvSqrt2Pi = 0.3989422804014327;

std::string dim_msg(const char* op, const Tensor& a, const Tensor& b) {
  return std::string(op) + ": incompatible shapes " + shape_str(a.shape()) +
         " and " + shape_str(b.shape());
}

}  // namespace

ValueId Graph::parameter(Tensor* t) {
  if (t == nullptr) throw ValueError("parameter: null tensor");
  check_finite(*t, "parameter leaf");
  Node n;
  n.param = t;
  n.needs_grad = t->requires_grad();
  return push(std::move(n));
}

ValueId Graph::constant(Tensor t) {
  check_finite(t, "constant leaf");
  Node n;
  n.owned = std::move(t);
  n.needs_grad = false;
  return push(std::move(n));
}

std::vector<double>& Graph::grad_sink(ValueId id) {
  Node& n = node(id);
  if (n.param != nullptr) return n.param->grad();
  if (n.grad.empty()) n.grad.assign(static_cast<size_t>(n.v().size()), 0.0);
  return n.grad;
}

ValueId Graph::make_op(Tensor value, std::vector<ValueId> inputs,
                       std::function<void(Graph&, ValueId)> backprop,
                       const char* op_name) {
  check_finite(value, std::string(op_name) + " output");
  Node n;
  n.owned = std::move(value);
  for (ValueId in : inputs) {
    if (node(in).needs_grad) {
      n.needs_grad = true;
      break;
    }
  }
  if (n.needs_grad) n.backprop = std::move(backprop);
  return push(std::move(n));
}

const Tensor& Graph::require_matrix(ValueId id, const char* op) const {
  const Tensor& t = node(id).v();
  if (t.rank() != 2) {
    throw ShapeError(std::string(op) + ": expected a matrix, got shape " + shape_str(t.shape()));
  }
  return t;
}

const Tensor& Graph::require_vector(ValueId id, const char* op) const {
  const Tensor& t = node(id).v();
  if (t.rank() != 1) {
    throw ShapeError(std::string(op) + ": expected a vector, got shape " + shape_str(t.shape()));
  }
  return t;
}

ValueId Graph::matmul(ValueId a, ValueId b, bool transpose_b) {
  const Tensor& ta = require_matrix(a, "matmul");
  const Tensor& tb = require_matrix(b, "matmul");
  int m = ta.rows();
  int k = ta.cols();
  int n = transpose_b ? tb.rows() : tb.cols();
  int bk = transpose_b ? tb.cols() : tb.rows();
  if (k != bk) throw ShapeError(dim_msg("matmul", ta, tb));

  Tensor out({m, n});
  const double* pa = ta.data();
  const double* pb = tb.data();
  double* pc = out.data();
  if (!transpose_b) {
    for (int i = 0; i < m; ++i) {
      const double* arow = pa + static_cast<size_t>(i) * k;
      double* crow = pc + static_cast<size_t>(i) * n;
      for (int kk = 0; kk < k; ++kk) {
        double av = arow[kk];
        const double* brow = pb + static_cast<size_t>(kk) * n;
        for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
      }
    }
  } else {
    for (int i = 0; i < m; ++i) {
      const double* arow = pa + static_cast<size_t>(i) * k;
      double* crow = pc + static_cast<size_t>(i) * n;
      for (int j = 0; j < n; ++j) {
        const double* brow = pb + static_cast<size_t>(j) * k;
        double acc = 0.0;
        for (int kk = 0; kk < k; ++kk) acc += arow[kk] * brow[kk];
        crow[j] = acc;
      }
    }
  }

  auto back = [a, b, transpose_b, m, n, k](Graph& g, ValueId self) {
    const std::vector<double>& dc = g.node(self).grad;
    const Tensor& ta = g.node(a).v();
    const Tensor& tb = g.node(b).v();
    if (g.wants_grad(a)) {
      std::vector<double>& da = g.grad_sink(a);
      if (!transpose_b) {
        // da[i,kk] += sum_j dc[i,j] * b[kk,j]
        for (int i = 0; i < m; ++i) {
          for (int kk = 0; kk < k; ++kk) {
            const double* dcrow = dc.data() + static_cast<size_t>(i) * n;
            const double* brow = tb.data() + static_cast<size_t>(kk) * n;
            double acc = 0.0;
            for (int j = 0; j < n; ++j) acc += dcrow[j] * brow[j];
            da[static_cast<size_t>(i) * k + static_cast<size_t>(kk)] += acc;
          }
        }
      } else {
        // da[i,kk] += sum_j dc[i,j] * b[j,kk]
        for (int i = 0; i < m; ++i) {
          const double* dcrow = dc.data() + static_cast<size_t>(i) * n;
          double* darow = da.data() + static_cast<size_t>(i) * k;
          for (int j = 0; j < n; ++j) {
            double dv = dcrow[j];
            const double* brow = tb.data() + static_cast<size_t>(j) * k;
            for (int kk = 0; kk < k; ++kk) darow[kk] += dv * brow[kk];
          }
        }
      }
    }
    if (g.wants_grad(b)) {
      std::vector<double>& db = g.grad_sink(b);
      if (!transpose_b) {
        // db[kk,j] += sum_i a[i,kk] * dc[i,j]
        for (int i = 0; i < m; ++i) {
          const double* arow = ta.data() + static_cast<size_t>(i) * k;
          const double* dcrow = dc.data() + static_cast<size_t>(i) * n;
          for (int kk = 0; kk < k; ++kk) {
            double av = arow[kk];
            double* dbrow = db.data() + static_cast<size_t>(kk) * n;
            for (int j = 0; j < n; ++j) dbrow[j] += av * dcrow[j];
          }
        }
      } else {
        // db[j,kk] += sum_i dc[i,j] * a[i,kk]
        for (int i = 0; i < m; ++i) {
          const double* arow = ta.data() + static_cast<size_t>(i) * k;
          const double* dcrow = dc.data() + static_cast<size_t>(i) * n;
          for (int j = 0; j < n; ++j) {
            double dv = dcrow[j];
            double* dbrow = db.data() + static_cast<size_t>(j) * k;
            for (int kk = 0; kk < k; ++kk) dbrow[kk] += dv * arow[kk];
          }
        }
      }
    }
  };
  return make_op(std::move(out), {a, b}, back, "matmul");
}

ValueId Graph::add(ValueId a, ValueId b) {
  const Tensor& ta = node(a).v();
  const Tensor& tb = node(b).v();
  if (ta.shape() != tb.shape()) throw ShapeError(dim_msg("add", ta, tb));
  Tensor out(ta.shape());
  for (size_t i = 0; i < out.values().size(); ++i) out[i] = ta[i] + tb[i];

  auto back = [a, b](Graph& g, ValueId self) {
    const std::vector<double>& d = g.node(self).grad;
    if (g.wants_grad(a)) {
      std::vector<double>& da = g.grad_sink(a);
      for (size_t i = 0; i < d.size(); ++i) da[i] += d[i];
    }
    if (g.wants_grad(b)) {
      std::vector<double>& db = g.grad_sink(b);
      for (size_t i = 0; i < d.size(); ++i) db[i] += d[i];
    }
  };
  return make_op(std::move(out), {a, b}, back, "add");
}

ValueId Graph::add_bias_rows(ValueId x, ValueId bias) {
  const Tensor& tx = require_matrix(x, "add_bias_rows");
  const Tensor& tb = require_vector(bias, "add_bias_rows");
  int r = tx.rows();
  int c = tx.cols();
  if (tb.dim(0) != c) throw ShapeError(dim_msg("add_bias_rows", tx, tb));
  Tensor out({r, c});
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) out.at(i, j) = tx.at(i, j) + tb[static_cast<size_t>(j)];

  auto back = [x, bias, r, c](Graph& g, ValueId self) {
    const std::vector<double>& d = g.node(self).grad;
    if (g.wants_grad(x)) {
      std::vector<double>& dx = g.grad_sink(x);
      for (size_t i = 0; i < d.size(); ++i) dx[i] += d[i];
    }
    if (g.wants_grad(bias)) {
      std::vector<double>& db = g.grad_sink(bias);
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) db[static_cast<size_t>(j)] += d[static_cast<size_t>(i) * c + static_cast<size_t>(j)];
    }
  };
  return make_op(std::move(out), {x, bias}, back, "add_bias_rows");
}

ValueId Graph::scale(ValueId x, double factor) {
  if (!std::isfinite(factor)) throw NumericError("scale: non-finite factor");
  const Tensor& tx = node(x).v();
  Tensor out(tx.shape());
  for (size_t i = 0; i < out.values().size(); ++i) out[i] = tx[i] * factor;

  auto back = [x, factor](Graph& g, ValueId self) {
    if (!g.wants_grad(x)) return;
    const std::vector<double>& d = g.node(self).grad;
    std::vector<double>& dx = g.grad_sink(x);
    for (size_t i = 0; i < d.size(); ++i) dx[i] += factor * d[i];
  };
  return make_op(std::move(out), {x}, back, "scale");
}

ValueId Graph::layer_norm_rows(ValueId x, ValueId gain, ValueId bias, double eps) {
  const Tensor& tx = require_matrix(x, "layer_norm_rows");
  const Tensor& tg = require_vector(gain, "layer_norm_rows");
  const Tensor& tb = require_vector(bias, "layer_norm_rows");
  int r = tx.rows();
  int c = tx.cols();
  if (tg.dim(0) != c || tb.dim(0) != c) throw ShapeError(dim_msg("layer_norm_rows", tx, tg));

  Tensor out({r, c});
  // saved normalized values and inverse stddev per row for backward
  auto xhat = std::make_shared<std::vector<double>>(static_cast<size_t>(r) * c);
  auto inv_std = std::make_shared<std::vector<double>>(static_cast<size_t>(r));
  for (int i = 0; i < r; ++i) {
    const double* row = tx.data() + static_cast<size_t>(i) * c;
    double mean = 0.0;
    for (int j = 0; j < c; ++j) mean += row[j];
    mean /= c;
    double var = 0.0;
    for (int j = 0; j < c; ++j) {
      double d = row[j] - mean;
      var += d * d;
    }
    var /= c;
    double is = 1.0 / std::sqrt(var + eps);
    (*inv_std)[static_cast<size_t>(i)] = is;
    for (int j = 0; j < c; ++j) {
      double h = (row[j] - mean) * is;
      (*xhat)[static_cast<size_t>(i) * c + static_cast<size_t>(j)] = h;
      out.at(i, j) = h * tg[static_cast<size_t>(j)] + tb[static_cast<size_t>(j)];
    }
  }

  auto back = [x, gain, bias, r, c, xhat, inv_std](Graph& g, ValueId self) {
    const std::vector<double>& d = g.node(self).grad;
    const Tensor& tg = g.node(gain).v();
    if (g.wants_grad(gain)) {
      std::vector<double>& dg = g.grad_sink(gain);
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j)
          dg[static_cast<size_t>(j)] += d[static_cast<size_t>(i) * c + j] * (*xhat)[static_cast<size_t>(i) * c + j];
    }
    if (g.wants_grad(bias)) {
      std::vector<double>& db = g.grad_sink(bias);
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) db[static_cast<size_t>(j)] += d[static_cast<size_t>(i) * c + j];
    }
    if (g.wants_grad(x)) {
      std::vector<double>& dx = g.grad_sink(x);
      for (int i = 0; i < r; ++i) {
        const double* drow = d.data() + static_cast<size_t>(i) * c;
        const double* hrow = xhat->data() + static_cast<size_t>(i) * c;
        double mean_dh = 0.0;
        double mean_dh_h = 0.0;
        for (int j = 0; j < c; ++j) {
          double dh = drow[j] * tg[static_cast<size_t>(j)];
          mean_dh += dh;
          mean_dh_h += dh * hrow[j];
        }
        mean_dh /= c;
        mean_dh_h /= c;
        double is = (*inv_std)[static_cast<size_t>(i)];
        for (int j = 0; j < c; ++j) {
          double dh = drow[j] * tg[static_cast<size_t>(j)];
          dx[static_cast<size_t>(i) * c + static_cast<size_t>(j)] +=
              is * (dh - mean_dh - hrow[j] * mean_dh_h);
        }
      }
    }
  };
  return make_op(std::move(out), {x, gain, bias}, back, "layer_norm_rows");
}

ValueId Graph::softmax_rows(ValueId x) {
  const Tensor& tx = require_matrix(x, "softmax_rows");
  int r = tx.rows();
  int c = tx.cols();
  Tensor out({r, c});
  for (int i = 0; i < r; ++i) {
    const double* row = tx.data() + static_cast<size_t>(i) * c;
    double mx = row[0];
    for (int j = 1; j < c; ++j) mx = std::max(mx, row[j]);
    double sum = 0.0;
    for (int j = 0; j < c; ++j) {
      double e = std::exp(row[j] - mx);
      out.at(i, j) = e;
      sum += e;
    }
    for (int j = 0; j < c; ++j) out.at(i, j) /= sum;
  }

  auto back = [x, r, c](Graph& g, ValueId self) {
    if (!g.wants_grad(x)) return;
    const std::vector<double>& d = g.node(self).grad;
    const Tensor& y = g.node(self).v();
    std::vector<double>& dx = g.grad_sink(x);
    for (int i = 0; i < r; ++i) {
      const double* yrow = y.data() + static_cast<size_t>(i) * c;
      const double* drow = d.data() + static_cast<size_t>(i) * c;
      double dot = 0.0;
      for (int j = 0; j < c; ++j) dot += drow[j] * yrow[j];
      for (int j = 0; j < c; ++j)
        dx[static_cast<size_t>(i) * c + static_cast<size_t>(j)] += yrow[j] * (drow[j] - dot);
    }
  };
  return make_op(std::move(out), {x}, back, "softmax_rows");
}

ValueId Graph::gelu(ValueId x) {
  const Tensor& tx = node(x).v();
  Tensor out(tx.shape());
  for (size_t i = 0; i < out.values().size(); ++i) {
    double v = tx[i];
    out[i] = 0.5 * v * (1.0 + std::erf(v * kInvSqrt2));
  }

  auto back = [x](Graph& g, ValueId self) {
    if (!g.wants_grad(x)) return;
    const std::vector<double>& d = g.node(self).grad;
    const Tensor& tx = g.node(x).v();
    std::vector<double>& dx = g.grad_sink(x);
    for (size_t i = 0; i < d.size(); ++i) {
      double v = tx[i];
      double cdf = 0.5 * (1.0 + std::erf(v * kInvSqrt2));
      double pdf = kInvSqrt2Pi * std::exp(-0.5 * v * v);
      dx[i] += d[i] * (cdf + v * pdf);
    }
  };
  return make_op(std::move(out), {x}, back, "gelu");
}

ValueId Graph::tanh(ValueId x) {
  const Tensor& tx = node(x).v();
  Tensor out(tx.shape());
  for (size_t i = 0; i < out.values().size(); ++i) out[i] = std::tanh(tx[i]);

  auto back = [x](Graph& g, ValueId self) {
    if (!g.wants_grad(x)) return;
    const std::vector<double>& d = g.node(self).grad;
    const Tensor& y = g.node(self).v();
    std::vector<double>& dx = g.grad_sink(x);
    for (size_t i = 0; i < d.size(); ++i) dx[i] += d[i] * (1.0 - y[i] * y[i]);
  };
  return make_op(std::move(out), {x}, back, "tanh");
}

ValueId Graph::embedding_rows(ValueId table, std::vector<int> ids) {
  const Tensor& tt = require_matrix(table, "embedding_rows");
  int vocab = tt.rows();
  int dim = tt.cols();
  int n = static_cast<int>(ids.size());
  if (n == 0) throw InputError("embedding_rows: empty id list");
  for (int id : ids) {
    if (id < 0 || id >= vocab) {
      throw InputError("embedding_rows: id " + std::to_string(id) +
                       " outside vocabulary of size " + std::to_string(vocab));
    }
  }
  Tensor out({n, dim});
  for (int i = 0; i < n; ++i) {
    const double* src = tt.data() + static_cast<size_t>(ids[static_cast<size_t>(i)]) * dim;
    double* dst = out.data() + static_cast<size_t>(i) * dim;
    for (int j = 0; j < dim; ++j) dst[j] = src[j];
  }

  auto back = [table, ids = std::move(ids), dim](Graph& g, ValueId self) {
    if (!g.wants_grad(table)) return;
    const std::vector<double>& d = g.node(self).grad;
    std::vector<double>& dt = g.grad_sink(table);
    for (size_t i = 0; i < ids.size(); ++i) {
      double* dst = dt.data() + static_cast<size_t>(ids[i]) * dim;
      const double* src = d.data() + i * static_cast<size_t>(dim);
      for (int j = 0; j < dim; ++j) dst[j] += src[j];
    }
  };
  return make_op(std::move(out), {table}, back, "embedding_rows");
}

ValueId Graph::dropout(ValueId x, double p, Mode mode, Rng* rng) {
  if (p < 0.0 || p >= 1.0) throw ValueError("dropout: probability must be in [0,1), got " + std::to_string(p));
  if (mode == Mode::eval || p == 0.0) return x;  // identity, no node
  if (rng == nullptr) throw ValueError("dropout: train mode requires an RNG stream");

  const Tensor& tx = node(x).v();
  double keep_scale = 1.0 / (1.0 - p);
  auto mask = std::make_shared<std::vector<double>>(tx.values().size());
  Tensor out(tx.shape());
  for (size_t i = 0; i < out.values().size(); ++i) {
    double m = rng->uniform() >= p ? keep_scale : 0.0;
    (*mask)[i] = m;
    out[i] = tx[i] * m;
  }

  auto back = [x, mask](Graph& g, ValueId self) {
    if (!g.wants_grad(x)) return;
    const std::vector<double>& d = g.node(self).grad;
    std::vector<double>& dx = g.grad_sink(x);
    for (size_t i = 0; i < d.size(); ++i) dx[i] += d[i] * (*mask)[i];
  };
  return make_op(std::move(out), {x}, back, "dropout");
}

ValueId Graph::mean_pool_rows(ValueId x, std::vector<double> row_weights) {
  const Tensor& tx = require_matrix(x, "mean_pool_rows");
  int r = tx.rows();
  int c = tx.cols();
  if (static_cast<int>(row_weights.size()) != r) {
    throw ShapeError("mean_pool_rows: weight count " + std::to_string(row_weights.size()) +
                     " does not match row count " + std::to_string(r));
  }
  double total = 0.0;
  for (double w : row_weights) {
    if (w < 0.0) throw ValueError("mean_pool_rows: negative weight");
    total += w;
  }
  if (total <= 0.0) throw ValueError("mean_pool_rows: weights sum to zero");

  Tensor out({c});
  for (int i = 0; i < r; ++i) {
    double w = row_weights[static_cast<size_t>(i)];
    if (w == 0.0) continue;
    const double* row = tx.data() + static_cast<size_t>(i) * c;
    for (int j = 0; j < c; ++j) out[static_cast<size_t>(j)] += w * row[j];
  }
  for (int j = 0; j < c; ++j) out[static_cast<size_t>(j)] /= total;

  auto back = [x, weights = std::move(row_weights), total, r, c](Graph& g, ValueId self) {
    if (!g.wants_grad(x)) return;
    const std::vector<double>& d = g.node(self).grad;
    std::vector<double>& dx = g.grad_sink(x);
    for (int i = 0; i < r; ++i) {
      double w = weights[static_cast<size_t>(i)] / total;
      if (w == 0.0) continue;
      for (int j = 0; j < c; ++j)
        dx[static_cast<size_t>(i) * c + static_cast<size_t>(j)] += w * d[static_cast<size_t>(j)];
    }
  };
  return make_op(std::move(out), {x}, back, "mean_pool_rows");
}

ValueId Graph::mse(ValueId pred, ValueId target) {
  const Tensor& tp = node(pred).v();
  const Tensor& tt = node(target).v();
  if (tp.shape() != tt.shape()) throw ShapeError(dim_msg("mse", tp, tt));
  int64_t n = tp.size();
  double acc = 0.0;
  for (size_t i = 0; i < tp.values().size(); ++i) {
    double d = tp[i] - tt[i];
    acc += d * d;
  }
  Tensor out = Tensor::scalar(acc / static_cast<double>(n));

  auto back = [pred, target, n](Graph& g, ValueId self) {
    double d = g.node(self).grad[0] * 2.0 / static_cast<double>(n);
    const Tensor& tp = g.node(pred).v();
    const Tensor& tt = g.node(target).v();
    if (g.wants_grad(pred)) {
      std::vector<double>& dp = g.grad_sink(pred);
      for (size_t i = 0; i < dp.size(); ++i) dp[i] += d * (tp[i] - tt[i]);
    }
    if (g.wants_grad(target)) {
      std::vector<double>& dt = g.grad_sink(target);
      for (size_t i = 0; i < dt.size(); ++i) dt[i] -= d * (tp[i] - tt[i]);
    }
  };
  return make_op(std::move(out), {pred, target}, back, "mse");
}

ValueId Graph::slice_cols(ValueId x, int begin, int count) {
  const Tensor& tx = require_matrix(x, "slice_cols");
  int r = tx.rows();
  int c = tx.cols();
  if (begin < 0 || count <= 0 || begin + count > c) {
    throw ShapeError("slice_cols: range [" + std::to_string(begin) + "," +
                     std::to_string(begin + count) + ") outside of " + std::to_string(c) + " columns");
  }
  Tensor out({r, count});
  for (int i = 0; i < r; ++i) {
    const double* src = tx.data() + static_cast<size_t>(i) * c + static_cast<size_t>(begin);
    double* dst = out.data() + static_cast<size_t>(i) * count;
    for (int j = 0; j < count; ++j) dst[j] = src[j];
  }

  auto back = [x, begin, count, r, c](Graph& g, ValueId self) {
    if (!g.wants_grad(x)) return;
    const std::vector<double>& d = g.node(self).grad;
    std::vector<double>& dx = g.grad_sink(x);
    for (int i = 0; i < r; ++i) {
      double* dst = dx.data() + static_cast<size_t>(i) * c + static_cast<size_t>(begin);
      const double* src = d.data() + static_cast<size_t>(i) * count;
      for (int j = 0; j < count; ++j) dst[j] += src[j];
    }
  };
  return make_op(std::move(out), {x}, back, "slice_cols");
}

ValueId Graph::concat_cols(const std::vector<ValueId>& xs) {
  if (xs.empty()) throw ValueError("concat_cols: empty input list");
  int r = require_matrix(xs[0], "concat_cols").rows();
  int total = 0;
  for (ValueId id : xs) {
    const Tensor& t = require_matrix(id, "concat_cols");
    if (t.rows() != r) throw ShapeError("concat_cols: row count mismatch");
    total += t.cols();
  }
  Tensor out({r, total});
  int offset = 0;
  for (ValueId id : xs) {
    const Tensor& t = node(id).v();
    int c = t.cols();
    for (int i = 0; i < r; ++i) {
      const double* src = t.data() + static_cast<size_t>(i) * c;
      double* dst = out.data() + static_cast<size_t>(i) * total + static_cast<size_t>(offset);
      for (int j = 0; j < c; ++j) dst[j] = src[j];
    }
    offset += c;
  }

  auto back = [xs, r, total](Graph& g, ValueId self) {
    const std::vector<double>& d = g.node(self).grad;
    int offset = 0;
    for (ValueId id : xs) {
      int c = g.node(id).v().cols();
      if (g.wants_grad(id)) {
        std::vector<double>& dx = g.grad_sink(id);
        for (int i = 0; i < r; ++i) {
          const double* src = d.data() + static_cast<size_t>(i) * total + static_cast<size_t>(offset);
          double* dst = dx.data() + static_cast<size_t>(i) * c;
          for (int j = 0; j < c; ++j) dst[j] += src[j];
        }
      }
      offset += c;
    }
  };
  return make_op(std::move(out), xs, back, "concat_cols");
}

ValueId Graph::concat(const std::vector<ValueId>& xs) {
  if (xs.empty()) throw ValueError("concat: empty input list");
  int64_t total = 0;
  for (ValueId id : xs) total += require_vector(id, "concat").size();
  Tensor out({static_cast<int>(total)});
  size_t offset = 0;
  for (ValueId id : xs) {
    const Tensor& t = node(id).v();
    for (size_t i = 0; i < t.values().size(); ++i) out[offset + i] = t[i];
    offset += t.values().size();
  }

  auto back = [xs](Graph& g, ValueId self) {
    const std::vector<double>& d = g.node(self).grad;
    size_t offset = 0;
    for (ValueId id : xs) {
      size_t n = g.node(id).v().values().size();
      if (g.wants_grad(id)) {
        std::vector<double>& dx = g.grad_sink(id);
        for (size_t i = 0; i < n; ++i) dx[i] += d[offset + i];
      }
      offset += n;
    }
  };
  return make_op(std::move(out), xs, back, "concat");
}

ValueId Graph::cross_entropy_rows(ValueId logits, std::vector<int> targets,
                                  std::vector<double> row_weights) {
  const Tensor& tl = require_matrix(logits, "cross_entropy_rows");
  int r = tl.rows();
  int c = tl.cols();
  if (static_cast<int>(targets.size()) != r || static_cast<int>(row_weights.size()) != r) {
    throw ShapeError("cross_entropy_rows: targets/weights must match row count " + std::to_string(r));
  }
  double total = 0.0;
  for (int i = 0; i < r; ++i) {
    double w = row_weights[static_cast<size_t>(i)];
    if (w < 0.0) throw ValueError("cross_entropy_rows: negative weight");
    if (w > 0.0 && (targets[static_cast<size_t>(i)] < 0 || targets[static_cast<size_t>(i)] >= c)) {
      throw InputError("cross_entropy_rows: target id outside logit columns");
    }
    total += w;
  }
  if (total <= 0.0) throw ValueError("cross_entropy_rows: weights sum to zero");

  auto probs = std::make_shared<std::vector<double>>(static_cast<size_t>(r) * c);
  double loss = 0.0;
  for (int i = 0; i < r; ++i) {
    const double* row = tl.data() + static_cast<size_t>(i) * c;
    double mx = row[0];
    for (int j = 1; j < c; ++j) mx = std::max(mx, row[j]);
    double sum = 0.0;
    for (int j = 0; j < c; ++j) sum += std::exp(row[j] - mx);
    double lse = mx + std::log(sum);
    double w = row_weights[static_cast<size_t>(i)];
    if (w > 0.0) loss += w * (lse - row[targets[static_cast<size_t>(i)]]);
    for (int j = 0; j < c; ++j)
      (*probs)[static_cast<size_t>(i) * c + static_cast<size_t>(j)] = std::exp(row[j] - lse);
  }
  Tensor out = Tensor::scalar(loss / total);

  auto back = [logits, targets = std::move(targets), weights = std::move(row_weights),
               probs, total, r, c](Graph& g, ValueId self) {
    if (!g.wants_grad(logits)) return;
    double d = g.node(self).grad[0] / total;
    std::vector<double>& dl = g.grad_sink(logits);
    for (int i = 0; i < r; ++i) {
      double w = weights[static_cast<size_t>(i)];
      if (w == 0.0) continue;
      double scale = d * w;
      int t = targets[static_cast<size_t>(i)];
      for (int j = 0; j < c; ++j) {
        double p = (*probs)[static_cast<size_t>(i) * c + static_cast<size_t>(j)];
        dl[static_cast<size_t>(i) * c + static_cast<size_t>(j)] += scale * (p - (j == t ? 1.0 : 0.0));
      }
    }
  };
  return make_op(std::move(out), {logits}, back, "cross_entropy_rows");
}

void Graph::backward(ValueId loss) {
  if (backward_done_) throw StateError("backward called twice on the same graph");
  backward_done_ = true;
  if (loss < 0 || static_cast<size_t>(loss) >= nodes_.size()) throw ValueError("backward: unknown node");
  const Node& ln = node(loss);
  if (ln.v().size() != 1) {
    throw ShapeError("backward: loss must be scalar, got shape " + shape_str(ln.v().shape()));
  }
  if (!ln.needs_grad) return;  // everything reachable is frozen

  grad_sink(loss)[0] += 1.0;
  for (ValueId id = loss; id >= 0; --id) {
    Node& n = node(id);
    if (!n.needs_grad || !n.backprop) continue;
    if (n.param == nullptr && n.grad.empty()) continue;  // not reached from the loss
    n.backprop(*this, id);
  }
}

}  // namespace treglab
