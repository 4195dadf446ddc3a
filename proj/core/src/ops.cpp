#include "m2t/ops.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "m2t/errors.hpp"

namespace m2t {

namespace {

[[noreturn]] void mismatch(const char* op, const Tensor& a, const Tensor& b) {
  throw DimensionError(std::string(op) + ": incompatible shapes " + shape_string(a.shape()) + " and " +
                       shape_string(b.shape()));
}

void require_rank(const char* op, const Tensor& t, std::size_t rank) {
  if (t.rank() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                         shape_string(t.shape()));
  }
}

Tape& tape_of(const Var& a) {
  if (!a.valid()) throw StateError("operation on an unbound Var");
  return a.tape();
}

// Unary elementwise op whose derivative is expressed through input x and
// output y.
template <class Fwd, class Deriv>
Var unary(const Var& a, Fwd fwd, Deriv deriv) {
  const Tensor& x = a.value();
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = fwd(x[i]);
  const NodeId ia = a.id();
  return tape_of(a).record(std::move(y), {a}, [ia, deriv](Tape& t, NodeId self) {
    Tensor* ga = t.accumulate(ia);
    if (!ga) return;
    const Tensor& g = t.grad(self);
    const Tensor& x = t.value(ia);
    const Tensor& y = t.value(self);
    for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * deriv(x[i], y[i]);
  });
}

}  // namespace

Var matmul(const Var& a, const Var& b) {
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  require_rank("matmul", A, 2);
  require_rank("matmul", B, 2);
  const std::size_t m = A.dim(0), k = A.dim(1), n = B.dim(1);
  if (B.dim(0) != k) mismatch("matmul", A, B);
  Tensor C(Shape{m, n});
  for (std::size_t i = 0; i < m; ++i) {
    double* c = C.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = A(i, p);
      const double* brow = B.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) c[j] += aip * brow[j];
    }
  }
  const NodeId ia = a.id(), ib = b.id();
  return tape_of(a).record(std::move(C), {a, b}, [ia, ib, m, k, n](Tape& t, NodeId self) {
    const Tensor& G = t.grad(self);
    const Tensor& A = t.value(ia);
    const Tensor& B = t.value(ib);
    if (Tensor* gA = t.accumulate(ia)) {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          double s = 0.0;
          for (std::size_t j = 0; j < n; ++j) s += G(i, j) * B(p, j);
          (*gA)(i, p) += s;
        }
    }
    if (Tensor* gB = t.accumulate(ib)) {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const double aip = A(i, p);
          double* gb = gB->data() + p * n;
          const double* g = G.data() + i * n;
          for (std::size_t j = 0; j < n; ++j) gb[j] += aip * g[j];
        }
    }
  });
}

Var matmul_nt(const Var& a, const Var& b) {
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  require_rank("matmul_nt", A, 2);
  require_rank("matmul_nt", B, 2);
  const std::size_t m = A.dim(0), k = A.dim(1), n = B.dim(0);
  if (B.dim(1) != k) mismatch("matmul_nt", A, B);
  Tensor C(Shape{m, n});
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = A.data() + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const double* brow = B.data() + j * k;
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += arow[p] * brow[p];
      C(i, j) = s;
    }
  }
  const NodeId ia = a.id(), ib = b.id();
  return tape_of(a).record(std::move(C), {a, b}, [ia, ib, m, k, n](Tape& t, NodeId self) {
    const Tensor& G = t.grad(self);
    const Tensor& A = t.value(ia);
    const Tensor& B = t.value(ib);
    if (Tensor* gA = t.accumulate(ia)) {
      for (std::size_t i = 0; i < m; ++i) {
        double* ga = gA->data() + i * k;
        for (std::size_t j = 0; j < n; ++j) {
          const double gij = G(i, j);
          const double* brow = B.data() + j * k;
          for (std::size_t p = 0; p < k; ++p) ga[p] += gij * brow[p];
        }
      }
    }
    if (Tensor* gB = t.accumulate(ib)) {
      for (std::size_t i = 0; i < m; ++i) {
        const double* arow = A.data() + i * k;
        for (std::size_t j = 0; j < n; ++j) {
          const double gij = G(i, j);
          double* gb = gB->data() + j * k;
          for (std::size_t p = 0; p < k; ++p) gb[p] += gij * arow[p];
        }
      }
    }
  });
}

Var matvec(const Var& w, const Var& x) {
  const Tensor& W = w.value();
  const Tensor& X = x.value();
  require_rank("matvec", W, 2);
  require_rank("matvec", X, 1);
  const std::size_t m = W.dim(0), k = W.dim(1);
  if (X.dim(0) != k) mismatch("matvec", W, X);
  Tensor y(Shape{m});
  for (std::size_t i = 0; i < m; ++i) {
    const double* wr = W.data() + i * k;
    double s = 0.0;
    for (std::size_t p = 0; p < k; ++p) s += wr[p] * X[p];
    y[i] = s;
  }
  const NodeId iw = w.id(), ix = x.id();
  return tape_of(w).record(std::move(y), {w, x}, [iw, ix, m, k](Tape& t, NodeId self) {
    const Tensor& g = t.grad(self);
    const Tensor& W = t.value(iw);
    const Tensor& X = t.value(ix);
    if (Tensor* gW = t.accumulate(iw)) {
      for (std::size_t i = 0; i < m; ++i) {
        double* gw = gW->data() + i * k;
        const double gi = g[i];
        for (std::size_t p = 0; p < k; ++p) gw[p] += gi * X[p];
      }
    }
    if (Tensor* gX = t.accumulate(ix)) {
      for (std::size_t i = 0; i < m; ++i) {
        const double* wr = W.data() + i * k;
        const double gi = g[i];
        for (std::size_t p = 0; p < k; ++p) (*gX)[p] += gi * wr[p];
      }
    }
  });
}

Var vecmat(const Var& x, const Var& m, std::size_t begin, std::size_t end) {
  const Tensor& X = x.value();
  const Tensor& M = m.value();
  require_rank("vecmat", X, 1);
  require_rank("vecmat", M, 2);
  if (X.dim(0) != M.dim(0)) mismatch("vecmat", X, M);
  const std::size_t rows = M.dim(0), n = M.dim(1);
  end = std::min(end, rows);
  begin = std::min(begin, end);
  Tensor y(Shape{n});
  for (std::size_t j = begin; j < end; ++j) {
    const double xj = X[j];
    const double* mr = M.data() + j * n;
    for (std::size_t c = 0; c < n; ++c) y[c] += xj * mr[c];
  }
  const NodeId ix = x.id(), im = m.id();
  return tape_of(x).record(std::move(y), {x, m}, [ix, im, begin, end, n](Tape& t, NodeId self) {
    const Tensor& g = t.grad(self);
    const Tensor& X = t.value(ix);
    const Tensor& M = t.value(im);
    if (Tensor* gX = t.accumulate(ix)) {
      for (std::size_t j = begin; j < end; ++j) {
        const double* mr = M.data() + j * n;
        double s = 0.0;
        for (std::size_t c = 0; c < n; ++c) s += g[c] * mr[c];
        (*gX)[j] += s;
      }
    }
    if (Tensor* gM = t.accumulate(im)) {
      for (std::size_t j = begin; j < end; ++j) {
        const double xj = X[j];
        double* gm = gM->data() + j * n;
        for (std::size_t c = 0; c < n; ++c) gm[c] += xj * g[c];
      }
    }
  });
}

namespace {

enum class Broadcast { same, scalar, row };

Broadcast broadcast_kind(const char* op, const Tensor& a, const Tensor& b, bool allow_row) {
  if (a.shape() == b.shape()) return Broadcast::same;
  if (b.rank() == 0) return Broadcast::scalar;
  if (allow_row && a.rank() == 2 && b.rank() == 1 && b.dim(0) == a.dim(1)) return Broadcast::row;
  mismatch(op, a, b);
}

Var add_impl(const Var& a, const Var& b, double sign, const char* op) {
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  const Broadcast kind = broadcast_kind(op, A, B, true);
  Tensor y = A;
  const std::size_t n = A.size();
  const std::size_t bn = B.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double bv = kind == Broadcast::same ? B[i] : kind == Broadcast::scalar ? B[0] : B[i % bn];
    y[i] += sign * bv;
  }
  const NodeId ia = a.id(), ib = b.id();
  return tape_of(a).record(std::move(y), {a, b}, [ia, ib, kind, sign, bn](Tape& t, NodeId self) {
    const Tensor& g = t.grad(self);
    if (Tensor* gA = t.accumulate(ia)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*gA)[i] += g[i];
    }
    if (Tensor* gB = t.accumulate(ib)) {
      for (std::size_t i = 0; i < g.size(); ++i) {
        const std::size_t j = kind == Broadcast::same ? i : kind == Broadcast::scalar ? 0 : i % bn;
        (*gB)[j] += sign * g[i];
      }
    }
  });
}

}  // namespace

Var add(const Var& a, const Var& b) { return add_impl(a, b, 1.0, "add"); }
Var sub(const Var& a, const Var& b) { return add_impl(a, b, -1.0, "sub"); }

Var mul(const Var& a, const Var& b) {
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  const bool scalar = broadcast_kind("mul", A, B, false) == Broadcast::scalar;
  Tensor y(A.shape());
  for (std::size_t i = 0; i < A.size(); ++i) y[i] = A[i] * (scalar ? B[0] : B[i]);
  const NodeId ia = a.id(), ib = b.id();
  return tape_of(a).record(std::move(y), {a, b}, [ia, ib, scalar](Tape& t, NodeId self) {
    const Tensor& g = t.grad(self);
    const Tensor& A = t.value(ia);
    const Tensor& B = t.value(ib);
    if (Tensor* gA = t.accumulate(ia)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*gA)[i] += g[i] * (scalar ? B[0] : B[i]);
    }
    if (Tensor* gB = t.accumulate(ib)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*gB)[scalar ? 0 : i] += g[i] * A[i];
    }
  });
}

Var scale(const Var& a, double c) {
  return unary(a, [c](double x) { return c * x; }, [c](double, double) { return c; });
}

Var add_scalar(const Var& a, double c) {
  return unary(a, [c](double x) { return x + c; }, [](double, double) { return 1.0; });
}

Var minimum(const Var& a, double c) {
  return unary(
      a, [c](double x) { return x < c ? x : c; }, [c](double x, double) { return x < c ? 1.0 : 0.0; });
}

Var tanh(const Var& a) {
  return unary(a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var sigmoid(const Var& a) {
  return unary(
      a,
      [](double x) {
        if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var exp(const Var& a) {
  return unary(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var log(const Var& a) {
  return unary(a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Var concat(std::initializer_list<Var> parts, std::size_t axis) {
  return concat(std::span<const Var>(parts.begin(), parts.size()), axis);
}

Var concat(std::span<const Var> parts, std::size_t axis) {
  if (parts.empty()) throw ArgumentError("concat of zero tensors");
  const Tensor& first = parts[0].value();
  if (first.rank() == 0 || first.rank() > 2 || axis >= first.rank()) {
    throw DimensionError("concat: axis " + std::to_string(axis) + " invalid for " + shape_string(first.shape()));
  }
  // Treat every operand as [outer × inner_i]; concatenation runs along inner.
  const bool columns = first.rank() == 2 && axis == 1;
  const std::size_t outer = columns ? first.dim(0) : 1;
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const Var& p : parts) {
    const Tensor& v = p.value();
    if (v.rank() != first.rank()) mismatch("concat", first, v);
    if (first.rank() == 2 && v.dim(1 - axis) != first.dim(1 - axis)) mismatch("concat", first, v);
    const std::size_t w = v.size() / outer;
    widths.push_back(w);
    total += w;
  }
  Shape shape;
  if (first.rank() == 1) {
    shape = {total};
  } else if (columns) {
    shape = {outer, total};
  } else {
    shape = {total / first.dim(1), first.dim(1)};
  }
  Tensor y(shape);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& v = parts[k].value();
    for (std::size_t r = 0; r < outer; ++r)
      std::copy_n(v.data() + r * widths[k], widths[k], y.data() + r * total + offset);
    offset += widths[k];
  }
  std::vector<NodeId> ids;
  for (const Var& p : parts) ids.push_back(p.id());
  return tape_of(parts[0]).record(
      std::move(y), parts, [ids, widths, outer, total](Tape& t, NodeId self) {
        const Tensor& g = t.grad(self);
        std::size_t offset = 0;
        for (std::size_t k = 0; k < ids.size(); ++k) {
          if (Tensor* gk = t.accumulate(ids[k])) {
            for (std::size_t r = 0; r < outer; ++r)
              for (std::size_t c = 0; c < widths[k]; ++c)
                (*gk)[r * widths[k] + c] += g[r * total + offset + c];
          }
          offset += widths[k];
        }
      });
}

Var stack_rows(std::span<const Var> rows) {
  if (rows.empty()) throw ArgumentError("stack_rows of zero vectors");
  const Tensor& first = rows[0].value();
  require_rank("stack_rows", first, 1);
  const std::size_t n = first.size();
  Tensor y(Shape{rows.size(), n});
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const Tensor& v = rows[r].value();
    if (v.shape() != first.shape()) mismatch("stack_rows", first, v);
    std::copy_n(v.data(), n, y.data() + r * n);
  }
  std::vector<NodeId> ids;
  for (const Var& r : rows) ids.push_back(r.id());
  return tape_of(rows[0]).record(std::move(y), rows, [ids, n](Tape& t, NodeId self) {
    const Tensor& g = t.grad(self);
    for (std::size_t r = 0; r < ids.size(); ++r) {
      if (Tensor* gr = t.accumulate(ids[r])) {
        for (std::size_t c = 0; c < n; ++c) (*gr)[c] += g[r * n + c];
      }
    }
  });
}

Var softmax(const Var& v, std::size_t valid) {
  const Tensor& x = v.value();
  require_rank("softmax", x, 1);
  if (x.size() == 0) throw ArgumentError("softmax of an empty vector");
  valid = std::min(valid, x.size());
  if (valid == 0) throw ArgumentError("softmax with no valid entries");
  Tensor y(x.shape());
  double mx = x[0];
  for (std::size_t i = 1; i < valid; ++i) mx = std::max(mx, x[i]);
  double z = 0.0;
  for (std::size_t i = 0; i < valid; ++i) {
    y[i] = std::exp(x[i] - mx);
    z += y[i];
  }
  for (std::size_t i = 0; i < valid; ++i) y[i] /= z;
  const NodeId iv = v.id();
  return tape_of(v).record(std::move(y), {v}, [iv, valid](Tape& t, NodeId self) {
    Tensor* gx = t.accumulate(iv);
    if (!gx) return;
    const Tensor& g = t.grad(self);
    const Tensor& y = t.value(self);
    double s = 0.0;
    for (std::size_t i = 0; i < valid; ++i) s += g[i] * y[i];
    for (std::size_t i = 0; i < valid; ++i) (*gx)[i] += y[i] * (g[i] - s);
  });
}

namespace {

double log_sum_exp(const Tensor& x) {
  double mx = x[0];
  for (std::size_t i = 1; i < x.size(); ++i) mx = std::max(mx, x[i]);
  double z = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) z += std::exp(x[i] - mx);
  return mx + std::log(z);
}

}  // namespace

Var log_softmax(const Var& v) {
  const Tensor& x = v.value();
  require_rank("log_softmax", x, 1);
  if (x.size() == 0) throw ArgumentError("log_softmax of an empty vector");
  const double lse = log_sum_exp(x);
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] - lse;
  const NodeId iv = v.id();
  return tape_of(v).record(std::move(y), {v}, [iv](Tape& t, NodeId self) {
    Tensor* gx = t.accumulate(iv);
    if (!gx) return;
    const Tensor& g = t.grad(self);
    const Tensor& y = t.value(self);
    double s = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) s += g[i];
    for (std::size_t i = 0; i < g.size(); ++i) (*gx)[i] += g[i] - std::exp(y[i]) * s;
  });
}

Var nll(const Var& logits, std::size_t target) {
  const Tensor& x = logits.value();
  require_rank("nll", x, 1);
  if (target >= x.size()) {
    throw ArgumentError("nll: target " + std::to_string(target) + " outside " + shape_string(x.shape()));
  }
  const double lse = log_sum_exp(x);
  const NodeId il = logits.id();
  return tape_of(logits).record(Tensor::scalar(lse - x[target]), {logits}, [il, lse, target](Tape& t, NodeId self) {
    Tensor* gx = t.accumulate(il);
    if (!gx) return;
    const double g = t.grad(self)[0];
    const Tensor& x = t.value(il);
    for (std::size_t i = 0; i < x.size(); ++i) (*gx)[i] += g * std::exp(x[i] - lse);
    (*gx)[target] -= g;
  });
}

Var sum(const Var& a) {
  const Tensor& x = a.value();
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i];
  const NodeId ia = a.id();
  return tape_of(a).record(Tensor::scalar(s), {a}, [ia](Tape& t, NodeId self) {
    Tensor* gx = t.accumulate(ia);
    if (!gx) return;
    const double g = t.grad(self)[0];
    for (std::size_t i = 0; i < gx->size(); ++i) (*gx)[i] += g;
  });
}

Var dot(const Var& a, const Var& b) {
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (A.shape() != B.shape()) mismatch("dot", A, B);
  double s = 0.0;
  for (std::size_t i = 0; i < A.size(); ++i) s += A[i] * B[i];
  const NodeId ia = a.id(), ib = b.id();
  return tape_of(a).record(Tensor::scalar(s), {a, b}, [ia, ib](Tape& t, NodeId self) {
    const double g = t.grad(self)[0];
    const Tensor& A = t.value(ia);
    const Tensor& B = t.value(ib);
    if (Tensor* gA = t.accumulate(ia)) {
      for (std::size_t i = 0; i < A.size(); ++i) (*gA)[i] += g * B[i];
    }
    if (Tensor* gB = t.accumulate(ib)) {
      for (std::size_t i = 0; i < A.size(); ++i) (*gB)[i] += g * A[i];
    }
  });
}

Var row(const Var& m, std::size_t i) {
  const Tensor& M = m.value();
  require_rank("row", M, 2);
  if (i >= M.dim(0)) throw ArgumentError("row " + std::to_string(i) + " outside " + shape_string(M.shape()));
  const std::size_t n = M.dim(1);
  auto r = M.row(i);
  Tensor y(Shape{n}, std::vector<double>(r.begin(), r.end()));
  const NodeId im = m.id();
  return tape_of(m).record(std::move(y), {m}, [im, i, n](Tape& t, NodeId self) {
    Tensor* gM = t.accumulate(im);
    if (!gM) return;
    const Tensor& g = t.grad(self);
    double* gr = gM->data() + i * n;
    for (std::size_t c = 0; c < n; ++c) gr[c] += g[c];
  });
}

Var element(const Var& v, std::size_t i) {
  const Tensor& x = v.value();
  require_rank("element", x, 1);
  if (i >= x.size()) throw ArgumentError("element " + std::to_string(i) + " outside " + shape_string(x.shape()));
  const NodeId iv = v.id();
  return tape_of(v).record(Tensor::scalar(x[i]), {v}, [iv, i](Tape& t, NodeId self) {
    if (Tensor* gx = t.accumulate(iv)) (*gx)[i] += t.grad(self)[0];
  });
}

}  // namespace m2t
