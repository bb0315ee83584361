#include "tghoa/tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tghoa {

int Tape::push(Tensor value, bool needs, std::function<void(Tape&)> back) {
  nodes_.push_back(Node{std::move(value), needs, nullptr, std::move(back)});
  return static_cast<int>(nodes_.size()) - 1;
}

Tensor& Tape::a_(int id) {
  if (adj_[id].shape.empty()) adj_[id] = Tensor(nodes_[id].value.shape, 0.0);
  return adj_[id];
}

void Tape::check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b))
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape) +
                     " vs " + shape_str(b.shape));
}

Var Tape::input(Tensor value) { return Var{push(std::move(value), false, {})}; }

Var Tape::param(Param& p) {
  int id = push(p.value, true, {});
  nodes_[id].bound = &p;
  return Var{id};
}

Var Tape::matvec(Var m, Var v) {
  const Tensor& M = v_(m.id);
  const Tensor& x = v_(v.id);
  if (M.rank() != 2 || x.rank() != 1 || M.cols() != x.numel())
    throw ShapeError("matvec: shape mismatch " + shape_str(M.shape) + " vs " +
                     shape_str(x.shape));
  int r = M.rows(), c = M.cols();
  Tensor y({r});
  for (int i = 0; i < r; ++i) {
    double acc = 0.0;
    const double* row = &M.data[static_cast<size_t>(i) * c];
    for (int j = 0; j < c; ++j) acc += row[j] * x[j];
    y[i] = acc;
  }
  bool req = rg_(m.id) || rg_(v.id);
  int mi = m.id, vi = v.id;
  int out = push(std::move(y), req, {});
  nodes_[out].back = [mi, vi, out](Tape& t) {
    if (!t.has_adj_(out)) return;
    const Tensor& g = t.adj_[out];
    const Tensor& M = t.v_(mi);
    const Tensor& x = t.v_(vi);
    int r = M.rows(), c = M.cols();
    if (t.rg_(mi)) {
      Tensor& dm = t.a_(mi);
      for (int i = 0; i < r; ++i) {
        double gi = g[i];
        if (gi == 0.0) continue;
        double* row = &dm.data[static_cast<size_t>(i) * c];
        for (int j = 0; j < c; ++j) row[j] += gi * x[j];
      }
    }
    if (t.rg_(vi)) {
      Tensor& dx = t.a_(vi);
      for (int i = 0; i < r; ++i) {
        double gi = g[i];
        if (gi == 0.0) continue;
        const double* row = &M.data[static_cast<size_t>(i) * c];
        for (int j = 0; j < c; ++j) dx[j] += gi * row[j];
      }
    }
  };
  return Var{out};
}

Var Tape::matmul(Var a, Var b) {
  const Tensor& A = v_(a.id);
  const Tensor& B = v_(b.id);
  if (A.rank() != 2 || B.rank() != 2 || A.cols() != B.rows())
    throw ShapeError("matmul: shape mismatch " + shape_str(A.shape) + " vs " +
                     shape_str(B.shape));
  int m = A.rows(), k = A.cols(), n = B.cols();
  Tensor C({m, n});
  for (int i = 0; i < m; ++i)
    for (int p = 0; p < k; ++p) {
      double aip = A(i, p);
      if (aip == 0.0) continue;
      for (int j = 0; j < n; ++j) C(i, j) += aip * B(p, j);
    }
  bool req = rg_(a.id) || rg_(b.id);
  int ai = a.id, bi = b.id;
  int out = push(std::move(C), req, {});
  nodes_[out].back = [ai, bi, out](Tape& t) {
    if (!t.has_adj_(out)) return;
    const Tensor& G = t.adj_[out];
    const Tensor& A = t.v_(ai);
    const Tensor& B = t.v_(bi);
    int m = A.rows(), k = A.cols(), n = B.cols();
    if (t.rg_(ai)) {
      Tensor& dA = t.a_(ai);
      for (int i = 0; i < m; ++i)
        for (int p = 0; p < k; ++p) {
          double acc = 0.0;
          for (int j = 0; j < n; ++j) acc += G(i, j) * B(p, j);
          dA(i, p) += acc;
        }
    }
    if (t.rg_(bi)) {
      Tensor& dB = t.a_(bi);
      for (int p = 0; p < k; ++p)
        for (int i = 0; i < m; ++i) {
          double aip = A(i, p);
          if (aip == 0.0) continue;
          for (int j = 0; j < n; ++j) dB(p, j) += aip * G(i, j);
        }
    }
  };
  return Var{out};
}

Var Tape::vecmat(Var v, Var m) {
  const Tensor& x = v_(v.id);
  const Tensor& M = v_(m.id);
  if (x.rank() != 1 || M.rank() != 2 || M.rows() != x.numel())
    throw ShapeError("vecmat: shape mismatch " + shape_str(x.shape) + " vs " +
                     shape_str(M.shape));
  int r = M.rows(), c = M.cols();
  Tensor y({c});
  for (int i = 0; i < r; ++i) {
    double xi = x[i];
    if (xi == 0.0) continue;
    const double* row = &M.data[static_cast<size_t>(i) * c];
    for (int j = 0; j < c; ++j) y[j] += xi * row[j];
  }
  bool req = rg_(v.id) || rg_(m.id);
  int vi = v.id, mi = m.id;
  int out = push(std::move(y), req, {});
  nodes_[out].back = [vi, mi, out](Tape& t) {
    if (!t.has_adj_(out)) return;
    const Tensor& g = t.adj_[out];
    const Tensor& x = t.v_(vi);
    const Tensor& M = t.v_(mi);
    int r = M.rows(), c = M.cols();
    if (t.rg_(vi)) {
      Tensor& dx = t.a_(vi);
      for (int i = 0; i < r; ++i) {
        double acc = 0.0;
        const double* row = &M.data[static_cast<size_t>(i) * c];
        for (int j = 0; j < c; ++j) acc += row[j] * g[j];
        dx[i] += acc;
      }
    }
    if (t.rg_(mi)) {
      Tensor& dM = t.a_(mi);
      for (int i = 0; i < r; ++i) {
        double xi = x[i];
        if (xi == 0.0) continue;
        double* row = &dM.data[static_cast<size_t>(i) * c];
        for (int j = 0; j < c; ++j) row[j] += xi * g[j];
      }
    }
  };
  return Var{out};
}

Var Tape::add(Var a, Var b) {
  const Tensor& A = v_(a.id);
  const Tensor& B = v_(b.id);
  check_same_shape("add", A, B);
  Tensor y = A;
  for (int i = 0; i < y.numel(); ++i) y[i] += B[i];
  bool req = rg_(a.id) || rg_(b.id);
  int ai = a.id, bi = b.id;
  int out = push(std::move(y), req, {});
  nodes_[out].back = [ai, bi, out](Tape& t) {
    if (!t.has_adj_(out)) return;
    const Tensor& g = t.adj_[out];
    if (t.rg_(ai)) {
      Tensor& da = t.a_(ai);
      for (int i = 0; i < g.numel(); ++i) da[i] += g[i];
    }
    if (t.rg_(bi)) {
      Tensor& db = t.a_(bi);
      for (int i = 0; i < g.numel(); ++i) db[i] += g[i];
    }
  };
  return Var{out};
}

Var Tape::sub(Var a, Var b) {
  const Tensor& A = v_(a.id);
  const Tensor& B = v_(b.id);
  check_same_shape("sub", A, B);
  Tensor y = A;
  for (int i = 0; i < y.numel(); ++i) y[i] -= B[i];
  bool req = rg_(a.id) || rg_(b.id);
  int ai = a.id, bi = b.id;
  int out = push(std::move(y), req, {});
  nodes_[out].back = [ai, bi, out](Tape& t) {
    if (!t.has_adj_(out)) return;
    const Tensor& g = t.adj_[out];
    if (t.rg_(ai)) {
      Tensor& da = t.a_(ai);
      for (int i = 0; i < g.numel(); ++i) da[i] += g[i];
    }
    if (t.rg_(bi)) {
      Tensor& db = t.a_(bi);
      for (int i = 0; i < g.numel(); ++i) db[i] -= g[i];
    }
  };
  return Var{out};
}

Var Tape::mul(Var a, Var b) {
  const Tensor& A = v_(a.id);
  const Tensor& B = v_(b.id);
  check_same_shape("mul", A, B);
  Tensor y = A;
  for (int i = 0; i < y.numel(); ++i) y[i] *= B[i];
  bool req = rg_(a.id) || rg_(b.id);
  int ai = a.id, bi = b.id;
  int out = push(std::move(y), req, {});
  nodes_[out].back = [ai, bi, out](Tape& t) {
    if (!t.has_adj_(out)) return;
    const Tensor& g = t.adj_[out];
    const Tensor& A = t.v_(ai);
    const Tensor& B = t.v_(bi);
    if (t.rg_(ai)) {
      Tensor& da = t.a_(ai);
      for (int i = 0; i < g.numel(); ++i) da[i] += g[i] * B[i];
    }
    if (t.rg_(bi)) {
      Tensor& db = t.a_(bi);
      for (int i = 0; i < g.numel(); ++i) db[i] += g[i] * A[i];
    }
  };
  return Var{out};
}

Var Tape::scale(Var x, double k) {
  Tensor y = v_(x.id);
  for (int i = 0; i < y.numel(); ++i) y[i] *= k;
  int xi = x.id;
  int out = push(std::move(y), rg_(x.id), {});
  nodes_[out].back = [xi, k, out](Tape& t) {
    if (!t.has_adj_(out) || !t.rg_(xi)) return;
    const Tensor& g = t.adj_[out];
    Tensor& dx = t.a_(xi);
    for (int i = 0; i < g.numel(); ++i) dx[i] += k * g[i];
  };
  return Var{out};
}

Var Tape::scalar_mul(Var s, Var x) {
  const Tensor& S = v_(s.id);
  if (S.numel() != 1)
    throw ShapeError("scalar_mul: scalar operand has shape " + shape_str(S.shape));
  double sv = S[0];
  Tensor y = v_(x.id);
  for (int i = 0; i < y.numel(); ++i) y[i] *= sv;
  bool req = rg_(s.id) || rg_(x.id);
  int si = s.id, xi = x.id;
  int out = push(std::move(y), req, {});
  nodes_[out].back = [si, xi, out](Tape& t) {
    if (!t.has_adj_(out)) return;
    const Tensor& g = t.adj_[out];
    const Tensor& X = t.v_(xi);
    double sv = t.v_(si)[0];
    if (t.rg_(si)) {
      double acc = 0.0;
      for (int i = 0; i < g.numel(); ++i) acc += g[i] * X[i];
      t.a_(si)[0] += acc;
    }
    if (t.rg_(xi)) {
      Tensor& dx = t.a_(xi);
      for (int i = 0; i < g.numel(); ++i) dx[i] += sv * g[i];
    }
  };
  return Var{out};
}

Var Tape::add_scalar(Var x, Var s) {
  const Tensor& S = v_(s.id);
  if (S.numel() != 1)
    throw ShapeError("add_scalar: scalar operand has shape " + shape_str(S.shape));
  double sv = S[0];
  Tensor y = v_(x.id);
  for (int i = 0; i < y.numel(); ++i) y[i] += sv;
  bool req = rg_(s.id) || rg_(x.id);
  int si = s.id, xi = x.id;
  int out = push(std::move(y), req, {});
  nodes_[out].back = [si, xi, out](Tape& t) {
    if (!t.has_adj_(out)) return;
    const Tensor& g = t.adj_[out];
    if (t.rg_(xi)) {
      Tensor& dx = t.a_(xi);
      for (int i = 0; i < g.numel(); ++i) dx[i] += g[i];
    }
    if (t.rg_(si)) {
      double acc = 0.0;
      for (int i = 0; i < g.numel(); ++i) acc += g[i];
      t.a_(si)[0] += acc;
    }
  };
  return Var{out};
}

Var Tape::tanh_(Var x) {
  Tensor y = v_(x.id);
  for (int i = 0; i < y.numel(); ++i) y[i] = std::tanh(y[i]);
  int xi = x.id;
  int out = push(std::move(y), rg_(x.id), {});
  nodes_[out].back = [xi, out](Tape& t) {
    if (!t.has_adj_(out) || !t.rg_(xi)) return;
    const Tensor& g = t.adj_[out];
    const Tensor& y = t.v_(out);
    Tensor& dx = t.a_(xi);
    for (int i = 0; i < g.numel(); ++i) dx[i] += g[i] * (1.0 - y[i] * y[i]);
  };
  return Var{out};
}

Var Tape::sigmoid_(Var x) {
  Tensor y = v_(x.id);
  for (int i = 0; i < y.numel(); ++i) y[i] = 1.0 / (1.0 + std::exp(-y[i]));
  int xi = x.id;
  int out = push(std::move(y), rg_(x.id), {});
  nodes_[out].back = [xi, out](Tape& t) {
    if (!t.has_adj_(out) || !t.rg_(xi)) return;
    const Tensor& g = t.adj_[out];
    const Tensor& y = t.v_(out);
    Tensor& dx = t.a_(xi);
    for (int i = 0; i < g.numel(); ++i) dx[i] += g[i] * y[i] * (1.0 - y[i]);
  };
  return Var{out};
}

Var Tape::relu_(Var x) {
  Tensor y = v_(x.id);
  for (int i = 0; i < y.numel(); ++i) y[i] = std::max(0.0, y[i]);
  int xi = x.id;
  int out = push(std::move(y), rg_(x.id), {});
  nodes_[out].back = [xi, out](Tape& t) {
    if (!t.has_adj_(out) || !t.rg_(xi)) return;
    const Tensor& g = t.adj_[out];
    const Tensor& X = t.v_(xi);
    Tensor& dx = t.a_(xi);
    for (int i = 0; i < g.numel(); ++i)
      if (X[i] > 0.0) dx[i] += g[i];
  };
  return Var{out};
}

Var Tape::log_(Var x) {
  Tensor y = v_(x.id);
  for (int i = 0; i < y.numel(); ++i) y[i] = std::log(y[i]);
  int xi = x.id;
  int out = push(std::move(y), rg_(x.id), {});
  nodes_[out].back = [xi, out](Tape& t) {
    if (!t.has_adj_(out) || !t.rg_(xi)) return;
    const Tensor& g = t.adj_[out];
    const Tensor& X = t.v_(xi);
    Tensor& dx = t.a_(xi);
    for (int i = 0; i < g.numel(); ++i) dx[i] += g[i] / X[i];
  };
  return Var{out};
}

Var Tape::exp_(Var x) {
  Tensor y = v_(x.id);
  for (int i = 0; i < y.numel(); ++i) y[i] = std::exp(y[i]);
  int xi = x.id;
  int out = push(std::move(y), rg_(x.id), {});
  nodes_[out].back = [xi, out](Tape& t) {
    if (!t.has_adj_(out) || !t.rg_(xi)) return;
    const Tensor& g = t.adj_[out];
    const Tensor& y = t.v_(out);
    Tensor& dx = t.a_(xi);
    for (int i = 0; i < g.numel(); ++i) dx[i] += g[i] * y[i];
  };
  return Var{out};
}

Var Tape::clamp(Var x, double lo, double hi) {
  Tensor y = v_(x.id);
  for (int i = 0; i < y.numel(); ++i) y[i] = std::min(hi, std::max(lo, y[i]));
  int xi = x.id;
  int out = push(std::move(y), rg_(x.id), {});
  nodes_[out].back = [xi, lo, hi, out](Tape& t) {
    if (!t.has_adj_(out) || !t.rg_(xi)) return;
    const Tensor& g = t.adj_[out];
    const Tensor& X = t.v_(xi);
    Tensor& dx = t.a_(xi);
    for (int i = 0; i < g.numel(); ++i)
      if (X[i] > lo && X[i] < hi) dx[i] += g[i];
  };
  return Var{out};
}

Var Tape::softmax(Var x, const std::vector<uint8_t>* mask) {
  const Tensor& X = v_(x.id);
  if (X.rank() != 1) throw ShapeError("softmax: expected vector, got " + shape_str(X.shape));
  int n = X.numel();
  std::vector<uint8_t> m(n, 1);
  if (mask) {
    if (static_cast<int>(mask->size()) != n)
      throw ShapeError("softmax: mask length " + std::to_string(mask->size()) +
                       " vs input " + shape_str(X.shape));
    m = *mask;
  }
  // max-subtraction over unmasked entries, mandatory for stability
  double mx = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i)
    if (m[i]) mx = std::max(mx, X[i]);
  if (!std::isfinite(mx)) throw ShapeError("softmax: all entries masked");
  Tensor y({n});
  double z = 0.0;
  for (int i = 0; i < n; ++i) {
    if (m[i]) {
      y[i] = std::exp(X[i] - mx);
      z += y[i];
    } else {
      y[i] = 0.0;
    }
  }
  for (int i = 0; i < n; ++i)
    if (m[i]) y[i] /= z;
  int xi = x.id;
  int out = push(std::move(y), rg_(x.id), {});
  nodes_[out].back = [xi, m, out](Tape& t) {
    if (!t.has_adj_(out) || !t.rg_(xi)) return;
    const Tensor& g = t.adj_[out];
    const Tensor& y = t.v_(out);
    double dotgy = 0.0;
    for (int i = 0; i < g.numel(); ++i)
      if (m[i]) dotgy += g[i] * y[i];
    Tensor& dx = t.a_(xi);
    for (int i = 0; i < g.numel(); ++i)
      if (m[i]) dx[i] += y[i] * (g[i] - dotgy);
  };
  return Var{out};
}

Var Tape::concat(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat: no parts");
  int total = 0;
  for (Var p : parts) {
    if (v_(p.id).rank() != 1)
      throw ShapeError("concat: expected vector, got " + shape_str(v_(p.id).shape));
    total += v_(p.id).numel();
  }
  Tensor y({total});
  bool req = false;
  std::vector<int> ids;
  ids.reserve(parts.size());
  int off = 0;
  for (Var p : parts) {
    const Tensor& P = v_(p.id);
    std::copy(P.data.begin(), P.data.end(), y.data.begin() + off);
    off += P.numel();
    req = req || rg_(p.id);
    ids.push_back(p.id);
  }
  int out = push(std::move(y), req, {});
  nodes_[out].back = [ids, out](Tape& t) {
    if (!t.has_adj_(out)) return;
    const Tensor& g = t.adj_[out];
    int off = 0;
    for (int id : ids) {
      int n = t.v_(id).numel();
      if (t.rg_(id)) {
        Tensor& d = t.a_(id);
        for (int i = 0; i < n; ++i) d[i] += g[off + i];
      }
      off += n;
    }
  };
  return Var{out};
}

Var Tape::stack_rows(std::span<const Var> rows) {
  if (rows.empty()) throw ShapeError("stack_rows: no rows");
  int d = v_(rows[0].id).numel();
  for (Var r : rows) {
    const Tensor& R = v_(r.id);
    if (R.rank() != 1 || R.numel() != d)
      throw ShapeError("stack_rows: shape mismatch " + shape_str(v_(rows[0].id).shape) +
                       " vs " + shape_str(R.shape));
  }
  int n = static_cast<int>(rows.size());
  Tensor y({n, d});
  bool req = false;
  std::vector<int> ids;
  ids.reserve(rows.size());
  for (int i = 0; i < n; ++i) {
    const Tensor& R = v_(rows[i].id);
    std::copy(R.data.begin(), R.data.end(), y.data.begin() + static_cast<size_t>(i) * d);
    req = req || rg_(rows[i].id);
    ids.push_back(rows[i].id);
  }
  int out = push(std::move(y), req, {});
  nodes_[out].back = [ids, d, out](Tape& t) {
    if (!t.has_adj_(out)) return;
    const Tensor& g = t.adj_[out];
    for (size_t i = 0; i < ids.size(); ++i) {
      if (!t.rg_(ids[i])) continue;
      Tensor& dr = t.a_(ids[i]);
      for (int j = 0; j < d; ++j) dr[j] += g.data[i * d + j];
    }
  };
  return Var{out};
}

Var Tape::mean_rows(Var m) {
  const Tensor& M = v_(m.id);
  if (M.rank() != 2) throw ShapeError("mean_rows: expected matrix, got " + shape_str(M.shape));
  int n = M.rows(), d = M.cols();
  Tensor y({d});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) y[j] += M(i, j);
  for (int j = 0; j < d; ++j) y[j] /= n;
  int mi = m.id;
  int out = push(std::move(y), rg_(m.id), {});
  nodes_[out].back = [mi, n, d, out](Tape& t) {
    if (!t.has_adj_(out) || !t.rg_(mi)) return;
    const Tensor& g = t.adj_[out];
    Tensor& dm = t.a_(mi);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < d; ++j) dm(i, j) += g[j] / n;
  };
  return Var{out};
}

Var Tape::max_over_time(Var m) {
  const Tensor& M = v_(m.id);
  if (M.rank() != 2)
    throw ShapeError("max_over_time: expected matrix, got " + shape_str(M.shape));
  int c = M.rows(), l = M.cols();
  Tensor y({c});
  std::vector<int> arg(c, 0);
  for (int i = 0; i < c; ++i) {
    double best = M(i, 0);
    int bj = 0;
    for (int j = 1; j < l; ++j)
      if (M(i, j) > best) {
        best = M(i, j);
        bj = j;
      }
    y[i] = best;
    arg[i] = bj;
  }
  int mi = m.id;
  int out = push(std::move(y), rg_(m.id), {});
  nodes_[out].back = [mi, arg, out](Tape& t) {
    if (!t.has_adj_(out) || !t.rg_(mi)) return;
    const Tensor& g = t.adj_[out];
    Tensor& dm = t.a_(mi);
    for (int i = 0; i < g.numel(); ++i) dm(i, arg[i]) += g[i];
  };
  return Var{out};
}

// Valid convolution. An input shorter than the kernel is right-padded with
// zeros up to the kernel width.
Var Tape::conv1d(Var x, Var w, Var b, int stride) {
  const Tensor& X = v_(x.id);
  const Tensor& W = v_(w.id);
  const Tensor& B = v_(b.id);
  if (X.rank() != 2 || W.rank() != 3)
    throw ShapeError("conv1d: shape mismatch " + shape_str(X.shape) + " vs " +
                     shape_str(W.shape));
  int cin = X.shape[0], l = X.shape[1];
  int cout = W.shape[0], wcin = W.shape[1], k = W.shape[2];
  if (cin != wcin)
    throw ShapeError("conv1d: input channels " + shape_str(X.shape) +
                     " vs kernel " + shape_str(W.shape));
  if (B.rank() != 1 || B.numel() != cout)
    throw ShapeError("conv1d: bias " + shape_str(B.shape) + " vs kernel " +
                     shape_str(W.shape));
  if (stride < 1) throw ShapeError("conv1d: stride must be >= 1");
  int leff = std::max(l, k);
  int lout = (leff - k) / stride + 1;
  Tensor y({cout, lout});
  auto xat = [&](int ci, int j) { return j < l ? X(ci, j) : 0.0; };
  for (int co = 0; co < cout; ++co)
    for (int t = 0; t < lout; ++t) {
      double acc = B[co];
      for (int ci = 0; ci < cin; ++ci)
        for (int j = 0; j < k; ++j)
          acc += W.data[(static_cast<size_t>(co) * cin + ci) * k + j] * xat(ci, t * stride + j);
      y(co, t) = acc;
    }
  bool req = rg_(x.id) || rg_(w.id) || rg_(b.id);
  int xi = x.id, wi = w.id, bi = b.id;
  int out = push(std::move(y), req, {});
  nodes_[out].back = [xi, wi, bi, stride, out](Tape& t) {
    if (!t.has_adj_(out)) return;
    const Tensor& g = t.adj_[out];
    const Tensor& X = t.v_(xi);
    const Tensor& W = t.v_(wi);
    int cin = X.shape[0], l = X.shape[1];
    int cout = W.shape[0], k = W.shape[2];
    int lout = g.shape[1];
    bool gx = t.rg_(xi), gw = t.rg_(wi), gb = t.rg_(bi);
    Tensor* dx = gx ? &t.a_(xi) : nullptr;
    Tensor* dw = gw ? &t.a_(wi) : nullptr;
    Tensor* db = gb ? &t.a_(bi) : nullptr;
    for (int co = 0; co < cout; ++co)
      for (int p = 0; p < lout; ++p) {
        double go = g(co, p);
        if (go == 0.0) continue;
        if (gb) (*db)[co] += go;
        for (int ci = 0; ci < cin; ++ci)
          for (int j = 0; j < k; ++j) {
            int pos = p * stride + j;
            size_t widx = (static_cast<size_t>(co) * cin + ci) * k + j;
            if (gw && pos < l) dw->data[widx] += go * X(ci, pos);
            if (gx && pos < l) (*dx)(ci, pos) += go * W.data[widx];
          }
      }
  };
  return Var{out};
}

// Windows are clipped at the right edge; an input shorter than the window
// yields a single clipped window so the output is never empty.
Var Tape::maxpool1d(Var x, int width, int stride) {
  const Tensor& X = v_(x.id);
  if (X.rank() != 2)
    throw ShapeError("maxpool1d: expected matrix, got " + shape_str(X.shape));
  if (width < 1 || stride < 1) throw ShapeError("maxpool1d: bad width/stride");
  int c = X.shape[0], l = X.shape[1];
  int lout = l >= width ? (l - width) / stride + 1 : 1;
  Tensor y({c, lout});
  std::vector<int> arg(static_cast<size_t>(c) * lout);
  for (int ci = 0; ci < c; ++ci)
    for (int p = 0; p < lout; ++p) {
      int start = p * stride;
      int end = std::min(start + width, l);
      double best = X(ci, start);
      int bj = start;
      for (int j = start + 1; j < end; ++j)
        if (X(ci, j) > best) {
          best = X(ci, j);
          bj = j;
        }
      y(ci, p) = best;
      arg[static_cast<size_t>(ci) * lout + p] = bj;
    }
  int xi = x.id;
  int out = push(std::move(y), rg_(x.id), {});
  nodes_[out].back = [xi, arg, out](Tape& t) {
    if (!t.has_adj_(out) || !t.rg_(xi)) return;
    const Tensor& g = t.adj_[out];
    int c = g.shape[0], lout = g.shape[1];
    Tensor& dx = t.a_(xi);
    for (int ci = 0; ci < c; ++ci)
      for (int p = 0; p < lout; ++p)
        dx(ci, arg[static_cast<size_t>(ci) * lout + p]) += g(ci, p);
  };
  return Var{out};
}

Var Tape::dot(Var a, Var b) {
  const Tensor& A = v_(a.id);
  const Tensor& B = v_(b.id);
  if (A.rank() != 1 || B.rank() != 1 || A.numel() != B.numel())
    throw ShapeError("dot: shape mismatch " + shape_str(A.shape) + " vs " +
                     shape_str(B.shape));
  double acc = 0.0;
  for (int i = 0; i < A.numel(); ++i) acc += A[i] * B[i];
  bool req = rg_(a.id) || rg_(b.id);
  int ai = a.id, bi = b.id;
  int out = push(Tensor::scalar(acc), req, {});
  nodes_[out].back = [ai, bi, out](Tape& t) {
    if (!t.has_adj_(out)) return;
    double g = t.adj_[out][0];
    const Tensor& A = t.v_(ai);
    const Tensor& B = t.v_(bi);
    if (t.rg_(ai)) {
      Tensor& da = t.a_(ai);
      for (int i = 0; i < A.numel(); ++i) da[i] += g * B[i];
    }
    if (t.rg_(bi)) {
      Tensor& db = t.a_(bi);
      for (int i = 0; i < A.numel(); ++i) db[i] += g * A[i];
    }
  };
  return Var{out};
}

Var Tape::embed_col(Var m, int col) {
  const Tensor& M = v_(m.id);
  if (M.rank() != 2) throw ShapeError("embed_col: expected matrix, got " + shape_str(M.shape));
  if (col < 0 || col >= M.cols())
    throw std::out_of_range("embed_col: column " + std::to_string(col) +
                            " out of range for " + shape_str(M.shape));
  int r = M.rows();
  Tensor y({r});
  for (int i = 0; i < r; ++i) y[i] = M(i, col);
  int mi = m.id;
  int out = push(std::move(y), rg_(m.id), {});
  nodes_[out].back = [mi, col, out](Tape& t) {
    if (!t.has_adj_(out) || !t.rg_(mi)) return;
    const Tensor& g = t.adj_[out];
    Tensor& dm = t.a_(mi);
    for (int i = 0; i < g.numel(); ++i) dm(i, col) += g[i];
  };
  return Var{out};
}

Var Tape::pick(Var v, int i) {
  const Tensor& X = v_(v.id);
  if (X.rank() != 1 || i < 0 || i >= X.numel())
    throw std::out_of_range("pick: index " + std::to_string(i) + " out of range for " +
                            shape_str(X.shape));
  int vi = v.id;
  int out = push(Tensor::scalar(X[i]), rg_(v.id), {});
  nodes_[out].back = [vi, i, out](Tape& t) {
    if (!t.has_adj_(out) || !t.rg_(vi)) return;
    t.a_(vi)[i] += t.adj_[out][0];
  };
  return Var{out};
}

Var Tape::slice(Var v, int start, int len) {
  const Tensor& X = v_(v.id);
  if (X.rank() != 1 || start < 0 || len < 1 || start + len > X.numel())
    throw std::out_of_range("slice: [" + std::to_string(start) + "," +
                            std::to_string(start + len) + ") out of range for " +
                            shape_str(X.shape));
  Tensor y({len});
  for (int i = 0; i < len; ++i) y[i] = X[start + i];
  int vi = v.id;
  int out = push(std::move(y), rg_(v.id), {});
  nodes_[out].back = [vi, start, len, out](Tape& t) {
    if (!t.has_adj_(out) || !t.rg_(vi)) return;
    const Tensor& g = t.adj_[out];
    Tensor& dv = t.a_(vi);
    for (int i = 0; i < len; ++i) dv[start + i] += g[i];
  };
  return Var{out};
}

Var Tape::sum(Var x) {
  const Tensor& X = v_(x.id);
  double acc = 0.0;
  for (int i = 0; i < X.numel(); ++i) acc += X[i];
  int xi = x.id;
  int out = push(Tensor::scalar(acc), rg_(x.id), {});
  nodes_[out].back = [xi, out](Tape& t) {
    if (!t.has_adj_(out) || !t.rg_(xi)) return;
    double g = t.adj_[out][0];
    Tensor& dx = t.a_(xi);
    for (int i = 0; i < dx.numel(); ++i) dx[i] += g;
  };
  return Var{out};
}

void Tape::backward(Var loss) {
  if (!loss.valid() || loss.id >= static_cast<int>(nodes_.size()))
    throw std::out_of_range("backward: invalid loss node");
  if (nodes_[loss.id].value.numel() != 1)
    throw ShapeError("backward: loss node is not scalar, shape " +
                     shape_str(nodes_[loss.id].value.shape));
  adj_.assign(nodes_.size(), Tensor{});
  a_(loss.id)[0] = 1.0;
  for (int id = loss.id; id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.needs_grad || !has_adj_(id)) continue;
    if (n.back) n.back(*this);
    if (n.bound) {
      const Tensor& g = adj_[id];
      for (int i = 0; i < g.numel(); ++i) n.bound->grad[i] += g[i];
    }
  }
  adj_.clear();
}

}  // namespace tghoa
