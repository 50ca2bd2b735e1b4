#include "steer/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "steer/kernels.hpp"

namespace steer::ad {

namespace {
const kern::Ops& K() { return kern::ops(); }

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.rows != b.rows || a.cols != b.cols)
    throw std::invalid_argument(std::string(op) + ": shape mismatch");
}
}  // namespace

Var Tape::push(Tensor val, bool needs_grad, std::function<void(Tape&)> back) {
  Node n;
  n.val = std::move(val);
  if (needs_grad) n.grad = Tensor(n.val.rows, n.val.cols);
  n.back = std::move(back);
  n.needs_grad = needs_grad;
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::constant(Tensor t) { return push(std::move(t), false, {}); }

Var Tape::param(const Tensor& t) { return push(t, true, {}); }

Var Tape::param(std::span<const double> flat, int rows, int cols) {
  if (static_cast<std::size_t>(rows) * cols != flat.size())
    throw std::invalid_argument("param: size mismatch");
  Tensor t(rows, cols);
  std::copy(flat.begin(), flat.end(), t.v.begin());
  return push(std::move(t), true, {});
}

Var Tape::matmul(Var a, Var b, bool trans_a, bool trans_b) {
  const Tensor& A = val(a);
  const Tensor& B = val(b);
  const int m = trans_a ? A.cols : A.rows;
  const int kk = trans_a ? A.rows : A.cols;
  const int kb = trans_b ? B.cols : B.rows;
  const int n = trans_b ? B.rows : B.cols;
  if (kk != kb) throw std::invalid_argument("matmul: inner dim mismatch");
  Tensor out(m, n);
  K().gemm(trans_a, trans_b, m, n, kk, 1.0, A.v.data(), A.cols, B.v.data(),
           B.cols, 0.0, out.v.data(), n);
  const bool ng = tracked(a) || tracked(b);
  if (!ng) return push(std::move(out), false, {});
  Var o = push(std::move(out), true, {});
  nodes_[o.id].back = [a, b, o, trans_a, trans_b](Tape& t) {
    const Tensor& A = t.val(a);
    const Tensor& B = t.val(b);
    const Tensor& G = t.grad(o);  // m x n
    // dA and dB for C = op(A) op(B):
    //   A untransposed: dA = G op(B)^T ; A transposed: dA = op(B) G^T
    //   B untransposed: dB = op(A)^T G ; B transposed: dB = G^T op(A)
    if (t.tracked(a)) {
      Tensor& GA = t.grad_mut(a);
      if (!trans_a) {
        // (m x k) += G (m x n) * op(B)^T (n x k)
        K().gemm(false, !trans_b, A.rows, A.cols, G.cols, 1.0, G.v.data(),
                 G.cols, B.v.data(), B.cols, 1.0, GA.v.data(), GA.cols);
      } else {
        // stored A is k x m; dA_stored = op(B) (k x n... ) careful:
        // C = A^T B', so dA_stored = op(B) G^T with shapes (k x n)(n x m)
        K().gemm(trans_b, true, A.rows, A.cols, G.cols, 1.0, B.v.data(),
                 B.cols, G.v.data(), G.cols, 1.0, GA.v.data(), GA.cols);
      }
    }
    if (t.tracked(b)) {
      Tensor& GB = t.grad_mut(b);
      if (!trans_b) {
        // dB_stored (k x n) = op(A)^T (k x m) G (m x n)
        K().gemm(!trans_a, false, B.rows, B.cols, G.rows, 1.0, A.v.data(),
                 A.cols, G.v.data(), G.cols, 1.0, GB.v.data(), GB.cols);
      } else {
        // stored B is n x k; dB_stored = G^T op(A) with shapes (n x m)(m x k)
        K().gemm(true, trans_a, B.rows, B.cols, G.rows, 1.0, G.v.data(),
                 G.cols, A.v.data(), A.cols, 1.0, GB.v.data(), GB.cols);
      }
    }
  };
  return o;
}

void Tape::backward(Var loss) {
  const int root = check(loss);
  if (nodes_[root].val.size() != 1)
    throw std::invalid_argument("backward: loss must be scalar");
  for (auto& n : nodes_)
    if (n.needs_grad) std::fill(n.grad.v.begin(), n.grad.v.end(), 0.0);
  if (!nodes_[root].needs_grad) return;
  nodes_[root].grad.v[0] = 1.0;
  for (int i = root; i >= 0; --i) {
    if (nodes_[i].back && nodes_[i].needs_grad) nodes_[i].back(*this);
  }
}

Var Tape::binary_elementwise(Var a, Var b, int kind) {
  const Tensor& A = val(a);
  const Tensor& B = val(b);
  check_same_shape(A, B, "elementwise");
  Tensor out(A.rows, A.cols);
  const std::size_t n = out.size();
  switch (kind) {
    case 0: K().add(out.v.data(), A.v.data(), B.v.data(), n); break;
    case 1: K().sub(out.v.data(), A.v.data(), B.v.data(), n); break;
    case 2: K().mul(out.v.data(), A.v.data(), B.v.data(), n); break;
    case 3: K().div(out.v.data(), A.v.data(), B.v.data(), n); break;
    default: throw std::logic_error("bad kind");
  }
  const bool ng = tracked(a) || tracked(b);
  if (!ng) return push(std::move(out), false, {});
  Var o = push(std::move(out), true, {});
  nodes_[o.id].back = [a, b, o, kind](Tape& t) {
    const Tensor& g = t.grad(o);
    const std::size_t n = g.size();
    if (kind == 0 || kind == 1) {
      if (t.tracked(a)) K().add(t.grad_mut(a).v.data(), t.grad(a).v.data(), g.v.data(), n);
      if (t.tracked(b)) {
        Tensor& gb = t.grad_mut(b);
        if (kind == 0)
          K().add(gb.v.data(), gb.v.data(), g.v.data(), n);
        else
          K().sub(gb.v.data(), gb.v.data(), g.v.data(), n);
      }
    } else if (kind == 2) {
      if (t.tracked(a)) {
        Tensor tmp(g.rows, g.cols);
        K().mul(tmp.v.data(), g.v.data(), t.val(b).v.data(), n);
        K().add(t.grad_mut(a).v.data(), t.grad(a).v.data(), tmp.v.data(), n);
      }
      if (t.tracked(b)) {
        Tensor tmp(g.rows, g.cols);
        K().mul(tmp.v.data(), g.v.data(), t.val(a).v.data(), n);
        K().add(t.grad_mut(b).v.data(), t.grad(b).v.data(), tmp.v.data(), n);
      }
    } else {  // div: o = a / b
      if (t.tracked(a)) {
        Tensor tmp(g.rows, g.cols);
        K().div(tmp.v.data(), g.v.data(), t.val(b).v.data(), n);
        K().add(t.grad_mut(a).v.data(), t.grad(a).v.data(), tmp.v.data(), n);
      }
      if (t.tracked(b)) {
        Tensor tmp(g.rows, g.cols);
        K().mul(tmp.v.data(), g.v.data(), t.val(o).v.data(), n);  // g*o = g*a/b
        K().div(tmp.v.data(), tmp.v.data(), t.val(b).v.data(), n);
        Tensor& gb = t.grad_mut(b);
        K().sub(gb.v.data(), gb.v.data(), tmp.v.data(), n);
      }
    }
  };
  return o;
}

Var Tape::add(Var a, Var b) { return binary_elementwise(a, b, 0); }
Var Tape::sub(Var a, Var b) { return binary_elementwise(a, b, 1); }
Var Tape::mul(Var a, Var b) { return binary_elementwise(a, b, 2); }
Var Tape::div(Var a, Var b) { return binary_elementwise(a, b, 3); }

Var Tape::neg(Var a) { return scale(a, -1.0); }

Var Tape::scale(Var a, double c) {
  const Tensor& A = val(a);
  Tensor out(A.rows, A.cols);
  K().scale(out.v.data(), A.v.data(), c, out.size());
  if (!tracked(a)) return push(std::move(out), false, {});
  Var o = push(std::move(out), true, {});
  nodes_[o.id].back = [a, o, c](Tape& t) {
    K().axpy(t.grad_mut(a).v.data(), c, t.grad(o).v.data(), t.grad(o).size());
  };
  return o;
}

Var Tape::add_const(Var a, double c) {
  const Tensor& A = val(a);
  Tensor out = A;
  for (auto& x : out.v) x += c;
  if (!tracked(a)) return push(std::move(out), false, {});
  Var o = push(std::move(out), true, {});
  nodes_[o.id].back = [a, o](Tape& t) {
    K().add(t.grad_mut(a).v.data(), t.grad(a).v.data(), t.grad(o).v.data(),
            t.grad(o).size());
  };
  return o;
}

Var Tape::exp(Var a) {
  const Tensor& A = val(a);
  Tensor out(A.rows, A.cols);
  K().vexp(out.v.data(), A.v.data(), out.size());
  if (!tracked(a)) return push(std::move(out), false, {});
  Var o = push(std::move(out), true, {});
  nodes_[o.id].back = [a, o](Tape& t) {
    const std::size_t n = t.grad(o).size();
    Tensor tmp(t.grad(o).rows, t.grad(o).cols);
    K().mul(tmp.v.data(), t.grad(o).v.data(), t.val(o).v.data(), n);
    K().add(t.grad_mut(a).v.data(), t.grad(a).v.data(), tmp.v.data(), n);
  };
  return o;
}

Var Tape::log(Var a) {
  const Tensor& A = val(a);
  Tensor out(A.rows, A.cols);
  for (std::size_t i = 0; i < out.size(); ++i) out.v[i] = std::log(A.v[i]);
  if (!tracked(a)) return push(std::move(out), false, {});
  Var o = push(std::move(out), true, {});
  nodes_[o.id].back = [a, o](Tape& t) {
    const std::size_t n = t.grad(o).size();
    Tensor tmp(t.grad(o).rows, t.grad(o).cols);
    K().div(tmp.v.data(), t.grad(o).v.data(), t.val(a).v.data(), n);
    K().add(t.grad_mut(a).v.data(), t.grad(a).v.data(), tmp.v.data(), n);
  };
  return o;
}

Var Tape::sqrt(Var a) {
  const Tensor& A = val(a);
  Tensor out(A.rows, A.cols);
  for (std::size_t i = 0; i < out.size(); ++i) out.v[i] = std::sqrt(A.v[i]);
  if (!tracked(a)) return push(std::move(out), false, {});
  Var o = push(std::move(out), true, {});
  nodes_[o.id].back = [a, o](Tape& t) {
    const std::size_t n = t.grad(o).size();
    const Tensor& g = t.grad(o);
    Tensor& ga = t.grad_mut(a);
    const Tensor& ov = t.val(o);
    for (std::size_t i = 0; i < n; ++i) ga.v[i] += 0.5 * g.v[i] / ov.v[i];
  };
  return o;
}

Var Tape::square(Var a) {
  const Tensor& A = val(a);
  Tensor out(A.rows, A.cols);
  K().mul(out.v.data(), A.v.data(), A.v.data(), out.size());
  if (!tracked(a)) return push(std::move(out), false, {});
  Var o = push(std::move(out), true, {});
  nodes_[o.id].back = [a, o](Tape& t) {
    const std::size_t n = t.grad(o).size();
    Tensor tmp(t.grad(o).rows, t.grad(o).cols);
    K().mul(tmp.v.data(), t.grad(o).v.data(), t.val(a).v.data(), n);
    K().axpy(t.grad_mut(a).v.data(), 2.0, tmp.v.data(), n);
  };
  return o;
}

Var Tape::elu(Var a) {
  const Tensor& A = val(a);
  Tensor out(A.rows, A.cols);
  K().velu(out.v.data(), A.v.data(), out.size());
  if (!tracked(a)) return push(std::move(out), false, {});
  Var o = push(std::move(out), true, {});
  nodes_[o.id].back = [a, o](Tape& t) {
    const std::size_t n = t.grad(o).size();
    Tensor tmp(t.grad(o).rows, t.grad(o).cols);
    K().velu_bwd(tmp.v.data(), t.val(a).v.data(), t.grad(o).v.data(), n);
    K().add(t.grad_mut(a).v.data(), t.grad(a).v.data(), tmp.v.data(), n);
  };
  return o;
}

Var Tape::sigmoid(Var a) {
  const Tensor& A = val(a);
  Tensor out(A.rows, A.cols);
  K().vsigmoid(out.v.data(), A.v.data(), out.size());
  if (!tracked(a)) return push(std::move(out), false, {});
  Var o = push(std::move(out), true, {});
  nodes_[o.id].back = [a, o](Tape& t) {
    const std::size_t n = t.grad(o).size();
    Tensor tmp(t.grad(o).rows, t.grad(o).cols);
    K().vsigmoid_bwd(tmp.v.data(), t.val(o).v.data(), t.grad(o).v.data(), n);
    K().add(t.grad_mut(a).v.data(), t.grad(a).v.data(), tmp.v.data(), n);
  };
  return o;
}

Var Tape::add_rowvec(Var mat, Var row) {
  const Tensor& A = val(mat);
  const Tensor& R = val(row);
  if (R.rows != 1 || R.cols != A.cols)
    throw std::invalid_argument("add_rowvec: shape mismatch");
  Tensor out = A;
  for (int i = 0; i < A.rows; ++i)
    K().add(&out.at(i, 0), &out.at(i, 0), R.v.data(), A.cols);
  const bool ng = tracked(mat) || tracked(row);
  if (!ng) return push(std::move(out), false, {});
  Var o = push(std::move(out), true, {});
  nodes_[o.id].back = [mat, row, o](Tape& t) {
    const Tensor& g = t.grad(o);
    if (t.tracked(mat))
      K().add(t.grad_mut(mat).v.data(), t.grad(mat).v.data(), g.v.data(), g.size());
    if (t.tracked(row)) {
      Tensor& gr = t.grad_mut(row);
      for (int i = 0; i < g.rows; ++i)
        K().add(gr.v.data(), gr.v.data(), &g.v[static_cast<std::size_t>(i) * g.cols],
                g.cols);
    }
  };
  return o;
}

Var Tape::mul_colvec(Var mat, Var col) {
  const Tensor& A = val(mat);
  const Tensor& C = val(col);
  if (C.cols != 1 || C.rows != A.rows)
    throw std::invalid_argument("mul_colvec: shape mismatch");
  Tensor out(A.rows, A.cols);
  for (int i = 0; i < A.rows; ++i)
    K().scale(&out.at(i, 0), &A.at(i, 0), C.v[i], A.cols);
  const bool ng = tracked(mat) || tracked(col);
  if (!ng) return push(std::move(out), false, {});
  Var o = push(std::move(out), true, {});
  nodes_[o.id].back = [mat, col, o](Tape& t) {
    const Tensor& g = t.grad(o);
    const Tensor& A = t.val(mat);
    const Tensor& C = t.val(col);
    if (t.tracked(mat)) {
      Tensor& gm = t.grad_mut(mat);
      for (int i = 0; i < g.rows; ++i)
        K().axpy(&gm.at(i, 0), C.v[i], &g.v[static_cast<std::size_t>(i) * g.cols],
                 g.cols);
    }
    if (t.tracked(col)) {
      Tensor& gc = t.grad_mut(col);
      for (int i = 0; i < g.rows; ++i)
        gc.v[i] += K().dot(&g.v[static_cast<std::size_t>(i) * g.cols],
                           &A.v[static_cast<std::size_t>(i) * A.cols], A.cols);
    }
  };
  return o;
}

Var Tape::mul_scalar(Var a, Var s) {
  const Tensor& A = val(a);
  if (val(s).size() != 1) throw std::invalid_argument("mul_scalar: s not scalar");
  Tensor out(A.rows, A.cols);
  K().scale(out.v.data(), A.v.data(), val(s).v[0], out.size());
  const bool ng = tracked(a) || tracked(s);
  if (!ng) return push(std::move(out), false, {});
  Var o = push(std::move(out), true, {});
  nodes_[o.id].back = [a, s, o](Tape& t) {
    const Tensor& g = t.grad(o);
    if (t.tracked(a))
      K().axpy(t.grad_mut(a).v.data(), t.val(s).v[0], g.v.data(), g.size());
    if (t.tracked(s))
      t.grad_mut(s).v[0] += K().dot(g.v.data(), t.val(a).v.data(), g.size());
  };
  return o;
}

Var Tape::div_scalar(Var a, Var s) {
  const Tensor& A = val(a);
  if (val(s).size() != 1) throw std::invalid_argument("div_scalar: s not scalar");
  const double sv = val(s).v[0];
  Tensor out(A.rows, A.cols);
  K().scale(out.v.data(), A.v.data(), 1.0 / sv, out.size());
  const bool ng = tracked(a) || tracked(s);
  if (!ng) return push(std::move(out), false, {});
  Var o = push(std::move(out), true, {});
  nodes_[o.id].back = [a, s, o](Tape& t) {
    const Tensor& g = t.grad(o);
    const double sv = t.val(s).v[0];
    if (t.tracked(a))
      K().axpy(t.grad_mut(a).v.data(), 1.0 / sv, g.v.data(), g.size());
    if (t.tracked(s))
      t.grad_mut(s).v[0] -=
          K().dot(g.v.data(), t.val(o).v.data(), g.size()) / sv;
  };
  return o;
}

Var Tape::add_scalar(Var a, Var s) {
  const Tensor& A = val(a);
  if (val(s).size() != 1) throw std::invalid_argument("add_scalar: s not scalar");
  Tensor out = A;
  const double sv = val(s).v[0];
  for (auto& x : out.v) x += sv;
  const bool ng = tracked(a) || tracked(s);
  if (!ng) return push(std::move(out), false, {});
  Var o = push(std::move(out), true, {});
  nodes_[o.id].back = [a, s, o](Tape& t) {
    const Tensor& g = t.grad(o);
    if (t.tracked(a))
      K().add(t.grad_mut(a).v.data(), t.grad(a).v.data(), g.v.data(), g.size());
    if (t.tracked(s)) t.grad_mut(s).v[0] += K().sum(g.v.data(), g.size());
  };
  return o;
}

Var Tape::sub_scalar(Var a, Var s) {
  Var ns = scale(s, -1.0);
  return add_scalar(a, ns);
}

Var Tape::sum_all(Var a) {
  Tensor out = Tensor::scalar(K().sum(val(a).v.data(), val(a).size()));
  if (!tracked(a)) return push(std::move(out), false, {});
  Var o = push(std::move(out), true, {});
  nodes_[o.id].back = [a, o](Tape& t) {
    const double g = t.grad(o).v[0];
    Tensor& ga = t.grad_mut(a);
    for (auto& x : ga.v) x += g;
  };
  return o;
}

Var Tape::mean_all(Var a) {
  const double n = static_cast<double>(val(a).size());
  Var s = sum_all(a);
  return scale(s, 1.0 / n);
}

Var Tape::max_all(Var a) {
  const Tensor& A = val(a);
  std::size_t arg = 0;
  for (std::size_t i = 1; i < A.size(); ++i)
    if (A.v[i] > A.v[arg]) arg = i;
  Tensor out = Tensor::scalar(A.v[arg]);
  if (!tracked(a)) return push(std::move(out), false, {});
  Var o = push(std::move(out), true, {});
  nodes_[o.id].back = [a, o, arg](Tape& t) {
    t.grad_mut(a).v[arg] += t.grad(o).v[0];
  };
  return o;
}

Var Tape::dot(Var a, Var b) {
  const Tensor& A = val(a);
  const Tensor& B = val(b);
  if (A.size() != B.size()) throw std::invalid_argument("dot: size mismatch");
  Tensor out = Tensor::scalar(K().dot(A.v.data(), B.v.data(), A.size()));
  const bool ng = tracked(a) || tracked(b);
  if (!ng) return push(std::move(out), false, {});
  Var o = push(std::move(out), true, {});
  nodes_[o.id].back = [a, b, o](Tape& t) {
    const double g = t.grad(o).v[0];
    if (t.tracked(a))
      K().axpy(t.grad_mut(a).v.data(), g, t.val(b).v.data(), t.val(b).size());
    if (t.tracked(b))
      K().axpy(t.grad_mut(b).v.data(), g, t.val(a).v.data(), t.val(a).size());
  };
  return o;
}

Var Tape::sum_cols(Var a) {
  const Tensor& A = val(a);
  Tensor out(A.rows, 1);
  for (int i = 0; i < A.rows; ++i)
    out.v[i] = K().sum(&A.v[static_cast<std::size_t>(i) * A.cols], A.cols);
  if (!tracked(a)) return push(std::move(out), false, {});
  Var o = push(std::move(out), true, {});
  nodes_[o.id].back = [a, o](Tape& t) {
    const Tensor& g = t.grad(o);
    Tensor& ga = t.grad_mut(a);
    for (int i = 0; i < ga.rows; ++i) {
      double* row = &ga.v[static_cast<std::size_t>(i) * ga.cols];
      for (int j = 0; j < ga.cols; ++j) row[j] += g.v[i];
    }
  };
  return o;
}

Var Tape::slice_cols(Var a, int c0, int c1) {
  const Tensor& A = val(a);
  if (c0 < 0 || c1 > A.cols || c0 >= c1)
    throw std::invalid_argument("slice_cols: bad range");
  Tensor out(A.rows, c1 - c0);
  for (int i = 0; i < A.rows; ++i)
    std::memcpy(&out.at(i, 0), &A.at(i, c0), sizeof(double) * (c1 - c0));
  if (!tracked(a)) return push(std::move(out), false, {});
  Var o = push(std::move(out), true, {});
  nodes_[o.id].back = [a, o, c0](Tape& t) {
    const Tensor& g = t.grad(o);
    Tensor& ga = t.grad_mut(a);
    for (int i = 0; i < g.rows; ++i)
      K().add(&ga.at(i, c0), &ga.at(i, c0), &g.v[static_cast<std::size_t>(i) * g.cols],
              g.cols);
  };
  return o;
}

Var Tape::concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: empty");
  const int rows = val(parts[0]).rows;
  int cols = 0;
  bool ng = false;
  for (Var p : parts) {
    if (val(p).rows != rows) throw std::invalid_argument("concat_cols: rows differ");
    cols += val(p).cols;
    ng = ng || tracked(p);
  }
  Tensor out(rows, cols);
  int off = 0;
  for (Var p : parts) {
    const Tensor& P = val(p);
    for (int i = 0; i < rows; ++i)
      std::memcpy(&out.at(i, off), &P.at(i, 0), sizeof(double) * P.cols);
    off += P.cols;
  }
  if (!ng) return push(std::move(out), false, {});
  Var o = push(std::move(out), true, {});
  std::vector<Var> ps = parts;
  nodes_[o.id].back = [ps, o](Tape& t) {
    const Tensor& g = t.grad(o);
    int off = 0;
    for (Var p : ps) {
      const int pc = t.val(p).cols;
      if (t.tracked(p)) {
        Tensor& gp = t.grad_mut(p);
        for (int i = 0; i < g.rows; ++i)
          K().add(&gp.at(i, 0), &gp.at(i, 0), &g.at(i, off), pc);
      }
      off += pc;
    }
  };
  return o;
}

Var Tape::concat_flat(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_flat: empty");
  std::size_t total = 0;
  bool ng = false;
  for (Var p : parts) {
    total += val(p).size();
    ng = ng || tracked(p);
  }
  Tensor out(static_cast<int>(total), 1);
  std::size_t off = 0;
  for (Var p : parts) {
    const Tensor& P = val(p);
    std::memcpy(out.v.data() + off, P.v.data(), sizeof(double) * P.size());
    off += P.size();
  }
  if (!ng) return push(std::move(out), false, {});
  Var o = push(std::move(out), true, {});
  std::vector<Var> ps = parts;
  nodes_[o.id].back = [ps, o](Tape& t) {
    const Tensor& g = t.grad(o);
    std::size_t off = 0;
    for (Var p : ps) {
      const std::size_t n = t.val(p).size();
      if (t.tracked(p))
        K().add(t.grad_mut(p).v.data(), t.grad(p).v.data(), g.v.data() + off, n);
      off += n;
    }
  };
  return o;
}

Var Tape::gather(Var a, const std::vector<int>& idx, int rows, int cols) {
  if (static_cast<std::size_t>(rows) * cols != idx.size())
    throw std::invalid_argument("gather: shape/index mismatch");
  const Tensor& A = val(a);
  Tensor out(rows, cols);
  for (std::size_t i = 0; i < idx.size(); ++i) out.v[i] = A.v.at(idx[i]);
  if (!tracked(a)) return push(std::move(out), false, {});
  Var o = push(std::move(out), true, {});
  std::vector<int> ix = idx;
  nodes_[o.id].back = [a, o, ix](Tape& t) {
    const Tensor& g = t.grad(o);
    Tensor& ga = t.grad_mut(a);
    for (std::size_t i = 0; i < ix.size(); ++i) ga.v[ix[i]] += g.v[i];
  };
  return o;
}

Var Tape::reshape(Var a, int rows, int cols) {
  const Tensor& A = val(a);
  if (static_cast<std::size_t>(rows) * cols != A.size())
    throw std::invalid_argument("reshape: size mismatch");
  Tensor out = A;
  out.rows = rows;
  out.cols = cols;
  if (!tracked(a)) return push(std::move(out), false, {});
  Var o = push(std::move(out), true, {});
  nodes_[o.id].back = [a, o](Tape& t) {
    K().add(t.grad_mut(a).v.data(), t.grad(a).v.data(), t.grad(o).v.data(),
            t.grad(o).size());
  };
  return o;
}

Var Tape::detach(Var a) { return constant(val(a)); }

double gradcheck(const std::function<double(std::span<const double>, std::vector<double>*)>& f,
                 std::vector<double> x, double step) {
  std::vector<double> analytic(x.size(), 0.0);
  f(x, &analytic);
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double x0 = x[i];
    x[i] = x0 + step;
    const double fp = f(x, nullptr);
    x[i] = x0 - step;
    const double fm = f(x, nullptr);
    x[i] = x0;
    const double num = (fp - fm) / (2 * step);
    // the denominator floor keeps central-difference rounding noise around
    // truly-zero gradients from registering as relative error
    const double den = std::max({std::abs(num), std::abs(analytic[i]), 1e-6});
    worst = std::max(worst, std::abs(num - analytic[i]) / den);
  }
  return worst;
}

}  // namespace steer::ad
