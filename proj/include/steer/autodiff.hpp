#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

// Minimal reverse-mode autodiff over dense row-major double tensors.
// A Tape owns all node storage; ops evaluate eagerly (define-by-run) and
// record a backward closure. Graphs are rebuilt every step, which keeps
// parameter updates and control flow trivial.

namespace steer::ad {

struct Tensor {
  int rows = 0, cols = 0;
  std::vector<double> v;

  Tensor() = default;
  Tensor(int r, int c) : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, 0.0) {}
  static Tensor scalar(double x) {
    Tensor t(1, 1);
    t.v[0] = x;
    return t;
  }
  std::size_t size() const { return v.size(); }
  double& at(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
  const double& at(int r, int c) const {
    return v[static_cast<std::size_t>(r) * cols + c];
  }
};

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

class Tape {
 public:
  Var constant(Tensor t);
  Var constant_scalar(double x) { return constant(Tensor::scalar(x)); }
  // Leaf with gradient tracking; values copied in.
  Var param(const Tensor& t);
  Var param(std::span<const double> flat, int rows, int cols);

  const Tensor& val(Var v) const { return nodes_[check(v)].val; }
  const Tensor& grad(Var v) const { return nodes_[check(v)].grad; }
  double scalar(Var v) const { return val(v).v.at(0); }

  // ---- ops -----------------------------------------------------------
  Var matmul(Var a, Var b, bool trans_a = false, bool trans_b = false);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var div(Var a, Var b);
  Var neg(Var a);
  Var exp(Var a);
  Var log(Var a);
  Var sqrt(Var a);
  Var square(Var a);
  Var elu(Var a);
  Var sigmoid(Var a);
  Var scale(Var a, double c);
  Var add_const(Var a, double c);
  Var add_rowvec(Var mat, Var row);   // mat + broadcast row (1 x cols)
  Var mul_colvec(Var mat, Var col);   // mat * broadcast column (rows x 1)
  Var mul_scalar(Var a, Var s);       // a * broadcast scalar (1 x 1)
  Var div_scalar(Var a, Var s);
  Var add_scalar(Var a, Var s);
  Var sub_scalar(Var a, Var s);
  Var sum_all(Var a);
  Var mean_all(Var a);
  Var max_all(Var a);  // subgradient routed to first argmax
  Var dot(Var a, Var b);
  Var sum_cols(Var a);  // per-row sum over columns -> rows x 1
  Var slice_cols(Var a, int c0, int c1);
  Var concat_cols(const std::vector<Var>& parts);
  // Flattens all parts (row-major) into one column vector, in order.
  Var concat_flat(const std::vector<Var>& parts);
  // out.v[i] = a.v[idx[i]]; every idx entry must be a valid flat index.
  Var gather(Var a, const std::vector<int>& idx, int rows, int cols);
  Var reshape(Var a, int rows, int cols);
  // Detached copy: value flows, gradient does not.
  Var detach(Var a);

  void backward(Var loss);

  std::size_t num_nodes() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor val;
    Tensor grad;
    std::function<void(Tape&)> back;  // empty for leaves/constants
    bool needs_grad = false;
  };

  int check(Var v) const {
    if (!v.valid() || v.id >= static_cast<int>(nodes_.size()))
      throw std::logic_error("invalid Var");
    return v.id;
  }
  Var push(Tensor val, bool needs_grad, std::function<void(Tape&)> back);
  Tensor& grad_mut(Var v) { return nodes_[check(v)].grad; }
  bool tracked(Var v) const { return nodes_[check(v)].needs_grad; }

  Var binary_elementwise(Var a, Var b, int kind);

  std::vector<Node> nodes_;

  friend struct TapeAccess;
};

// Central-difference gradient check helper: f maps parameter vector to a
// scalar; returns max relative error across coordinates.
double gradcheck(const std::function<double(std::span<const double>, std::vector<double>*)>& f,
                 std::vector<double> x, double step = 1e-5);

}  // namespace steer::ad
