#include "steer/irreps.hpp"

#include <cmath>
#include <stdexcept>

namespace steer {

namespace {

MatrixXd rot2(double a) {
  MatrixXd m(2, 2);
  m << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
  return m;
}

bool is_half_n_irrep(const GroupDescriptor& g, int freq) {
  return g.finite() && g.n % 2 == 0 && freq == g.n / 2;
}

}  // namespace

bool irrep_valid(const GroupDescriptor& g, const IrrepId& id) {
  if (id.freq < 0) return false;
  if (id.flip != 0 && id.flip != 1) return false;
  switch (g.kind) {
    case GroupKind::SO2:
      return id.flip == 0;
    case GroupKind::O2:
      // psi_{0,k} with k > 0 do not exist
      return id.flip == 1 || id.freq == 0;
    case GroupKind::CN:
      return id.flip == 0 && id.freq <= g.n / 2;
    case GroupKind::DN:
      if (id.freq > g.n / 2) return false;
      if (id.flip == 0)
        return id.freq == 0 || is_half_n_irrep(g, id.freq);
      return true;
  }
  return false;
}

Irrep irrep_info(const GroupDescriptor& g, const IrrepId& id) {
  if (!irrep_valid(g, id))
    throw std::invalid_argument("invalid irrep " + id.str() + " for " + g.name());
  Irrep ir;
  ir.id = id;
  const bool one_dim =
      id.freq == 0 || is_half_n_irrep(g, id.freq);
  ir.dim = one_dim ? 1 : 2;
  const bool rotation_only = !g.has_reflections();
  ir.endo_mult = (!one_dim && rotation_only) ? 2 : 1;
  ir.n_cols = ir.dim / ir.endo_mult;
  return ir;
}

std::vector<Irrep> irreps_up_to(const GroupDescriptor& g, int max_freq) {
  if (max_freq < 0) throw std::invalid_argument("irreps_up_to: max_freq >= 0");
  const int cap = std::min(max_freq, g.max_frequency());
  std::vector<Irrep> out;
  const int flips = g.has_reflections() ? 2 : 1;
  for (int flip = 0; flip < flips; ++flip)
    for (int k = 0; k <= cap; ++k)
      if (irrep_valid(g, {flip, k})) out.push_back(irrep_info(g, {flip, k}));
  return out;
}

MatrixXd irrep_matrix(const GroupDescriptor& g, const IrrepId& id,
                      const GroupElement& e) {
  const Irrep ir = irrep_info(g, id);
  if (!element_valid(g, e))
    throw std::invalid_argument("irrep_matrix: invalid element for " + g.name());
  const double sgn_flip = (id.flip == 1 && e.reflect) ? -1.0 : 1.0;
  if (ir.dim == 1) {
    MatrixXd m(1, 1);
    // freq is 0 or N/2; cos(k theta) is exactly +-1 on the grid
    const double c = id.freq == 0 ? 1.0 : std::cos(id.freq * e.theta);
    m(0, 0) = sgn_flip * (id.freq == 0 ? 1.0 : (c >= 0 ? 1.0 : -1.0));
    return m;
  }
  // reflection factor diag(1,-1) applied before the rotation block
  MatrixXd m = rot2(id.freq * e.theta);
  if (e.reflect) m.col(1) *= -1.0;
  return m;
}

std::vector<MatrixXd> endomorphism_basis(const GroupDescriptor& g,
                                         const IrrepId& id) {
  const Irrep ir = irrep_info(g, id);
  std::vector<MatrixXd> basis;
  basis.push_back(MatrixXd::Identity(ir.dim, ir.dim));
  if (ir.endo_mult == 2) {
    MatrixXd j(2, 2);
    j << 0, -1, 1, 0;
    basis.push_back(j);
  }
  return basis;
}

MatrixXd expand_columns(const GroupDescriptor& g, const IrrepId& id,
                        const MatrixXd& reduced) {
  const Irrep ir = irrep_info(g, id);
  if (reduced.rows() != ir.dim || reduced.cols() != ir.n_cols)
    throw std::invalid_argument("expand_columns: expected " +
                                std::to_string(ir.dim) + "x" +
                                std::to_string(ir.n_cols));
  const auto basis = endomorphism_basis(g, id);
  MatrixXd full(ir.dim, ir.dim);
  for (int r = 0; r < ir.endo_mult; ++r)
    full.block(0, r * ir.n_cols, ir.dim, ir.n_cols) = basis[r] * reduced;
  return full;
}

MatrixXd reduce_columns(const GroupDescriptor& g, const IrrepId& id,
                        const MatrixXd& full) {
  const Irrep ir = irrep_info(g, id);
  if (full.rows() != ir.dim || full.cols() != ir.dim)
    throw std::invalid_argument("reduce_columns: expected square d x d");
  const auto basis = endomorphism_basis(g, id);
  MatrixXd reduced = MatrixXd::Zero(ir.dim, ir.n_cols);
  for (int r = 0; r < ir.endo_mult; ++r)
    reduced += basis[r].transpose() *
               full.block(0, r * ir.n_cols, ir.dim, ir.n_cols);
  return reduced / ir.endo_mult;
}

MatrixXd kron(const MatrixXd& a, const MatrixXd& b) {
  MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

int FieldType::dim() const {
  int d = 0;
  for (const auto& [id, mult] : entries)
    d += mult * irrep_info(group, id).dim;
  return d;
}

std::vector<IrrepId> FieldType::copies() const {
  std::vector<IrrepId> out;
  for (const auto& [id, mult] : entries)
    for (int i = 0; i < mult; ++i) out.push_back(id);
  return out;
}

MatrixXd direct_sum_matrix(const FieldType& field, const GroupElement& e) {
  const int d = field.dim();
  MatrixXd out = MatrixXd::Zero(d, d);
  int off = 0;
  for (const auto& id : field.copies()) {
    const MatrixXd m = irrep_matrix(field.group, id, e);
    out.block(off, off, m.rows(), m.cols()) = m;
    off += static_cast<int>(m.rows());
  }
  return out;
}

FieldType standard_field(const GroupDescriptor& g) {
  // Action of H on R^2 in the (x, y) basis. The rotation by 2*pi/N is not
  // diagonal for N >= 3, where the standard action is the 2-dim irrep of
  // frequency 1; for N <= 2 it splits into one-dimensional irreps.
  FieldType f{g, {}};
  switch (g.kind) {
    case GroupKind::SO2:
    case GroupKind::O2:
      f.entries = {{{g.kind == GroupKind::O2 ? 1 : 0, 1}, 1}};
      return f;
    case GroupKind::CN:
      if (g.n >= 3) {
        f.entries = {{{0, 1}, 1}};
      } else if (g.n == 2) {
        f.entries = {{{0, 1}, 2}};
      } else {
        f.entries = {{{0, 0}, 2}};
      }
      return f;
    case GroupKind::DN:
      if (g.n >= 3) {
        f.entries = {{{1, 1}, 1}};
      } else if (g.n == 2) {
        // x: theta=pi -> -x, reflect -> +x ; y: theta=pi -> -y, reflect -> -y
        f.entries = {{{0, 1}, 1}, {{1, 1}, 1}};
      } else {
        // D_1: x invariant, y flips sign under the reflection
        f.entries = {{{0, 0}, 1}, {{1, 0}, 1}};
      }
      return f;
  }
  throw std::logic_error("unreachable");
}

FieldType irrep_field(const GroupDescriptor& g, int max_freq, int copies) {
  FieldType f{g, {}};
  for (const auto& ir : irreps_up_to(g, max_freq))
    f.entries.push_back({ir.id, copies});
  return f;
}

FieldType fourier_field(const GroupDescriptor& g, int max_freq, int copies) {
  // copy-major: each copy is one contiguous Fourier stack (n_i instances of
  // every irrep, in flat coefficient order)
  FieldType f{g, {}};
  const auto irs = irreps_up_to(g, max_freq);
  for (int c = 0; c < copies; ++c)
    for (const auto& ir : irs) f.entries.push_back({ir.id, ir.n_cols});
  return f;
}

FieldType trivial_field(const GroupDescriptor& g, int copies) {
  return {g, {{{0, 0}, copies}}};
}

}  // namespace steer
