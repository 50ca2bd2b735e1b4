#include "steer/fourier.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace steer {

namespace {

std::vector<Irrep>& irrep_list_cache(const GroupDescriptor& g, int bandlimit) {
  using Key = std::tuple<int, int, int>;
  static std::map<Key, std::vector<Irrep>> cache;
  static std::mutex mtx;
  std::lock_guard<std::mutex> lock(mtx);
  const Key key{static_cast<int>(g.kind), g.finite() ? g.n : 0, bandlimit};
  auto it = cache.find(key);
  if (it == cache.end())
    it = cache.emplace(key, irreps_up_to(g, bandlimit)).first;
  return it->second;
}

}  // namespace

FourierCoeffs FourierCoeffs::zero(const GroupDescriptor& g, int bandlimit) {
  FourierCoeffs c;
  c.group = g;
  c.bandlimit = bandlimit;
  for (const auto& ir : irrep_list_cache(g, bandlimit))
    c.entries.push_back(MatrixXd::Zero(ir.dim, ir.n_cols));
  return c;
}

const std::vector<Irrep>& FourierCoeffs::irreps() const {
  return irrep_list_cache(group, bandlimit);
}

int FourierCoeffs::flat_size() const {
  int n = 0;
  for (const auto& m : entries) n += static_cast<int>(m.size());
  return n;
}

VectorXd FourierCoeffs::flat() const {
  VectorXd v(flat_size());
  int off = 0;
  for (const auto& m : entries) {
    for (int c = 0; c < m.cols(); ++c)
      for (int r = 0; r < m.rows(); ++r) v(off++) = m(r, c);
  }
  return v;
}

void FourierCoeffs::set_flat(const VectorXd& v) {
  if (v.size() != flat_size())
    throw std::invalid_argument("FourierCoeffs::set_flat: size mismatch");
  int off = 0;
  for (auto& m : entries)
    for (int c = 0; c < m.cols(); ++c)
      for (int r = 0; r < m.rows(); ++r) m(r, c) = v(off++);
}

int FourierCoeffs::flat_offset(const IrrepId& id) const {
  int off = 0;
  const auto& irs = irreps();
  for (std::size_t i = 0; i < irs.size(); ++i) {
    if (irs[i].id == id) return off;
    off += static_cast<int>(entries[i].size());
  }
  return -1;
}

MatrixXd* FourierCoeffs::entry(const IrrepId& id) {
  const auto& irs = irreps();
  for (std::size_t i = 0; i < irs.size(); ++i)
    if (irs[i].id == id) return &entries[i];
  return nullptr;
}

const MatrixXd* FourierCoeffs::entry(const IrrepId& id) const {
  return const_cast<FourierCoeffs*>(this)->entry(id);
}

int default_plan_samples(const GroupDescriptor& g, int bandlimit) {
  if (g.finite()) return g.n;
  return std::max(64, 4 * bandlimit + 4);
}

VectorXd ift_row(const GroupDescriptor& g, int bandlimit, const GroupElement& e) {
  const auto& irs = irrep_list_cache(g, bandlimit);
  int total = 0;
  for (const auto& ir : irs) total += ir.dim * ir.n_cols;
  VectorXd row(total);
  int off = 0;
  for (const auto& ir : irs) {
    const MatrixXd psi = irrep_matrix(g, ir.id, e);
    const double scale = std::sqrt(static_cast<double>(ir.dim));
    // non-redundant columns, column-major to match the flat layout
    for (int c = 0; c < ir.n_cols; ++c)
      for (int r = 0; r < ir.dim; ++r) row(off++) = scale * psi(r, c);
  }
  return row;
}

SamplingPlan make_plan(const GroupDescriptor& g, int bandlimit,
                       std::optional<int> n_per_coset) {
  SamplingPlan plan;
  plan.group = g;
  plan.bandlimit = bandlimit;
  const int n = n_per_coset.value_or(default_plan_samples(g, bandlimit));
  plan.elements = sample_grid(g, n);

  const int rows = static_cast<int>(plan.elements.size());
  const VectorXd probe = ift_row(g, bandlimit, plan.elements.front());
  const int cols = static_cast<int>(probe.size());
  plan.ift_matrix.resize(rows, cols);
  plan.ift_matrix.row(0) = probe.transpose();
  for (int i = 1; i < rows; ++i)
    plan.ift_matrix.row(i) = ift_row(g, bandlimit, plan.elements[i]).transpose();

  if (rows < cols)
    throw std::invalid_argument("make_plan: undersampled (" + std::to_string(rows) +
                                " samples for " + std::to_string(cols) + " coeffs)");
  // Moore-Penrose via the normal equations; the grids used here keep
  // ift^T ift well conditioned (exactly N*I for exact quadrature grids).
  const MatrixXd gram = plan.ift_matrix.transpose() * plan.ift_matrix;
  Eigen::LDLT<MatrixXd> ldlt(gram);
  if (ldlt.info() != Eigen::Success ||
      (gram.diagonal().array() <= 0).any())
    throw std::runtime_error("make_plan: rank-deficient sampling plan");
  plan.ft_matrix = ldlt.solve(plan.ift_matrix.transpose());
  const double inv_err =
      (plan.ft_matrix * plan.ift_matrix - MatrixXd::Identity(cols, cols))
          .cwiseAbs()
          .maxCoeff();
  if (inv_err > 1e-8)
    throw std::runtime_error("make_plan: rank-deficient sampling plan");
  return plan;
}

const SamplingPlan& plan_cache(const GroupDescriptor& g, int bandlimit) {
  using Key = std::tuple<int, int, int>;
  static std::map<Key, SamplingPlan> cache;
  static std::mutex mtx;
  std::lock_guard<std::mutex> lock(mtx);
  const Key key{static_cast<int>(g.kind), g.finite() ? g.n : 0, bandlimit};
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, make_plan(g, bandlimit)).first;
  return it->second;
}

VectorXd ift(const FourierCoeffs& coeffs, const std::vector<GroupElement>& elements) {
  const VectorXd flat = coeffs.flat();
  VectorXd out(static_cast<int>(elements.size()));
  for (std::size_t i = 0; i < elements.size(); ++i)
    out(static_cast<int>(i)) =
        ift_row(coeffs.group, coeffs.bandlimit, elements[i]).dot(flat);
  return out;
}

double ift_at(const FourierCoeffs& coeffs, const GroupElement& e) {
  return ift_row(coeffs.group, coeffs.bandlimit, e).dot(coeffs.flat());
}

FourierCoeffs ft(const VectorXd& values, const SamplingPlan& plan) {
  if (values.size() != plan.n_samples())
    throw std::invalid_argument("ft: values not aligned with plan");
  FourierCoeffs out = FourierCoeffs::zero(plan.group, plan.bandlimit);
  out.set_flat(plan.ft_matrix * values);
  return out;
}

FourierCoeffs bandlimit_coeffs(const FourierCoeffs& coeffs, int new_limit) {
  if (new_limit >= coeffs.bandlimit) return coeffs;
  FourierCoeffs out = FourierCoeffs::zero(coeffs.group, new_limit);
  const auto& irs = coeffs.irreps();
  for (std::size_t i = 0; i < irs.size(); ++i)
    if (auto* e = out.entry(irs[i].id)) *e = coeffs.entries[i];
  return out;
}

}  // namespace steer
