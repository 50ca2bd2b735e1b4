#include "steer/cg.hpp"

#include <Eigen/Eigenvalues>
#include <map>
#include <mutex>
#include <stdexcept>
#include <tuple>

namespace steer {

namespace {

// Wrapping the flip index into the candidate scan below keeps the ordering
// deterministic: flip ascending, freq ascending, matching irreps_up_to.
std::vector<IrrepId> candidate_irreps(const GroupDescriptor& g, int max_freq) {
  std::vector<IrrepId> out;
  const int cap = std::min(max_freq, g.max_frequency());
  const int flips = g.has_reflections() ? 2 : 1;
  for (int flip = 0; flip < flips; ++flip)
    for (int k = 0; k <= cap; ++k)
      if (irrep_valid(g, {flip, k})) out.push_back({flip, k});
  return out;
}

}  // namespace

std::vector<GroupElement> averaging_grid(const GroupDescriptor& g, int freq_sum) {
  if (g.finite()) return sample_grid(g, 0);
  return sample_grid(g, 8 * (freq_sum + 1));
}

int CGDecomposition::multiplicity(const IrrepId& id) const {
  for (const auto& b : blocks)
    if (b.id == id) return b.mult;
  return 0;
}

MatrixXd CGDecomposition::q_block(int b, int s) const {
  const int d = irrep_info(group, blocks[b].id).dim;
  return Q.block(0, blocks[b].col_offset + s * d, dim, d);
}

CGDecomposition decompose_tensor_uncached(const GroupDescriptor& g,
                                          const IrrepId& left,
                                          const IrrepId& right) {
  const Irrep l = irrep_info(g, left);
  const Irrep r = irrep_info(g, right);
  CGDecomposition out;
  out.group = g;
  out.left = left;
  out.right = right;
  out.dim = l.dim * r.dim;

  const IrrepId trivial{0, 0};
  if (left == trivial || right == trivial) {
    // canonical case: psi_0 (x) psi = psi with Q the identity
    const IrrepId other = left == trivial ? right : left;
    out.blocks.push_back({other, 1, 0});
    out.Q = MatrixXd::Identity(out.dim, out.dim);
    out.cg.push_back({MatrixXd::Identity(out.dim, out.dim)});
    return out;
  }

  const int freq_cap = left.freq + right.freq;
  const auto candidates = candidate_irreps(g, freq_cap);

  out.Q = MatrixXd::Zero(out.dim, out.dim);
  int col = 0;

  for (const auto& cid : candidates) {
    const Irrep ci = irrep_info(g, cid);
    const auto grid = averaging_grid(g, freq_cap + cid.freq);

    // Haar projector onto intertwiners X: (psi_l (x) psi_r)(h) X = X psi_i(h),
    // i.e. the fixed space of T(h) = psi_i(h) (x) (psi_l (x) psi_r)(h)
    // acting on vec(X) (column-major vec convention).
    const int nd = ci.dim * out.dim;
    MatrixXd proj = MatrixXd::Zero(nd, nd);
    for (const auto& h : grid) {
      const MatrixXd tp = kron(irrep_matrix(g, left, h), irrep_matrix(g, right, h));
      proj += kron(irrep_matrix(g, cid, h), tp);
    }
    proj /= static_cast<double>(grid.size());

    Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (proj + proj.transpose()));
    std::vector<VectorXd> fixed;
    for (int k = 0; k < nd; ++k)
      if (es.eigenvalues()(k) > 0.5) fixed.push_back(es.eigenvectors().col(k));
    if (fixed.empty()) continue;

    const int mult = static_cast<int>(fixed.size()) / ci.endo_mult;
    if (mult * ci.endo_mult != static_cast<int>(fixed.size()))
      throw std::runtime_error("CG: intertwiner space not a multiple of the "
                               "endomorphism dimension for " + cid.str());
    if (mult == 0) continue;

    CGBlock blk{cid, mult, col};

    // Deflate: pick intertwiners with mutually orthogonal column spaces.
    MatrixXd residual = MatrixXd::Identity(out.dim, out.dim);
    for (int s = 0; s < mult; ++s) {
      // strongest remaining candidate under the residual projector
      int best = -1;
      double best_norm = -1.0;
      std::vector<MatrixXd> mats;
      for (const auto& v : fixed) {
        MatrixXd X(out.dim, ci.dim);
        for (int c = 0; c < ci.dim; ++c)
          X.col(c) = v.segment(c * out.dim, out.dim);
        mats.push_back(residual * X);
        const double nrm = mats.back().norm();
        if (nrm > best_norm) {
          best_norm = nrm;
          best = static_cast<int>(mats.size()) - 1;
        }
      }
      if (best_norm < 1e-6)
        throw std::runtime_error("CG: deflation ran out of intertwiners");
      MatrixXd X = mats[best];
      // X^T X commutes with psi_i and is symmetric, hence scalar
      const double scale = std::sqrt((X.transpose() * X).trace() / ci.dim);
      X /= scale;
      out.Q.block(0, col, out.dim, ci.dim) = X;
      residual -= X * X.transpose();
      col += ci.dim;
    }
    out.blocks.push_back(blk);
  }

  if (col != out.dim)
    throw std::runtime_error("CG: dimension count mismatch for " + left.str() +
                             " (x) " + right.str());

  out.cg.resize(out.blocks.size());
  for (std::size_t b = 0; b < out.blocks.size(); ++b)
    for (int s = 0; s < out.blocks[b].mult; ++s)
      out.cg[b].push_back(out.q_block(static_cast<int>(b), s).transpose());

  return out;
}

namespace {

void verify_decomposition(const CGDecomposition& d) {
  const double q_err =
      (d.Q.transpose() * d.Q - MatrixXd::Identity(d.dim, d.dim)).cwiseAbs().maxCoeff();
  if (q_err > 1e-10)
    throw std::runtime_error("CG verification: Q not orthogonal (" + d.left.str() +
                             "," + d.right.str() + ")");
  Rng rng(0x5eedc0deULL ^ (d.left.freq * 131 + d.right.freq * 17 + d.left.flip * 7 +
                           d.right.flip));
  for (int t = 0; t < 64; ++t) {
    const GroupElement h = random_element(d.group, rng);
    const MatrixXd tp =
        kron(irrep_matrix(d.group, d.left, h), irrep_matrix(d.group, d.right, h));
    MatrixXd rec = MatrixXd::Zero(d.dim, d.dim);
    for (std::size_t b = 0; b < d.blocks.size(); ++b) {
      const MatrixXd psi = irrep_matrix(d.group, d.blocks[b].id, h);
      for (int s = 0; s < d.blocks[b].mult; ++s)
        rec += d.cg[b][s].transpose() * psi * d.cg[b][s];
    }
    if ((rec - tp).cwiseAbs().maxCoeff() > 1e-8)
      throw std::runtime_error("CG verification: reconstruction failed (" +
                               d.left.str() + "," + d.right.str() + ")");
  }
}

}  // namespace

const CGDecomposition& decompose_tensor(const GroupDescriptor& g,
                                        const IrrepId& left,
                                        const IrrepId& right) {
  using Key = std::tuple<int, int, int, int, int, int>;
  static std::map<Key, CGDecomposition> cache;
  static std::mutex mtx;
  const Key key{static_cast<int>(g.kind), g.finite() ? g.n : 0,
                left.flip,  left.freq,   right.flip, right.freq};
  std::lock_guard<std::mutex> lock(mtx);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  CGDecomposition d = decompose_tensor_uncached(g, left, right);
  verify_decomposition(d);
  return cache.emplace(key, std::move(d)).first->second;
}

}  // namespace steer
