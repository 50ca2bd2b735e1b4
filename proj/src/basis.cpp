#include "steer/basis.hpp"

#include <cmath>
#include <stdexcept>

namespace steer {

namespace {

// Angular part for a one-dimensional irrep, or 1.0 ring function for the
// trivial one. Returns false if the irrep admits no planar harmonics
// (the O(2) reflection irrep needs a rotation-invariant odd function).
bool angular_1d(const GroupDescriptor& g, const IrrepId& id, double phi,
                double* out) {
  if (id.flip == 0 && id.freq == 0) {
    *out = 1.0;
    return true;
  }
  if (g.finite() && g.n % 2 == 0 && id.freq == g.n / 2) {
    *out = id.flip == 0 ? std::cos(0.5 * g.n * phi) : std::sin(0.5 * g.n * phi);
    return true;
  }
  if (id.flip == 1 && id.freq == 0) {
    if (g.kind == GroupKind::DN) {
      *out = std::sin(g.n * phi);
      return true;
    }
    return false;  // O(2): no planar function carries the bare reflection irrep
  }
  return false;
}

}  // namespace

VectorXd SteerableBasis::evaluate(int idx, double x, double y) const {
  const BasisElement& el = elements.at(idx);
  const Irrep ir = irrep_info(group, el.id);
  if (space == BasisSpace::Point) {
    VectorXd v = VectorXd::Zero(ir.dim);
    if (el.id.flip == 0 && el.id.freq == 0) v(0) = 1.0;
    return v;
  }
  const double r = std::hypot(x, y);
  const double mu = el.ring * ring_width;
  const double radial = std::exp(-0.5 * (r - mu) * (r - mu) / (sigma * sigma));
  const bool trivial = el.id.flip == 0 && el.id.freq == 0;
  // angular elements must vanish at the origin, where phi is undefined
  const double damp =
      trivial ? 1.0 : 1.0 - std::exp(-0.5 * r * r / (sigma * sigma));
  const double phi = (r == 0.0) ? 0.0 : std::atan2(y, x);

  VectorXd v(ir.dim);
  if (ir.dim == 2) {
    v(0) = std::cos(el.id.freq * phi);
    v(1) = std::sin(el.id.freq * phi);
  } else {
    double a = 0.0;
    if (!angular_1d(group, el.id, phi, &a))
      throw std::logic_error("basis element without angular function");
    v(0) = a;
  }
  return radial * damp * v;
}

SteerableBasis point_basis(const GroupDescriptor& g, int max_freq) {
  (void)max_freq;
  SteerableBasis b;
  b.space = BasisSpace::Point;
  b.group = g;
  b.elements.push_back({IrrepId{0, 0}, 0});
  return b;
}

SteerableBasis planar_basis(const GroupDescriptor& g, int max_freq, int n_rings,
                            double ring_width) {
  if (n_rings < 1) throw std::invalid_argument("planar_basis: n_rings >= 1");
  SteerableBasis b;
  b.space = BasisSpace::Plane;
  b.group = g;
  b.n_rings = n_rings;
  b.ring_width = ring_width;
  b.sigma = 0.5 * ring_width;
  for (const auto& ir : irreps_up_to(g, max_freq)) {
    if (ir.dim == 1) {
      double probe;
      if (!angular_1d(g, ir.id, 0.3, &probe)) continue;
    }
    for (int k = 0; k < n_rings; ++k) b.elements.push_back({ir.id, k});
  }
  return b;
}

Eigen::Vector2d act_on_plane(const GroupElement& e, const Eigen::Vector2d& x) {
  Eigen::Vector2d v = x;
  if (e.reflect) v(1) = -v(1);
  Eigen::Matrix2d rot;
  rot << std::cos(e.theta), -std::sin(e.theta), std::sin(e.theta),
      std::cos(e.theta);
  return rot * v;
}

double steerability_residual(const SteerableBasis& basis, int n_trials,
                             Rng& rng) {
  double worst = 0.0;
  for (int t = 0; t < n_trials; ++t) {
    const GroupElement g = random_element(basis.group, rng);
    const Eigen::Vector2d x(rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0));
    const Eigen::Vector2d gx = act_on_plane(g, x);
    for (std::size_t i = 0; i < basis.elements.size(); ++i) {
      const MatrixXd psi = irrep_matrix(basis.group, basis.elements[i].id, g);
      const VectorXd lhs =
          basis.evaluate(static_cast<int>(i), gx(0), gx(1));
      const VectorXd rhs = psi * basis.evaluate(static_cast<int>(i), x(0), x(1));
      worst = std::max(worst, (lhs - rhs).cwiseAbs().maxCoeff());
    }
  }
  return worst;
}

}  // namespace steer
