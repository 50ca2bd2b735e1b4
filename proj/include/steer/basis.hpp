#pragma once

#include <vector>

#include "steer/irreps.hpp"

namespace steer {

// H-steerable bases: Y_j^k(g.x) = psi_j(g) Y_j^k(x). The point basis (the
// X = {0} case behind equivariant linear layers) holds exactly the trivial
// element Y = 1; the planar basis pairs Gaussian radial rings with circular
// harmonics matched to each irrep.
enum class BasisSpace { Point, Plane };

struct BasisElement {
  IrrepId id;
  int ring = 0;
};

struct SteerableBasis {
  BasisSpace space = BasisSpace::Point;
  GroupDescriptor group;
  std::vector<BasisElement> elements;
  int n_rings = 1;
  double ring_width = 1.0;
  double sigma = 0.5;

  // value of element `idx` at (x, y); length d_j
  VectorXd evaluate(int idx, double x, double y) const;
};

SteerableBasis point_basis(const GroupDescriptor& g, int max_freq);
SteerableBasis planar_basis(const GroupDescriptor& g, int max_freq, int n_rings,
                            double ring_width);

// Action of a group element on the plane (rotation after the optional
// x-axis reflection, matching the irrep convention).
Eigen::Vector2d act_on_plane(const GroupElement& e, const Eigen::Vector2d& x);

// Largest steerability residual |Y(g.x) - psi(g) Y(x)| over random (g, x).
double steerability_residual(const SteerableBasis& basis, int n_trials,
                             Rng& rng);

}  // namespace steer
