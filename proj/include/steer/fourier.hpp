#pragma once

#include <optional>
#include <vector>

#include "steer/irreps.hpp"

namespace steer {

// Fourier coefficients of a real function on the group: one d_i x n_i
// matrix per irrep with freq <= bandlimit, ordered like irreps_up_to.
// The flattened layout stacks each matrix column-major; with this scaling
// the flat vector holds coordinates in an orthonormal basis of L^2(H), so
// the sampled mean inner product of two bandlimited functions equals the
// plain dot product of their flat vectors.
struct FourierCoeffs {
  GroupDescriptor group;
  int bandlimit = 0;
  std::vector<MatrixXd> entries;

  static FourierCoeffs zero(const GroupDescriptor& g, int bandlimit);
  const std::vector<Irrep>& irreps() const;
  int flat_size() const;
  VectorXd flat() const;
  void set_flat(const VectorXd& v);
  // offset of an irrep's block in the flat layout; -1 if absent
  int flat_offset(const IrrepId& id) const;
  MatrixXd* entry(const IrrepId& id);
  const MatrixXd* entry(const IrrepId& id) const;
};

// Evaluation grid plus the dense synthesis (ift) and analysis (ft)
// matrices; ft is the pseudo-inverse of ift and equals the Haar-quadrature
// Fourier transform when the grid is exact for the bandlimit.
struct SamplingPlan {
  GroupDescriptor group;
  int bandlimit = 0;
  std::vector<GroupElement> elements;
  MatrixXd ift_matrix;  // N x C
  MatrixXd ft_matrix;   // C x N

  int n_samples() const { return static_cast<int>(elements.size()); }
  int n_coeffs() const { return static_cast<int>(ift_matrix.cols()); }
};

// Default grid size: full enumeration for finite groups, otherwise
// max(64, 4L+4) equispaced rotations per coset (headroom for the spectral
// spreading introduced by the softmax in the likelihood module).
int default_plan_samples(const GroupDescriptor& g, int bandlimit);

SamplingPlan make_plan(const GroupDescriptor& g, int bandlimit,
                       std::optional<int> n_per_coset = std::nullopt);

// Cached variant of make_plan with default sizing.
const SamplingPlan& plan_cache(const GroupDescriptor& g, int bandlimit);

// Row of the synthesis matrix for one element:
//   f(g) = sum_i sqrt(d_i) <psi_bar_i(g), fhat_i>_F
VectorXd ift_row(const GroupDescriptor& g, int bandlimit, const GroupElement& e);

// f(g) for every requested element.
VectorXd ift(const FourierCoeffs& coeffs, const std::vector<GroupElement>& elements);
double ift_at(const FourierCoeffs& coeffs, const GroupElement& e);

// Least-squares analysis through the plan's ft matrix.
FourierCoeffs ft(const VectorXd& values, const SamplingPlan& plan);

// Keeps entries with freq <= new_limit (never adds entries).
FourierCoeffs bandlimit_coeffs(const FourierCoeffs& coeffs, int new_limit);

}  // namespace steer
