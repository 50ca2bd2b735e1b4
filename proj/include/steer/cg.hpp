#pragma once

#include <vector>

#include "steer/irreps.hpp"

namespace steer {

// Clebsch-Gordan decomposition of psi_left (x) psi_right into irreps:
//   (psi_l (x) psi_r)(g) = sum_{i,s} CG_{i,s}^T psi_i(g) CG_{i,s}
// with Q = [ ... Q^{(i,s)} ... ] orthogonal and CG_{i,s} = Q^{(i,s)T}.
struct CGBlock {
  IrrepId id;
  int mult = 0;       // [i(jj')]
  int col_offset = 0; // first column of this irrep's blocks in Q
};

struct CGDecomposition {
  GroupDescriptor group;
  IrrepId left, right;
  int dim = 0;  // d_l * d_r
  std::vector<CGBlock> blocks;
  MatrixXd Q;  // dim x dim, orthogonal
  // cg[b][s]: d_i x dim coefficient matrix for the s-th copy of blocks[b]
  std::vector<std::vector<MatrixXd>> cg;

  int multiplicity(const IrrepId& id) const;
  // columns of Q belonging to (block b, copy s)
  MatrixXd q_block(int b, int s) const;
};

// Numeric decomposition: Haar-averaged intertwiner projectors per candidate
// irrep, orthonormalised by deflation, verified on 64 random elements
// before caching. Memoised per (group, left, right); thread-safe for reads
// with serialised insertion.
const CGDecomposition& decompose_tensor(const GroupDescriptor& g,
                                        const IrrepId& left,
                                        const IrrepId& right);

// Uncached, optionally corrupted copy (verification self-test hook).
CGDecomposition decompose_tensor_uncached(const GroupDescriptor& g,
                                          const IrrepId& left,
                                          const IrrepId& right);

// Elements used for Haar averages: exact enumeration for finite groups,
// 8*(f_sum+1) equispaced samples per coset otherwise (exact quadrature for
// the trigonometric degrees that occur).
std::vector<GroupElement> averaging_grid(const GroupDescriptor& g, int freq_sum);

}  // namespace steer
