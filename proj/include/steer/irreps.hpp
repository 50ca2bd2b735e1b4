#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "steer/group.hpp"

namespace steer {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Irrep index: flip is the reflection frequency r in {0,1}, freq the
// rotation frequency k.
struct IrrepId {
  int flip = 0;
  int freq = 0;

  bool operator==(const IrrepId& o) const {
    return flip == o.flip && freq == o.freq;
  }
  bool operator<(const IrrepId& o) const {
    return flip != o.flip ? flip < o.flip : freq < o.freq;
  }
  std::string str() const {
    return "(" + std::to_string(flip) + "," + std::to_string(freq) + ")";
  }
};

struct Irrep {
  IrrepId id;
  int dim = 1;        // d
  int endo_mult = 1;  // m = [0(ii)]
  int n_cols = 1;     // n = d / m
};

bool irrep_valid(const GroupDescriptor& g, const IrrepId& id);
Irrep irrep_info(const GroupDescriptor& g, const IrrepId& id);

// All valid irreps with freq <= min(max_freq, group cap), ordered by
// (flip asc, freq asc).
std::vector<Irrep> irreps_up_to(const GroupDescriptor& g, int max_freq);

// The d x d orthogonal matrix of the irrep at a group element.
MatrixXd irrep_matrix(const GroupDescriptor& g, const IrrepId& id,
                      const GroupElement& e);

// Orthogonal matrices spanning the endomorphism algebra; first entry is the
// identity. SO(2)/C_N two-dimensional irreps additionally get
// [[0,-1],[1,0]].
std::vector<MatrixXd> endomorphism_basis(const GroupDescriptor& g,
                                         const IrrepId& id);

// R_psi: d x n reduced matrix -> d x d, concatenating c_r * reduced.
MatrixXd expand_columns(const GroupDescriptor& g, const IrrepId& id,
                        const MatrixXd& reduced);
// R_psi^{-1}: pseudo-inverse of expand_columns (exact on its image).
MatrixXd reduce_columns(const GroupDescriptor& g, const IrrepId& id,
                        const MatrixXd& full);

// Kronecker product with column-major vec convention:
// vec(A B C) = (C^T (x) A) vec(B).
MatrixXd kron(const MatrixXd& a, const MatrixXd& b);

// Ordered direct sum of irreps with multiplicities.
struct FieldType {
  GroupDescriptor group;
  std::vector<std::pair<IrrepId, int>> entries;  // (irrep, multiplicity)

  int dim() const;
  // flattened per-copy list, in order
  std::vector<IrrepId> copies() const;
};

MatrixXd direct_sum_matrix(const FieldType& field, const GroupElement& e);

// The natural action of H on R^2, expressed as a FieldType (used as the
// input type of the vector tasks).
FieldType standard_field(const GroupDescriptor& g);
// `copies` copies of every irrep with freq <= L.
FieldType irrep_field(const GroupDescriptor& g, int max_freq, int copies);
// `copies` copies of the bandlimited function field: each irrep appears
// n_i times per copy (the Fourier stack of a real function on the group).
FieldType fourier_field(const GroupDescriptor& g, int max_freq, int copies);
FieldType trivial_field(const GroupDescriptor& g, int copies);

}  // namespace steer
