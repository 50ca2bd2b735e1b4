#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "steer/autodiff.hpp"
#include "steer/basis.hpp"
#include "steer/cg.hpp"
#include "steer/likelihood.hpp"

namespace steer {

enum class ProjectionMode { Equivariant, Probabilistic, Preliminary };

ProjectionMode parse_mode(const std::string& s);
std::string mode_name(ProjectionMode m);

// c^{jj'} = Q * blockdiag over (i, r) of expand_columns(i, lambda-hat_i)/sqrt(d_i)
// for the decomposition of psi_j (x) psi_j'; irrep blocks above lambda's
// bandlimit contribute zero.
MatrixXd build_cjj(const NormalizedLikelihood& norm, const IrrepId& j,
                   const IrrepId& j2);

// Constant matrix M with vec_rowmajor(c^{jj'}) = M * lambda_flat.
MatrixXd cjj_builder_matrix(const GroupDescriptor& g, const IrrepId& j,
                            const IrrepId& j2, int bandlimit);

// ---------------------------------------------------------------------------
// Projection plans: all lambda-independent factors (CG blocks, Q columns,
// builder matrices, gather indices) are precomputed once per
// (fields, basis, mode, bandlimit); kernels are re-evaluated from them after
// every parameter update.
// ---------------------------------------------------------------------------
struct PairType {
  IrrepId l, J;                            // in / out irrep
  int d_l = 1, d_J = 1;
  std::vector<std::pair<int, int>> pairs;  // (in offset, out offset) per copy pair
};

struct TermSpec {
  int pair_type = 0;
  int basis_elem = -1;  // index into basis.elements (point basis: the single one)
  IrrepId j;            // basis irrep
  IrrepId jp;           // CG block irrep (j')
  int s = 0;            // copy of jp in psi_l (x) psi_J
  int w_rows = 0;       // d_j*d_jp (prob/prelim) or endo mult of j (equivariant)
  int w_offset = 0;     // into the flat weight vector (w_rows * n_pairs block)
  MatrixXd cg_t;        // (d_l*d_J) x d_jp
  MatrixXd q_triv;      // equivariant: (d_j*d_jp) x m_j trivial-block columns
  int cjj_index = -1;   // prob/prelim: index into the plan's cjj list
  VectorXd y_row;       // point basis: value of Y_j (length d_j); planar: unused
};

struct CjjSlot {
  IrrepId j, jp;
  int dim = 0;          // d_j * d_jp
  MatrixXd builder;     // (dim*dim) x C, lambda_flat -> row-major c entries
  MatrixXd c_uniform;   // value at the uniform density (preliminary init)
  int c_offset = 0;     // preliminary: offset into the c parameter vector
};

struct ProjectionPlan {
  GroupDescriptor group;
  FieldType field_in, field_out;
  ProjectionMode mode = ProjectionMode::Equivariant;
  int lambda_bandlimit = 0;
  SteerableBasis basis;
  std::vector<PairType> pair_types;
  std::vector<TermSpec> terms;
  std::vector<CjjSlot> cjj;
  int n_weights = 0;
  int n_prelim_c = 0;
  std::vector<int> gather_idx;  // flat (d_out*d_in) -> position in term stack
  int d_in = 0, d_out = 0;
};

ProjectionPlan make_projection_plan(const FieldType& in, const FieldType& out,
                                    const SteerableBasis& basis,
                                    ProjectionMode mode, int lambda_bandlimit);

// Weight initialisation / conversion -----------------------------------------
VectorXd init_weights(const ProjectionPlan& plan, double gain, Rng& rng);
// Preliminary c parameters at the uniform density, plus eps * N(0,1) noise on
// the blocks that start at zero.
VectorXd init_prelim_c(const ProjectionPlan& plan, double eps, Rng& rng);
// Embeds equivariant-mode weights into probabilistic-mode coordinates so the
// uniform-density projections agree exactly.
VectorXd embed_equivariant_weights(const ProjectionPlan& equiv_plan,
                                   const VectorXd& w_equiv,
                                   const ProjectionPlan& prob_plan);

// Tape assembly ---------------------------------------------------------------
// lambda_flat must be valid for Probabilistic, prelim_c for Preliminary.
// For planar bases the kernel is evaluated at (x, y); point bases ignore it.
ad::Var assemble_map_ad(ad::Tape& t, const ProjectionPlan& plan, ad::Var weights,
                        ad::Var lambda_flat, ad::Var prelim_c, double x = 0.0,
                        double y = 0.0);

// Plain evaluation (runs assemble_map_ad on a local tape).
MatrixXd project_linear_map(const ProjectionPlan& plan, const VectorXd& weights,
                            const NormalizedLikelihood* norm,
                            const VectorXd* prelim_c = nullptr);

// Planar kernel evaluator for one irrep pair.
struct ProjectedKernel {
  std::function<MatrixXd(double, double)> evaluate;  // d_J x d_l
  IrrepId in_irrep, out_irrep;
};

ProjectedKernel project_kernel(const ProjectionPlan& plan, const VectorXd& weights,
                               const NormalizedLikelihood* norm,
                               const VectorXd* prelim_c = nullptr);

// Relative equivariance error of a map between feature fields:
// eps(h) = mean_b ||rho_out(h) f(b) - f(rho_in(h) b)|| / ||f(b)||.
double equivariance_error(const std::function<MatrixXd(const MatrixXd&)>& fn,
                          const FieldType& in, const FieldType& out,
                          const MatrixXd& batch, const GroupElement& h,
                          int* skipped = nullptr);

}  // namespace steer
