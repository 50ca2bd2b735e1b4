#include "steer/kernel_projection.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace steer {

ProjectionMode parse_mode(const std::string& s) {
  if (s == "equivariant") return ProjectionMode::Equivariant;
  if (s == "probabilistic") return ProjectionMode::Probabilistic;
  if (s == "preliminary") return ProjectionMode::Preliminary;
  throw std::invalid_argument("unknown mode: " + s);
}

std::string mode_name(ProjectionMode m) {
  switch (m) {
    case ProjectionMode::Equivariant: return "equivariant";
    case ProjectionMode::Probabilistic: return "probabilistic";
    case ProjectionMode::Preliminary: return "preliminary";
  }
  return "?";
}

MatrixXd cjj_builder_matrix(const GroupDescriptor& g, const IrrepId& j,
                            const IrrepId& j2, int bandlimit) {
  const CGDecomposition& inner = decompose_tensor(g, j, j2);
  const FourierCoeffs proto = FourierCoeffs::zero(g, bandlimit);
  const int dim = inner.dim;
  MatrixXd builder = MatrixXd::Zero(dim * dim, proto.flat_size());

  for (const auto& blk : inner.blocks) {
    const Irrep ir = irrep_info(g, blk.id);
    const int off = proto.flat_offset(blk.id);
    if (off < 0) continue;  // above lambda's bandlimit: zero block
    const auto endo = endomorphism_basis(g, blk.id);
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(ir.dim));
    for (int r = 0; r < blk.mult; ++r) {
      const int t0 = blk.col_offset + r * ir.dim;
      for (int beta = 0; beta < ir.endo_mult; ++beta) {
        for (int cc = 0; cc < ir.n_cols; ++cc) {
          const int col_c = t0 + beta * ir.n_cols + cc;
          for (int a = 0; a < ir.dim; ++a) {
            for (int u = 0; u < ir.dim; ++u) {
              const double w = endo[beta](a, u) * inv_sqrt_d;
              if (w == 0.0) continue;
              const int lam_idx = off + cc * ir.dim + u;
              for (int p = 0; p < dim; ++p)
                builder(p * dim + col_c, lam_idx) += inner.Q(p, t0 + a) * w;
            }
          }
        }
      }
    }
  }
  return builder;
}

MatrixXd build_cjj(const NormalizedLikelihood& norm, const IrrepId& j,
                   const IrrepId& j2) {
  const MatrixXd builder =
      cjj_builder_matrix(norm.group, j, j2, norm.bandlimit);
  const VectorXd flat_c = builder * norm.coeffs.flat();
  const int dim = decompose_tensor(norm.group, j, j2).dim;
  MatrixXd c(dim, dim);
  for (int p = 0; p < dim; ++p)
    for (int q = 0; q < dim; ++q) c(p, q) = flat_c(p * dim + q);
  return c;
}

namespace {

VectorXd uniform_lambda_flat(const GroupDescriptor& g, int bandlimit) {
  FourierCoeffs c = FourierCoeffs::zero(g, bandlimit);
  (*c.entry({0, 0}))(0, 0) = 1.0;
  return c.flat();
}

bool has_block_within(const CGDecomposition& d, int bandlimit) {
  for (const auto& b : d.blocks)
    if (b.id.freq <= bandlimit) return true;
  return false;
}

}  // namespace

ProjectionPlan make_projection_plan(const FieldType& in, const FieldType& out,
                                    const SteerableBasis& basis,
                                    ProjectionMode mode, int lambda_bandlimit) {
  if (!(in.group == out.group))
    throw std::invalid_argument("projection plan: field groups differ");
  ProjectionPlan plan;
  plan.group = in.group;
  plan.field_in = in;
  plan.field_out = out;
  plan.mode = mode;
  plan.lambda_bandlimit = lambda_bandlimit;
  plan.basis = basis;
  plan.d_in = in.dim();
  plan.d_out = out.dim();

  // copy offsets
  std::vector<std::pair<IrrepId, int>> in_copies, out_copies;  // (id, offset)
  int off = 0;
  for (const auto& id : in.copies()) {
    in_copies.push_back({id, off});
    off += irrep_info(plan.group, id).dim;
  }
  off = 0;
  for (const auto& id : out.copies()) {
    out_copies.push_back({id, off});
    off += irrep_info(plan.group, id).dim;
  }

  // group copy pairs by irrep pair type, deterministic order of first use
  std::map<std::pair<IrrepId, IrrepId>, int> type_index;
  for (const auto& [lid, loff] : in_copies) {
    for (const auto& [jid, joff] : out_copies) {
      const auto key = std::make_pair(lid, jid);
      auto it = type_index.find(key);
      if (it == type_index.end()) {
        PairType pt;
        pt.l = lid;
        pt.J = jid;
        pt.d_l = irrep_info(plan.group, lid).dim;
        pt.d_J = irrep_info(plan.group, jid).dim;
        it = type_index.emplace(key, static_cast<int>(plan.pair_types.size())).first;
        plan.pair_types.push_back(pt);
      }
      plan.pair_types[it->second].pairs.push_back({loff, joff});
    }
  }

  std::map<std::pair<IrrepId, IrrepId>, int> cjj_index;
  auto cjj_slot = [&](const IrrepId& j, const IrrepId& jp) {
    const auto key = std::make_pair(j, jp);
    auto it = cjj_index.find(key);
    if (it != cjj_index.end()) return it->second;
    CjjSlot slot;
    slot.j = j;
    slot.jp = jp;
    slot.dim = decompose_tensor(plan.group, j, jp).dim;
    slot.builder = cjj_builder_matrix(plan.group, j, jp, lambda_bandlimit);
    const VectorXd cu =
        slot.builder * uniform_lambda_flat(plan.group, lambda_bandlimit);
    slot.c_uniform.resize(slot.dim, slot.dim);
    for (int p = 0; p < slot.dim; ++p)
      for (int q = 0; q < slot.dim; ++q)
        slot.c_uniform(p, q) = cu(p * slot.dim + q);
    slot.c_offset = plan.n_prelim_c;
    plan.n_prelim_c += slot.dim * slot.dim;
    const int idx = static_cast<int>(plan.cjj.size());
    plan.cjj.push_back(std::move(slot));
    cjj_index.emplace(key, idx);
    return idx;
  };

  for (std::size_t pt_i = 0; pt_i < plan.pair_types.size(); ++pt_i) {
    const PairType& pt = plan.pair_types[pt_i];
    const CGDecomposition& outer = decompose_tensor(plan.group, pt.l, pt.J);
    const int n_pairs = static_cast<int>(pt.pairs.size());
    for (std::size_t eb = 0; eb < basis.elements.size(); ++eb) {
      const IrrepId j = basis.elements[eb].id;
      const Irrep jinfo = irrep_info(plan.group, j);
      for (std::size_t b = 0; b < outer.blocks.size(); ++b) {
        const IrrepId jp = outer.blocks[b].id;
        const Irrep jpinfo = irrep_info(plan.group, jp);
        if (mode == ProjectionMode::Equivariant && !(jp == j)) continue;
        const CGDecomposition& inner = decompose_tensor(plan.group, j, jp);
        if (mode != ProjectionMode::Equivariant &&
            !has_block_within(inner, lambda_bandlimit))
          continue;  // c^{jj'} is identically zero at this bandlimit
        for (int s = 0; s < outer.blocks[b].mult; ++s) {
          TermSpec term;
          term.pair_type = static_cast<int>(pt_i);
          term.basis_elem = static_cast<int>(eb);
          term.j = j;
          term.jp = jp;
          term.s = s;
          term.cg_t = outer.cg[b][s].transpose();
          if (mode == ProjectionMode::Equivariant) {
            // trivial block of psi_j (x) psi_j spans the endomorphisms
            int triv = -1;
            for (std::size_t ib = 0; ib < inner.blocks.size(); ++ib)
              if (inner.blocks[ib].id == IrrepId{0, 0}) triv = static_cast<int>(ib);
            if (triv < 0) continue;
            const CGBlock& tb = inner.blocks[triv];
            term.w_rows = tb.mult;
            term.q_triv.resize(inner.dim, tb.mult);
            for (int r = 0; r < tb.mult; ++r)
              term.q_triv.col(r) = inner.Q.col(tb.col_offset + r);
          } else {
            term.w_rows = jinfo.dim * jpinfo.dim;
            term.cjj_index = cjj_slot(j, jp);
          }
          term.w_offset = plan.n_weights;
          plan.n_weights += term.w_rows * n_pairs;
          plan.terms.push_back(std::move(term));
        }
      }
    }
  }

  // gather index: every entry of the assembled map comes from exactly one
  // pair type block in the concatenated term stack
  plan.gather_idx.assign(static_cast<std::size_t>(plan.d_out) * plan.d_in, -1);
  int base = 0;
  for (const auto& pt : plan.pair_types) {
    const int n_pairs = static_cast<int>(pt.pairs.size());
    const int block = pt.d_l * pt.d_J;
    for (int p = 0; p < n_pairs; ++p) {
      const auto [loff, joff] = pt.pairs[p];
      for (int v = 0; v < pt.d_l; ++v)
        for (int u = 0; u < pt.d_J; ++u)
          plan.gather_idx[static_cast<std::size_t>(joff + u) * plan.d_in +
                          (loff + v)] = base + (v * pt.d_J + u) * n_pairs + p;
    }
    base += block * n_pairs;
  }
  for (int idx : plan.gather_idx)
    if (idx < 0) throw std::logic_error("projection plan: uncovered map entry");
  return plan;
}

VectorXd init_weights(const ProjectionPlan& plan, double gain, Rng& rng) {
  // Effective fan-in per output copy: the number of scalar weights feeding
  // it through the projection. The CG / Q factors are orthonormal, so this
  // is the variance-preserving notion of fan-in for these layers (an
  // output irrep is only connected to the inputs its pair types allow).
  std::map<int, double> fan;  // out offset -> weight count
  for (const auto& term : plan.terms) {
    const PairType& pt = plan.pair_types[term.pair_type];
    for (const auto& [loff, joff] : pt.pairs) {
      (void)loff;
      fan[joff] += term.w_rows;
    }
  }
  VectorXd w(plan.n_weights);
  for (const auto& term : plan.terms) {
    const PairType& pt = plan.pair_types[term.pair_type];
    const int n_pairs = static_cast<int>(pt.pairs.size());
    for (int r = 0; r < term.w_rows; ++r)
      for (int p = 0; p < n_pairs; ++p) {
        const double f = std::max(1.0, fan[pt.pairs[p].second]);
        w(term.w_offset + r * n_pairs + p) = rng.normal(0.0, std::sqrt(gain / f));
      }
  }
  return w;
}

VectorXd init_prelim_c(const ProjectionPlan& plan, double eps, Rng& rng) {
  VectorXd c(plan.n_prelim_c);
  for (const auto& slot : plan.cjj) {
    const bool zero_block = slot.c_uniform.cwiseAbs().maxCoeff() < 1e-14;
    for (int p = 0; p < slot.dim; ++p)
      for (int q = 0; q < slot.dim; ++q) {
        double v = slot.c_uniform(p, q);
        if (zero_block && eps != 0.0) v += eps * rng.normal();
        c(slot.c_offset + p * slot.dim + q) = v;
      }
  }
  return c;
}

VectorXd embed_equivariant_weights(const ProjectionPlan& equiv_plan,
                                   const VectorXd& w_equiv,
                                   const ProjectionPlan& prob_plan) {
  if (w_equiv.size() != equiv_plan.n_weights)
    throw std::invalid_argument("embed: weight size mismatch");
  VectorXd w = VectorXd::Zero(prob_plan.n_weights);
  for (const auto& et : equiv_plan.terms) {
    // matching probabilistic term: same pair type, basis element, jp == j, s
    const TermSpec* match = nullptr;
    for (const auto& ptm : prob_plan.terms) {
      if (ptm.pair_type == et.pair_type && ptm.basis_elem == et.basis_elem &&
          ptm.jp == et.j && ptm.j == et.j && ptm.s == et.s) {
        match = &ptm;
        break;
      }
    }
    if (!match)
      throw std::invalid_argument("embed: no matching probabilistic term");
    const CGDecomposition& inner =
        decompose_tensor(equiv_plan.group, et.j, et.j);
    int triv = -1;
    for (std::size_t ib = 0; ib < inner.blocks.size(); ++ib)
      if (inner.blocks[ib].id == IrrepId{0, 0}) triv = static_cast<int>(ib);
    const CGBlock& tb = inner.blocks[triv];
    const int n_pairs =
        static_cast<int>(equiv_plan.pair_types[et.pair_type].pairs.size());
    for (int r = 0; r < et.w_rows; ++r) {
      const int coord = tb.col_offset + r;  // trivial blocks are 1-dim
      for (int p = 0; p < n_pairs; ++p)
        w(match->w_offset + coord * n_pairs + p) =
            w_equiv(et.w_offset + r * n_pairs + p);
    }
  }
  return w;
}

ad::Var assemble_map_ad(ad::Tape& t, const ProjectionPlan& plan, ad::Var weights,
                        ad::Var lambda_flat, ad::Var prelim_c, double x,
                        double y) {
  // c^{jj'} nodes shared across terms
  std::vector<ad::Var> c_vars(plan.cjj.size());
  for (std::size_t i = 0; i < plan.cjj.size(); ++i) {
    const CjjSlot& slot = plan.cjj[i];
    if (plan.mode == ProjectionMode::Probabilistic) {
      if (!lambda_flat.valid())
        throw std::invalid_argument("assemble: missing lambda for probabilistic");
      ad::Tensor bt(static_cast<int>(slot.builder.rows()),
                    static_cast<int>(slot.builder.cols()));
      for (int r = 0; r < slot.builder.rows(); ++r)
        for (int c = 0; c < slot.builder.cols(); ++c)
          bt.at(r, c) = slot.builder(r, c);
      c_vars[i] = t.reshape(t.matmul(t.constant(std::move(bt)), lambda_flat),
                            slot.dim, slot.dim);
    } else if (plan.mode == ProjectionMode::Preliminary) {
      if (!prelim_c.valid())
        throw std::invalid_argument("assemble: missing c params for preliminary");
      ad::Var row = t.slice_cols(prelim_c, slot.c_offset,
                                 slot.c_offset + slot.dim * slot.dim);
      c_vars[i] = t.reshape(row, slot.dim, slot.dim);
    }
  }

  std::vector<ad::Var> accum(plan.pair_types.size());
  for (const auto& term : plan.terms) {
    const PairType& pt = plan.pair_types[term.pair_type];
    const int n_pairs = static_cast<int>(pt.pairs.size());
    ad::Var w = t.slice_cols(weights, term.w_offset,
                             term.w_offset + term.w_rows * n_pairs);
    w = t.reshape(w, term.w_rows, n_pairs);

    const int d_j = irrep_info(plan.group, term.j).dim;
    const int d_jp = irrep_info(plan.group, term.jp).dim;
    ad::Var cw;
    if (plan.mode == ProjectionMode::Equivariant) {
      ad::Tensor qt(static_cast<int>(term.q_triv.rows()),
                    static_cast<int>(term.q_triv.cols()));
      for (int r = 0; r < term.q_triv.rows(); ++r)
        for (int c = 0; c < term.q_triv.cols(); ++c)
          qt.at(r, c) = term.q_triv(r, c);
      cw = t.matmul(t.constant(std::move(qt)), w);
    } else {
      cw = t.matmul(c_vars[term.cjj_index], w);
    }

    // contract with the basis value: Z[r, p] = sum_c Y[c] * unvec(cw)[r, c]
    ad::Var z;
    if (d_j == 1) {
      const double yv =
          plan.basis.evaluate(term.basis_elem, x, y)(0);
      z = (yv == 1.0) ? cw : t.scale(cw, yv);
    } else {
      const VectorXd yval = plan.basis.evaluate(term.basis_elem, x, y);
      ad::Tensor yt(1, d_j);
      for (int c = 0; c < d_j; ++c) yt.at(0, c) = yval(c);
      ad::Var a = t.reshape(cw, d_j, d_jp * n_pairs);
      z = t.reshape(t.matmul(t.constant(std::move(yt)), a), d_jp, n_pairs);
    }

    ad::Tensor cgt(static_cast<int>(term.cg_t.rows()),
                   static_cast<int>(term.cg_t.cols()));
    for (int r = 0; r < term.cg_t.rows(); ++r)
      for (int c = 0; c < term.cg_t.cols(); ++c) cgt.at(r, c) = term.cg_t(r, c);
    ad::Var contrib = t.matmul(t.constant(std::move(cgt)), z);

    if (accum[term.pair_type].valid())
      accum[term.pair_type] = t.add(accum[term.pair_type], contrib);
    else
      accum[term.pair_type] = contrib;
  }

  std::vector<ad::Var> stack;
  for (std::size_t i = 0; i < plan.pair_types.size(); ++i) {
    if (accum[i].valid()) {
      stack.push_back(accum[i]);
    } else {
      const PairType& pt = plan.pair_types[i];
      stack.push_back(t.constant(ad::Tensor(pt.d_l * pt.d_J,
                                            static_cast<int>(pt.pairs.size()))));
    }
  }
  ad::Var flat = t.concat_flat(stack);
  return t.gather(flat, plan.gather_idx, plan.d_out, plan.d_in);
}

namespace {

ad::Var weights_row(ad::Tape& t, const VectorXd& w) {
  ad::Tensor wt(1, static_cast<int>(w.size()));
  for (int i = 0; i < w.size(); ++i) wt.at(0, i) = w(i);
  return t.constant(std::move(wt));
}

}  // namespace

MatrixXd project_linear_map(const ProjectionPlan& plan, const VectorXd& weights,
                            const NormalizedLikelihood* norm,
                            const VectorXd* prelim_c) {
  ad::Tape t;
  ad::Var w = weights_row(t, weights);
  ad::Var lam, pc;
  if (plan.mode == ProjectionMode::Probabilistic) {
    if (!norm) throw std::invalid_argument("project_linear_map: missing likelihood");
    const VectorXd lf = norm->coeffs.flat();
    ad::Tensor lt(static_cast<int>(lf.size()), 1);
    for (int i = 0; i < lf.size(); ++i) lt.v[i] = lf(i);
    lam = t.constant(std::move(lt));
  } else if (plan.mode == ProjectionMode::Preliminary) {
    if (!prelim_c) throw std::invalid_argument("project_linear_map: missing c");
    pc = weights_row(t, *prelim_c);
  }
  ad::Var m = assemble_map_ad(t, plan, w, lam, pc);
  MatrixXd out(plan.d_out, plan.d_in);
  for (int i = 0; i < plan.d_out; ++i)
    for (int j = 0; j < plan.d_in; ++j) out(i, j) = t.val(m).at(i, j);
  return out;
}

ProjectedKernel project_kernel(const ProjectionPlan& plan, const VectorXd& weights,
                               const NormalizedLikelihood* norm,
                               const VectorXd* prelim_c) {
  if (plan.field_in.entries.size() != 1 || plan.field_in.entries[0].second != 1 ||
      plan.field_out.entries.size() != 1 || plan.field_out.entries[0].second != 1)
    throw std::invalid_argument("project_kernel: single irrep pair expected");
  ProjectedKernel k;
  k.in_irrep = plan.field_in.entries[0].first;
  k.out_irrep = plan.field_out.entries[0].first;
  VectorXd wcopy = weights;
  std::optional<VectorXd> lam;
  if (norm) lam = norm->coeffs.flat();
  std::optional<VectorXd> pc;
  if (prelim_c) pc = *prelim_c;
  k.evaluate = [plan, wcopy, lam, pc](double x, double y) {
    ad::Tape t;
    ad::Var w = weights_row(t, wcopy);
    ad::Var lv, cv;
    if (plan.mode == ProjectionMode::Probabilistic) {
      ad::Tensor lt(static_cast<int>(lam->size()), 1);
      for (int i = 0; i < lam->size(); ++i) lt.v[i] = (*lam)(i);
      lv = t.constant(std::move(lt));
    } else if (plan.mode == ProjectionMode::Preliminary) {
      cv = weights_row(t, *pc);
    }
    ad::Var m = assemble_map_ad(t, plan, w, lv, cv, x, y);
    MatrixXd out(plan.d_out, plan.d_in);
    for (int i = 0; i < plan.d_out; ++i)
      for (int j = 0; j < plan.d_in; ++j) out(i, j) = t.val(m).at(i, j);
    return out;
  };
  return k;
}

double equivariance_error(const std::function<MatrixXd(const MatrixXd&)>& fn,
                          const FieldType& in, const FieldType& out,
                          const MatrixXd& batch, const GroupElement& h,
                          int* skipped) {
  const MatrixXd rho_in = direct_sum_matrix(in, h);
  const MatrixXd rho_out = direct_sum_matrix(out, h);
  const MatrixXd y = fn(batch);
  const MatrixXd y_t = fn(batch * rho_in.transpose());
  double total = 0.0;
  int used = 0, skip = 0;
  for (int b = 0; b < batch.rows(); ++b) {
    const double denom = y.row(b).norm();
    if (denom < 1e-300) {
      ++skip;
      continue;
    }
    total += (y.row(b) * rho_out.transpose() - y_t.row(b)).norm() / denom;
    ++used;
  }
  if (skipped) *skipped = skip;
  return used > 0 ? total / used : 0.0;
}

}  // namespace steer
