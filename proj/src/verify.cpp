#include "steer/verify.hpp"

#include <cmath>
#include <functional>
#include <sstream>

#include "steer/kernel_projection.hpp"
#include "steer/nn.hpp"

namespace steer::verify {

namespace {

std::vector<GroupDescriptor> check_groups() {
  return {cyclic_group(4), dihedral_group(4), so2_group(), o2_group()};
}

std::vector<IrrepId> irrep_ids(const GroupDescriptor& g, int max_freq) {
  std::vector<IrrepId> out;
  for (const auto& ir : irreps_up_to(g, max_freq)) out.push_back(ir.id);
  return out;
}

CheckResult check_cg(bool corrupt) {
  CheckResult r{"cg-reconstruction", true, ""};
  double worst_rec = 0.0, worst_q = 0.0;
  for (const auto& g : check_groups()) {
    for (const auto& a : irrep_ids(g, 2)) {
      for (const auto& b : irrep_ids(g, 2)) {
        CGDecomposition d = decompose_tensor_uncached(g, a, b);
        if (corrupt && d.cg[0][0].size() > 0) d.cg[0][0](0, 0) *= -1.0;
        worst_q = std::max(
            worst_q, (d.Q.transpose() * d.Q - MatrixXd::Identity(d.dim, d.dim))
                         .cwiseAbs()
                         .maxCoeff());
        Rng rng(17);
        for (int t = 0; t < 64; ++t) {
          const GroupElement h = random_element(g, rng);
          const MatrixXd tp =
              kron(irrep_matrix(g, a, h), irrep_matrix(g, b, h));
          MatrixXd rec = MatrixXd::Zero(d.dim, d.dim);
          for (std::size_t blk = 0; blk < d.blocks.size(); ++blk) {
            const MatrixXd psi = irrep_matrix(g, d.blocks[blk].id, h);
            for (int s = 0; s < d.blocks[blk].mult; ++s)
              rec += d.cg[blk][s].transpose() * psi * d.cg[blk][s];
          }
          worst_rec = std::max(worst_rec, (rec - tp).cwiseAbs().maxCoeff());
        }
      }
    }
  }
  std::ostringstream os;
  os << "max reconstruction " << worst_rec << ", max Q^T Q error " << worst_q;
  r.detail = os.str();
  r.passed = worst_rec <= 1e-8 && worst_q <= 1e-10;
  return r;
}

CheckResult check_schur() {
  CheckResult r{"schur-vanishing", true, ""};
  double worst = 0.0;
  for (const auto& g : check_groups()) {
    const auto ids = irrep_ids(g, 3);
    for (const auto& a : ids) {
      for (const auto& b : ids) {
        if (a == b) continue;
        const auto grid = averaging_grid(g, a.freq + b.freq);
        MatrixXd avg = MatrixXd::Zero(irrep_info(g, a).dim * irrep_info(g, b).dim,
                                      irrep_info(g, a).dim * irrep_info(g, b).dim);
        for (const auto& h : grid)
          avg += kron(irrep_matrix(g, a, h), irrep_matrix(g, b, h));
        avg /= static_cast<double>(grid.size());
        worst = std::max(worst, avg.cwiseAbs().maxCoeff());
      }
    }
  }
  r.detail = "max averaged tensor-product norm " + std::to_string(worst);
  r.passed = worst <= 1e-8;
  return r;
}

CheckResult check_peter_weyl() {
  CheckResult r{"peter-weyl-orthogonality", true, ""};
  double worst = 0.0;
  for (const auto& g : check_groups()) {
    const int L = std::min(3, g.max_frequency());
    const SamplingPlan plan = make_plan(g, L, g.finite() ? std::optional<int>{}
                                                         : std::optional<int>{64});
    const MatrixXd gram =
        plan.ift_matrix.transpose() * plan.ift_matrix / plan.n_samples();
    worst = std::max(worst, (gram - MatrixXd::Identity(plan.n_coeffs(),
                                                       plan.n_coeffs()))
                                .cwiseAbs()
                                .maxCoeff());
  }
  r.detail = "max Gram deviation " + std::to_string(worst);
  r.passed = worst <= 1e-6;
  return r;
}

CheckResult check_fourier_roundtrip() {
  CheckResult r{"fourier-roundtrip", true, ""};
  double worst = 0.0;
  Rng rng(23);
  for (const auto& g : check_groups()) {
    const int L = std::min(4, g.max_frequency());
    const SamplingPlan& plan = plan_cache(g, L);
    for (int t = 0; t < 25; ++t) {
      FourierCoeffs c = FourierCoeffs::zero(g, L);
      VectorXd flat(c.flat_size());
      for (int i = 0; i < flat.size(); ++i) flat(i) = rng.normal();
      c.set_flat(flat);
      const VectorXd values = ift(c, plan.elements);
      const FourierCoeffs back = ft(values, plan);
      worst = std::max(worst, (back.flat() - flat).cwiseAbs().maxCoeff());
    }
  }
  r.detail = "max coefficient error " + std::to_string(worst);
  r.passed = worst <= 1e-10;
  return r;
}

CheckResult check_steerability() {
  CheckResult r{"basis-steerability", true, ""};
  double worst = 0.0;
  for (const auto& g : check_groups()) {
    const SteerableBasis basis = planar_basis(g, std::min(4, g.max_frequency()),
                                              2, 1.0);
    Rng rng(31);
    worst = std::max(worst, steerability_residual(basis, 200, rng));
  }
  r.detail = "max residual " + std::to_string(worst);
  r.passed = worst <= 1e-10;
  return r;
}

CheckResult check_uniform_reduction() {
  CheckResult r{"uniform-density-reduction", true, ""};
  double worst = 0.0;
  for (const auto& g : check_groups()) {
    const int L = std::min(2, g.max_frequency());
    const SteerableBasis basis = planar_basis(g, L, 2, 1.0);
    const NormalizedLikelihood norm = normalise(init_uniform(g, L));
    Rng rng(41);
    for (const auto& l : irrep_ids(g, L)) {
      for (const auto& J : irrep_ids(g, L)) {
        FieldType fin{g, {{l, 1}}}, fout{g, {{J, 1}}};
        const ProjectionPlan ep = make_projection_plan(
            fin, fout, basis, ProjectionMode::Equivariant, L);
        const ProjectionPlan pp = make_projection_plan(
            fin, fout, basis, ProjectionMode::Probabilistic, L);
        VectorXd we = init_weights(ep, 1.0, rng);
        const VectorXd wp = embed_equivariant_weights(ep, we, pp);
        const auto ke = project_kernel(ep, we, nullptr);
        const auto kp = project_kernel(pp, wp, &norm);
        for (int t = 0; t < 5; ++t) {
          const double x = rng.uniform(-2, 2), y = rng.uniform(-2, 2);
          worst = std::max(
              worst, (ke.evaluate(x, y) - kp.evaluate(x, y)).cwiseAbs().maxCoeff());
        }
      }
    }
  }
  r.detail = "max kernel difference " + std::to_string(worst);
  r.passed = worst <= 1e-10;
  return r;
}

CheckResult check_kl_oracle() {
  CheckResult r{"kl-fourier-oracle", true, ""};
  double worst = 0.0;
  for (const GroupDescriptor& g : {cyclic_group(8), so2_group()}) {
    const int L = std::min(3, g.max_frequency());
    Rng rng(53);
    for (int t = 0; t < 20; ++t) {
      LikelihoodParams p1 = init_uniform(g, L), p0 = init_uniform(g, L);
      for (int i = 0; i < p1.logits->size(); ++i) {
        (*p1.logits)(i) = rng.normal(0.0, 0.7);
        (*p0.logits)(i) = rng.normal(0.0, 0.7);
      }
      const NormalizedLikelihood n1 = normalise(p1), n0 = normalise(p0);
      const double fourier_kl = kl_divergence(n1, n0);
      double direct = 0.0;
      for (int i = 0; i < n1.sampled_values.size(); ++i)
        direct += n1.sampled_values(i) *
                  std::log(n1.sampled_values(i) / n0.sampled_values(i));
      direct /= n1.sampled_values.size();
      worst = std::max(worst, std::abs(fourier_kl - direct));
    }
  }
  r.detail = "max |fourier - direct| " + std::to_string(worst);
  r.passed = worst <= 1e-6;
  return r;
}

CheckResult check_gradients() {
  CheckResult r{"gradcheck", true, ""};
  double worst = 0.0;
  Rng rng(61);
  // composite likelihood losses on C_8
  const GroupDescriptor g = cyclic_group(8);
  const SamplingPlan& plan = plan_cache(g, 2);
  const int c = plan.n_coeffs();
  for (int t = 0; t < 10; ++t) {
    std::vector<double> x0(c);
    do {
      for (auto& v : x0) v = rng.normal(0.0, 0.5);
      VectorXd lv(c);
      for (int i = 0; i < c; ++i) lv(i) = x0[i];
      VectorXd vals = plan.ift_matrix * lv;
      std::sort(vals.data(), vals.data() + vals.size());
      if (vals(vals.size() - 1) - vals(vals.size() - 2) > 0.05) break;
    } while (true);  // keep the argmax unambiguous for the subgradient
    ad::Tensor ref(c, 1);
    for (auto& v : ref.v) v = rng.normal(0.0, 0.5);
    // the KL reference is a stop-gradient, so it stays fixed here
    auto f = [&](std::span<const double> x, std::vector<double>* grad) {
      ad::Tape tape;
      ad::Var l1 = tape.param(std::span(x.data(), c), c, 1);
      const LikelihoodAd a1 = normalise_ad(tape, l1, plan);
      const LikelihoodAd a0 = normalise_ad(tape, tape.constant(ref), plan);
      ad::Var loss = tape.add(alignment_error_ad(tape, a1),
                              kl_divergence_ad(tape, a1, a0));
      const double out = tape.scalar(loss);
      if (grad) {
        tape.backward(loss);
        for (int i = 0; i < c; ++i) (*grad)[i] = tape.grad(l1).v[i];
      }
      return out;
    };
    worst = std::max(worst, ad::gradcheck(f, x0));
  }
  r.detail = "max relative gradient error " + std::to_string(worst);
  r.passed = worst <= 1e-4;
  return r;
}

}  // namespace

std::vector<CheckResult> run_checks(const Options& opts) {
  std::vector<std::pair<std::string, std::function<CheckResult()>>> checks = {
      {"cg-reconstruction", [&] { return check_cg(opts.corrupt_cg); }},
      {"schur-vanishing", [] { return check_schur(); }},
      {"peter-weyl-orthogonality", [] { return check_peter_weyl(); }},
      {"fourier-roundtrip", [] { return check_fourier_roundtrip(); }},
      {"basis-steerability", [] { return check_steerability(); }},
      {"uniform-density-reduction", [] { return check_uniform_reduction(); }},
      {"kl-fourier-oracle", [] { return check_kl_oracle(); }},
      {"gradcheck", [] { return check_gradients(); }},
  };
  std::vector<CheckResult> results;
  for (auto& [name, fn] : checks) {
    if (!opts.filter.empty() && name.find(opts.filter) == std::string::npos)
      continue;
    results.push_back(fn());
  }
  return results;
}

}  // namespace steer::verify
