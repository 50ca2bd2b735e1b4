#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "steer/kernel_projection.hpp"
#include "steer/verify.hpp"

using namespace steer;

namespace {

std::vector<IrrepId> ids_up_to(const GroupDescriptor& g, int f) {
  std::vector<IrrepId> out;
  for (const auto& ir : irreps_up_to(g, f)) out.push_back(ir.id);
  return out;
}

NormalizedLikelihood random_likelihood(const GroupDescriptor& g, int L,
                                       std::uint64_t seed, double scale = 0.7) {
  LikelihoodParams p = init_uniform(g, L);
  Rng rng(seed);
  for (int i = 0; i < p.logits->size(); ++i) (*p.logits)(i) = rng.normal(0, scale);
  return normalise(p);
}

// brute-force oracle: mean_h lambda(h) (psi_j (x) psi_j')(h) over the grid
MatrixXd brute_average(const NormalizedLikelihood& norm, const IrrepId& j,
                       const IrrepId& j2) {
  const auto& plan = norm.plan();
  const int dj = irrep_info(norm.group, j).dim;
  const int dj2 = irrep_info(norm.group, j2).dim;
  MatrixXd avg = MatrixXd::Zero(dj * dj2, dj * dj2);
  for (int i = 0; i < plan.n_samples(); ++i)
    avg += norm.sampled_values(i) *
           kron(irrep_matrix(norm.group, j, plan.elements[i]),
                irrep_matrix(norm.group, j2, plan.elements[i]));
  return avg / plan.n_samples();
}

}  // namespace

TEST_CASE("point basis holds the trivial element") {
  const auto b = point_basis(o2_group(), 4);
  REQUIRE(b.elements.size() == 1);
  CHECK(b.elements[0].id == IrrepId{0, 0});
  CHECK(b.evaluate(0, 0, 0)(0) == 1.0);
}

TEST_CASE("planar basis") {
  for (const auto& g : {cyclic_group(4), dihedral_group(4), so2_group(), o2_group()}) {
    const auto b = planar_basis(g, std::min(4, g.max_frequency()), 3, 0.8);
    CHECK(b.elements.size() >= 3u);

    // trivial elements are rotation-invariant ring functions
    Rng rng(1);
    for (std::size_t i = 0; i < b.elements.size(); ++i) {
      if (!(b.elements[i].id == IrrepId{0, 0})) continue;
      const double r = 1.3;
      const double v0 = b.evaluate(static_cast<int>(i), r, 0)(0);
      for (int t = 0; t < 10; ++t) {
        const double phi = rng.uniform(0, kTau);
        CHECK(b.evaluate(static_cast<int>(i), r * std::cos(phi),
                         r * std::sin(phi))(0) == doctest::Approx(v0));
      }
    }

    // steerability at random continuous points
    Rng rng2(2);
    CHECK(steerability_residual(b, 200, rng2) <= 1e-10);

    // angular elements vanish at the origin
    for (std::size_t i = 0; i < b.elements.size(); ++i)
      if (!(b.elements[i].id == IrrepId{0, 0}))
        CHECK(b.evaluate(static_cast<int>(i), 0, 0).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("build_cjj: uniform density reduces to the intertwiner projector") {
  for (const auto& g : {cyclic_group(4), o2_group()}) {
    const int L = std::min(2, g.max_frequency());
    const auto uniform = normalise(init_uniform(g, L));
    const auto ids = ids_up_to(g, L);
    for (const auto& a : ids) {
      for (const auto& b : ids) {
        const MatrixXd c = build_cjj(uniform, a, b);
        const auto& d = decompose_tensor(g, a, b);
        if (d.multiplicity({0, 0}) == 0) {
          // Schur: no trivial component, the map vanishes
          CHECK(c.cwiseAbs().maxCoeff() <= 1e-12);
        } else {
          // c Q^T equals the projector sum_r Q_r Q_r^T
          MatrixXd proj = MatrixXd::Zero(d.dim, d.dim);
          int triv_block = -1;
          for (std::size_t blk = 0; blk < d.blocks.size(); ++blk)
            if (d.blocks[blk].id == IrrepId{0, 0})
              triv_block = static_cast<int>(blk);
          for (int s = 0; s < d.blocks[triv_block].mult; ++s) {
            const MatrixXd q = d.q_block(triv_block, s);
            proj += q * q.transpose();
          }
          CHECK((c * d.Q.transpose() - proj).cwiseAbs().maxCoeff() <= 1e-12);
        }
      }
    }
  }
}

TEST_CASE("build_cjj matches the brute-force average on finite groups") {
  // With the full bandlimit the softmax samples are exactly representable,
  // so the enumerated average equals the coefficient construction.
  std::vector<GroupDescriptor> finite;
  for (int n = 1; n <= 8; ++n) {
    finite.push_back(cyclic_group(n));
    finite.push_back(dihedral_group(n));
  }
  for (const auto& g : finite) {
    const int L = g.max_frequency();
    const auto norm = random_likelihood(g, L, 99);
    const auto ids = ids_up_to(g, std::min(2, g.max_frequency()));
    for (const auto& a : ids) {
      for (const auto& b : ids) {
        const auto& d = decompose_tensor(g, a, b);
        const MatrixXd lhs = build_cjj(norm, a, b) * d.Q.transpose();
        const MatrixXd rhs = brute_average(norm, a, b);
        CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-8);
      }
    }
  }
}

TEST_CASE("build_cjj under a truncating bandlimit averages the bandlimited density") {
  // When L cuts frequencies out of the tensor product, c^{jj'} equals the
  // enumerated average of the bandlimited synthesis of lambda-hat.
  const auto g = cyclic_group(8);
  const int L = 2;  // below the frequency-4 content of psi_2 (x) psi_2
  const auto norm = random_likelihood(g, L, 77);
  const auto& plan = norm.plan();
  const VectorXd lam_bl = ift(norm.coeffs, plan.elements);
  for (const auto& a : ids_up_to(g, 2)) {
    for (const auto& b : ids_up_to(g, 2)) {
      const auto& d = decompose_tensor(g, a, b);
      const MatrixXd lhs = build_cjj(norm, a, b) * d.Q.transpose();
      MatrixXd rhs = MatrixXd::Zero(d.dim, d.dim);
      for (int i = 0; i < plan.n_samples(); ++i)
        rhs += lam_bl(i) * kron(irrep_matrix(g, a, plan.elements[i]),
                                irrep_matrix(g, b, plan.elements[i]));
      rhs /= plan.n_samples();
      CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-8);
    }
  }
}

TEST_CASE("equivariant kernels satisfy the steerability constraint") {
  for (const auto& g : {cyclic_group(4), o2_group()}) {
    const int f = std::min(2, g.max_frequency());
    const auto basis = planar_basis(g, f, 2, 1.0);
    Rng rng(7);
    for (const auto& l : ids_up_to(g, f)) {
      for (const auto& J : ids_up_to(g, f)) {
        FieldType fin{g, {{l, 1}}}, fout{g, {{J, 1}}};
        const auto plan = make_projection_plan(fin, fout, basis,
                                               ProjectionMode::Equivariant, f);
        const VectorXd w = init_weights(plan, 1.0, rng);
        const auto kernel = project_kernel(plan, w, nullptr);
        double scale = 1e-12;
        for (int t = 0; t < 20; ++t) {
          const double x = rng.uniform(-1.5, 1.5), y = rng.uniform(-1.5, 1.5);
          scale = std::max(scale, kernel.evaluate(x, y).cwiseAbs().maxCoeff());
        }
        for (int t = 0; t < 100; ++t) {
          const GroupElement h = random_element(g, rng);
          const Eigen::Vector2d x(rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5));
          const Eigen::Vector2d hx = act_on_plane(inverse(h, g), x);
          const MatrixXd lhs = kernel.evaluate(x(0), x(1));
          const MatrixXd rhs = irrep_matrix(g, J, h) *
                               kernel.evaluate(hx(0), hx(1)) *
                               irrep_matrix(g, l, h).transpose();
          CHECK((lhs - rhs).cwiseAbs().maxCoeff() / scale <= 1e-9);
        }
      }
    }
  }
}

TEST_CASE("probabilistic projection with uniform density equals equivariant") {
  for (const auto& g : {cyclic_group(4), dihedral_group(4), so2_group(), o2_group()}) {
    const int f = std::min(2, g.max_frequency());
    const auto basis = planar_basis(g, f, 2, 1.0);
    const auto uniform = normalise(init_uniform(g, f));
    Rng rng(13);
    for (const auto& l : ids_up_to(g, f)) {
      for (const auto& J : ids_up_to(g, f)) {
        FieldType fin{g, {{l, 1}}}, fout{g, {{J, 1}}};
        const auto ep = make_projection_plan(fin, fout, basis,
                                             ProjectionMode::Equivariant, f);
        const auto pp = make_projection_plan(fin, fout, basis,
                                             ProjectionMode::Probabilistic, f);
        const VectorXd we = init_weights(ep, 1.0, rng);
        const VectorXd wp = embed_equivariant_weights(ep, we, pp);
        const auto ke = project_kernel(ep, we, nullptr);
        const auto kp = project_kernel(pp, wp, &uniform);
        for (int t = 0; t < 10; ++t) {
          const double x = rng.uniform(-1.5, 1.5), y = rng.uniform(-1.5, 1.5);
          CHECK((ke.evaluate(x, y) - kp.evaluate(x, y)).cwiseAbs().maxCoeff() <=
                1e-10);
        }
      }
    }
  }
}

TEST_CASE("preliminary mode: zero noise keeps cross-irrep blocks at zero") {
  const auto g = o2_group();
  FieldType fin{g, {{{1, 1}, 1}}}, fout{g, {{{1, 2}, 1}}};
  const auto basis = point_basis(g, 0);
  const auto plan =
      make_projection_plan(fin, fout, basis, ProjectionMode::Preliminary, 4);
  Rng rng(17);
  const VectorXd c0 = init_prelim_c(plan, 0.0, rng);
  // psi_{1,1} (x) psi_{1,2} has no trivial component: every c block is zero
  CHECK(c0.cwiseAbs().maxCoeff() == 0.0);
  const VectorXd w = init_weights(plan, 1.0, rng);
  const MatrixXd k = project_linear_map(plan, w, nullptr, &c0);
  CHECK(k.cwiseAbs().maxCoeff() == 0.0);

  // with noise the blocks move away from zero
  const VectorXd c1 = init_prelim_c(plan, 1e-3, rng);
  CHECK(c1.cwiseAbs().maxCoeff() > 0.0);
  CHECK(c1.cwiseAbs().maxCoeff() < 1e-2);

  // matching pair: uniform blocks are preserved, not noised
  FieldType fmatch{g, {{{1, 1}, 1}}};
  const auto plan2 =
      make_projection_plan(fmatch, fmatch, basis, ProjectionMode::Preliminary, 4);
  const VectorXd cm = init_prelim_c(plan2, 1e-3, rng);
  const auto& slot = plan2.cjj[0];
  bool any_exact = false;
  for (int p = 0; p < slot.dim; ++p)
    for (int q = 0; q < slot.dim; ++q)
      if (cm(slot.c_offset + p * slot.dim + q) == slot.c_uniform(p, q) &&
          slot.c_uniform(p, q) != 0.0)
        any_exact = true;
  CHECK(any_exact);
}

TEST_CASE("project_linear_map: intertwiner property under the uniform density") {
  for (const auto& g : {cyclic_group(4), o2_group()}) {
    const int f = std::min(2, g.max_frequency());
    FieldType fin = irrep_field(g, f, 2);
    FieldType fout = irrep_field(g, f, 1);
    const auto basis = point_basis(g, 0);
    const auto plan =
        make_projection_plan(fin, fout, basis, ProjectionMode::Equivariant, f);
    Rng rng(19);
    const VectorXd w = init_weights(plan, 1.0, rng);
    const MatrixXd W = project_linear_map(plan, w, nullptr);
    for (const auto& h : sample_grid(g, 16)) {
      const MatrixXd lhs = direct_sum_matrix(fout, h) * W;
      const MatrixXd rhs = W * direct_sum_matrix(fin, h);
      CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-9);
    }
  }
}

TEST_CASE("trivial-to-trivial map is an unconstrained scalar") {
  const auto g = o2_group();
  FieldType f{g, {{{0, 0}, 1}}};
  const auto plan = make_projection_plan(f, f, point_basis(g, 0),
                                         ProjectionMode::Equivariant, 2);
  CHECK(plan.n_weights == 1);
  VectorXd w(1);
  w << -1.37;
  CHECK(project_linear_map(plan, w, nullptr)(0, 0) == doctest::Approx(-1.37));
}

TEST_CASE("near-delta density brings the projection towards the raw weights") {
  const auto g = so2_group();
  const int L = 4;
  // sharply peaked logits at the identity
  LikelihoodParams p = init_uniform(g, L);
  const SamplingPlan& plan_l = p.plan();
  VectorXd samples(plan_l.n_samples());
  for (int i = 0; i < plan_l.n_samples(); ++i)
    samples(i) = 6.0 * std::cos(plan_l.elements[i].theta) +
                 2.0 * std::cos(2.0 * plan_l.elements[i].theta);
  p.logits->noalias() = plan_l.ft_matrix * samples;
  const auto sharp = normalise(p);

  FieldType fin{g, {{{0, 1}, 1}}}, fout{g, {{{0, 2}, 1}}};
  const auto plan = make_projection_plan(fin, fout, point_basis(g, 0),
                                         ProjectionMode::Probabilistic, L);
  Rng rng(23);
  const VectorXd w = init_weights(plan, 1.0, rng);
  const MatrixXd proj = project_linear_map(plan, w, &sharp);

  // oracle: average the raw tensor-product action against the sampled density
  // directly (psi_l (x) psi_J averaging applied to the same weights)
  MatrixXd avg = MatrixXd::Zero(4, 4);
  for (int i = 0; i < plan_l.n_samples(); ++i)
    avg += sharp.sampled_values(i) *
           kron(irrep_matrix(g, {0, 1}, plan_l.elements[i]),
                irrep_matrix(g, {0, 2}, plan_l.elements[i]));
  avg /= plan_l.n_samples();
  const auto& outer = decompose_tensor(g, {0, 1}, {0, 2});
  // reconstruct the projected map from the oracle average: K = unvec(avg Q w)
  const VectorXd kvec = avg * outer.Q * w;
  MatrixXd expect(2, 2);
  for (int col = 0; col < 2; ++col)
    for (int row = 0; row < 2; ++row) expect(row, col) = kvec(col * 2 + row);
  CHECK((proj - expect).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("projection is linear in the weights") {
  const auto g = o2_group();
  FieldType fin{g, {{{1, 1}, 1}}}, fout{g, {{{1, 1}, 1}}};
  const auto norm = random_likelihood(g, 2, 31);
  const auto plan = make_projection_plan(fin, fout, point_basis(g, 0),
                                         ProjectionMode::Probabilistic, 2);
  Rng rng(37);
  const VectorXd w1 = init_weights(plan, 1.0, rng);
  const VectorXd w2 = init_weights(plan, 1.0, rng);
  const MatrixXd m1 = project_linear_map(plan, w1, &norm);
  const MatrixXd m2 = project_linear_map(plan, w2, &norm);
  const MatrixXd m12 = project_linear_map(plan, 2.0 * w1 - 3.0 * w2, &norm);
  CHECK((m12 - (2.0 * m1 - 3.0 * m2)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("kernel gradients match finite differences") {
  const auto g = o2_group();
  const int L = 2;
  FieldType fin{g, {{{1, 1}, 1}}}, fout{g, {{{1, 2}, 1}}};
  const auto basis = planar_basis(g, 2, 2, 1.0);
  const auto plan =
      make_projection_plan(fin, fout, basis, ProjectionMode::Probabilistic, L);
  const SamplingPlan& lik_plan = plan_cache(g, L);
  const int c = lik_plan.n_coeffs();
  Rng rng(41);
  double worst = 0.0;
  for (int t = 0; t < 5; ++t) {
    const double px = rng.uniform(-1, 1), py = rng.uniform(-1, 1);
    std::vector<double> x0(plan.n_weights + c);
    for (auto& v : x0) v = rng.normal(0, 0.5);
    auto f = [&](std::span<const double> x, std::vector<double>* grad) {
      ad::Tape tape;
      ad::Var w = tape.param(std::span(x.data(), plan.n_weights), 1,
                             plan.n_weights);
      ad::Var logits = tape.param(std::span(x.data() + plan.n_weights, c), c, 1);
      const auto lik = normalise_ad(tape, logits, lik_plan);
      ad::Var k = assemble_map_ad(tape, plan, w, lik.coeffs, ad::Var{}, px, py);
      ad::Var loss = tape.mean_all(tape.square(k));
      const double out = tape.scalar(loss);
      if (grad) {
        tape.backward(loss);
        for (int i = 0; i < plan.n_weights; ++i) (*grad)[i] = tape.grad(w).v[i];
        for (int i = 0; i < c; ++i)
          (*grad)[plan.n_weights + i] = tape.grad(logits).v[i];
      }
      return out;
    };
    worst = std::max(worst, ad::gradcheck(f, x0));
  }
  CHECK(worst <= 1e-4);
}

TEST_CASE("verification suite: fresh build passes, mutated CG fails by name") {
  verify::Options clean;
  clean.filter = "cg-reconstruction";
  const auto ok = verify::run_checks(clean);
  REQUIRE(ok.size() == 1);
  CHECK(ok[0].passed);

  verify::Options mutated = clean;
  mutated.corrupt_cg = true;
  const auto bad = verify::run_checks(mutated);
  REQUIRE(bad.size() == 1);
  CHECK(bad[0].name == "cg-reconstruction");
  CHECK_FALSE(bad[0].passed);
}

TEST_CASE("equivariance error of equivariant and broken maps") {
  const auto g = cyclic_group(4);
  FieldType fin = irrep_field(g, 2, 2);
  FieldType fout = irrep_field(g, 2, 2);
  const auto plan = make_projection_plan(fin, fout, point_basis(g, 0),
                                         ProjectionMode::Equivariant, 2);
  Rng rng(43);
  const VectorXd w = init_weights(plan, 1.0, rng);
  const MatrixXd W = project_linear_map(plan, w, nullptr);

  MatrixXd batch(16, fin.dim());
  for (int i = 0; i < batch.size(); ++i)
    batch(i / fin.dim(), i % fin.dim()) = rng.normal();

  auto fn = [&](const MatrixXd& b) { return MatrixXd(b * W.transpose()); };
  for (const auto& h : sample_grid(g, 0)) {
    CHECK(equivariance_error(fn, fin, fout, batch, h) <= 1e-8);
  }
  // identity element always gives zero error
  CHECK(equivariance_error(fn, fin, fout, batch, identity_element()) ==
        doctest::Approx(0.0));

  // a random non-equivariant map has visible error away from the identity
  MatrixXd raw(fout.dim(), fin.dim());
  for (int i = 0; i < raw.size(); ++i)
    raw(i / fin.dim(), i % fin.dim()) = rng.normal();
  auto fn_raw = [&](const MatrixXd& b) { return MatrixXd(b * raw.transpose()); };
  CHECK(equivariance_error(fn_raw, fin, fout, batch,
                           make_element(g, kTau / 4, false)) > 1e-2);
}
