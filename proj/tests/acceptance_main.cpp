// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Training-heavy criteria share their runs through RunCache.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <optional>

#include "steer/vectors_task.hpp"

using namespace steer;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<GroupDescriptor> sweep_groups() {
  return {cyclic_group(4), dihedral_group(4), so2_group(), o2_group()};
}

std::vector<IrrepId> sweep_irreps(const GroupDescriptor& g, int f = 4) {
  std::vector<IrrepId> out;
  for (const auto& ir : irreps_up_to(g, f)) out.push_back(ir.id);
  return out;
}

struct TrainedRun {
  std::uint64_t seed;
  double test_mse;
  nn::Model model;
};

struct RunCache {
  std::map<std::string, std::vector<TrainedRun>> runs;
  double train_seconds = 0.0;

  const std::vector<TrainedRun>& get(const std::string& preset_name) {
    auto it = runs.find(preset_name);
    if (it != runs.end()) return it->second;
    const auto t0 = Clock::now();
    const auto& preset = tasks::find_preset(preset_name);
    std::vector<TrainedRun> out;
    for (const auto seed : preset.seeds) {
      double mse = 0.0;
      nn::Model model = tasks::train_preset_seed(preset, seed, nullptr, &mse);
      out.push_back({seed, mse, std::move(model)});
    }
    train_seconds += seconds_since(t0);
    return runs.emplace(preset_name, std::move(out)).first->second;
  }
};

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  const int n = static_cast<int>(a.size());
  auto ranks = [n](const std::vector<double>& v) {
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int i, int j) { return v[i] < v[j]; });
    std::vector<double> r(n);
    for (int i = 0; i < n; ++i) r[idx[i]] = i;
    return r;
  };
  const auto ra = ranks(a), rb = ranks(b);
  const double mean = (n - 1) / 2.0;
  double num = 0.0, da = 0.0, db = 0.0;
  for (int i = 0; i < n; ++i) {
    num += (ra[i] - mean) * (rb[i] - mean);
    da += (ra[i] - mean) * (ra[i] - mean);
    db += (rb[i] - mean) * (rb[i] - mean);
  }
  return num / std::sqrt(da * db);
}

// lambda and epsilon profiles of a trained model over the evaluation grid
struct Profile {
  std::vector<GroupElement> grid;
  std::vector<std::vector<double>> lambda;  // per layer
  std::vector<std::vector<double>> eps;     // per layer
};

Profile model_profile(const nn::Model& model, int grid_per_coset = 8) {
  Profile p;
  p.grid = sample_grid(model.config().group, grid_per_coset);
  const tasks::VectorsData data = tasks::generate_vectors(128, 12345);
  for (std::size_t li = 0; li < model.layers().size(); ++li) {
    const auto& layer = model.layers()[li];
    const NormalizedLikelihood norm = model.likelihood(layer.layer_id);
    const MatrixXd h = model.layer_input(data.inputs, static_cast<int>(li));
    std::vector<double> lam, ep;
    for (const auto& e : p.grid) {
      lam.push_back(evaluate(norm, e));
      ep.push_back(equivariance_error(
          [&](const MatrixXd& b) {
            return model.apply_layer(b, static_cast<int>(li));
          },
          layer.plan.field_in, layer.out_feat, h, e));
    }
    p.lambda.push_back(lam);
    p.eps.push_back(ep);
  }
  return p;
}

struct Criterion {
  int id;
  std::string name;
  std::function<std::pair<bool, std::string>()> run;
};

}  // namespace

int main() {
  RunCache cache;
  std::vector<Criterion> criteria;

  // ---- 1: steerability of equivariant-mode planar kernels ------------------
  criteria.push_back({1, "steerability of equivariant kernels", [&] {
    const auto t0 = Clock::now();
    double worst = 0.0;
    for (const auto& g : sweep_groups()) {
      const int f = std::min(4, g.max_frequency());
      const auto basis = planar_basis(g, f, 2, 1.0);
      Rng rng(101);
      for (const auto& l : sweep_irreps(g)) {
        for (const auto& J : sweep_irreps(g)) {
          FieldType fin{g, {{l, 1}}}, fout{g, {{J, 1}}};
          const auto plan = make_projection_plan(fin, fout, basis,
                                                 ProjectionMode::Equivariant, f);
          const VectorXd w = init_weights(plan, 1.0, rng);
          const auto kernel = project_kernel(plan, w, nullptr);
          double scale = 1e-12;
          for (int t = 0; t < 16; ++t)
            scale = std::max(scale, kernel
                                        .evaluate(rng.uniform(-1.5, 1.5),
                                                  rng.uniform(-1.5, 1.5))
                                        .cwiseAbs()
                                        .maxCoeff());
          for (int t = 0; t < 100; ++t) {
            const GroupElement h = random_element(g, rng);
            const Eigen::Vector2d x(rng.uniform(-1.5, 1.5),
                                    rng.uniform(-1.5, 1.5));
            const Eigen::Vector2d hx = act_on_plane(inverse(h, g), x);
            const MatrixXd lhs = kernel.evaluate(x(0), x(1));
            const MatrixXd rhs = irrep_matrix(g, J, h) *
                                 kernel.evaluate(hx(0), hx(1)) *
                                 irrep_matrix(g, l, h).transpose();
            worst =
                std::max(worst, (lhs - rhs).cwiseAbs().maxCoeff() / scale);
          }
        }
      }
    }
    const double secs = seconds_since(t0);
    char buf[160];
    std::snprintf(buf, sizeof buf, "max relative residual %.3g, %.1fs", worst,
                  secs);
    return std::make_pair(worst <= 1e-9 && secs <= 60.0, std::string(buf));
  }});

  // ---- 2: uniform-density reduction -----------------------------------------
  criteria.push_back({2, "uniform-density reduction", [&] {
    double worst = 0.0;
    for (const auto& g : sweep_groups()) {
      const int f = std::min(4, g.max_frequency());
      const auto basis = planar_basis(g, f, 2, 1.0);
      const auto uniform = normalise(init_uniform(g, f));
      Rng rng(202);
      for (const auto& l : sweep_irreps(g)) {
        for (const auto& J : sweep_irreps(g)) {
          FieldType fin{g, {{l, 1}}}, fout{g, {{J, 1}}};
          const auto ep = make_projection_plan(fin, fout, basis,
                                               ProjectionMode::Equivariant, f);
          const auto pp = make_projection_plan(
              fin, fout, basis, ProjectionMode::Probabilistic, f);
          const VectorXd we = init_weights(ep, 1.0, rng);
          const VectorXd wp = embed_equivariant_weights(ep, we, pp);
          const auto ke = project_kernel(ep, we, nullptr);
          const auto kp = project_kernel(pp, wp, &uniform);
          for (int t = 0; t < 8; ++t) {
            const double x = rng.uniform(-1.5, 1.5), y = rng.uniform(-1.5, 1.5);
            worst = std::max(worst, (ke.evaluate(x, y) - kp.evaluate(x, y))
                                        .cwiseAbs()
                                        .maxCoeff());
          }
        }
      }
    }
    char buf[120];
    std::snprintf(buf, sizeof buf, "max |equivariant - probabilistic| %.3g",
                  worst);
    return std::make_pair(worst <= 1e-10, std::string(buf));
  }});

  // ---- 3: CG correctness -----------------------------------------------------
  criteria.push_back({3, "clebsch-gordan correctness", [&] {
    double worst_rec = 0.0, worst_q = 0.0;
    for (const auto& g : sweep_groups()) {
      Rng rng(303);
      for (const auto& a : sweep_irreps(g)) {
        for (const auto& b : sweep_irreps(g)) {
          const auto& d = decompose_tensor(g, a, b);
          worst_q = std::max(worst_q, (d.Q.transpose() * d.Q -
                                       MatrixXd::Identity(d.dim, d.dim))
                                          .cwiseAbs()
                                          .maxCoeff());
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
    char buf[120];
    std::snprintf(buf, sizeof buf, "reconstruction %.3g, orthogonality %.3g",
                  worst_rec, worst_q);
    return std::make_pair(worst_rec <= 1e-8 && worst_q <= 1e-10,
                          std::string(buf));
  }});

  // ---- 4: Schur vanishing ----------------------------------------------------
  criteria.push_back({4, "schur vanishing", [&] {
    double worst = 0.0;
    for (const auto& g : sweep_groups()) {
      for (const auto& a : sweep_irreps(g)) {
        for (const auto& b : sweep_irreps(g)) {
          if (a == b) continue;
          const auto grid = averaging_grid(g, a.freq + b.freq);
          const int d =
              irrep_info(g, a).dim * irrep_info(g, b).dim;
          MatrixXd avg = MatrixXd::Zero(d, d);
          for (const auto& h : grid)
            avg += kron(irrep_matrix(g, a, h), irrep_matrix(g, b, h));
          avg /= static_cast<double>(grid.size());
          worst = std::max(worst, avg.cwiseAbs().maxCoeff());
        }
      }
    }
    char buf[96];
    std::snprintf(buf, sizeof buf, "max averaged norm %.3g", worst);
    return std::make_pair(worst <= 1e-8, std::string(buf));
  }});

  // ---- 5: Fourier round trip --------------------------------------------------
  criteria.push_back({5, "fourier round trip", [&] {
    double worst = 0.0;
    for (const auto& g : sweep_groups()) {
      const int L = std::min(4, g.max_frequency());
      const SamplingPlan& plan = plan_cache(g, L);
      Rng rng(505);
      for (int t = 0; t < 100; ++t) {
        FourierCoeffs c = FourierCoeffs::zero(g, L);
        VectorXd flat(c.flat_size());
        for (int i = 0; i < flat.size(); ++i) flat(i) = rng.normal();
        c.set_flat(flat);
        const FourierCoeffs back = ft(ift(c, plan.elements), plan);
        worst = std::max(worst, (back.flat() - flat).cwiseAbs().maxCoeff());
      }
    }
    char buf[96];
    std::snprintf(buf, sizeof buf, "max coefficient error %.3g", worst);
    return std::make_pair(worst <= 1e-10, std::string(buf));
  }});

  // ---- 6: KL oracle equivalence ------------------------------------------------
  criteria.push_back({6, "fourier-domain KL equals the direct oracle", [&] {
    double worst = 0.0;
    for (const GroupDescriptor& g : {cyclic_group(8), so2_group()}) {
      const int L = std::min(3, g.max_frequency());
      Rng rng(606);
      for (int t = 0; t < 100; ++t) {
        LikelihoodParams p1 = init_uniform(g, L), p0 = init_uniform(g, L);
        for (int i = 0; i < p1.logits->size(); ++i) {
          (*p1.logits)(i) = rng.normal(0.0, 0.7);
          (*p0.logits)(i) = rng.normal(0.0, 0.7);
        }
        const auto n1 = normalise(p1), n0 = normalise(p0);
        const double fourier = kl_divergence(n1, n0);
        double direct = 0.0;
        const int n = static_cast<int>(n1.sampled_values.size());
        for (int i = 0; i < n; ++i)
          direct += n1.sampled_values(i) *
                    std::log(n1.sampled_values(i) / n0.sampled_values(i));
        direct /= n;
        worst = std::max(worst, std::abs(fourier - direct));
      }
    }
    char buf[96];
    std::snprintf(buf, sizeof buf, "max |fourier - direct| %.3g", worst);
    return std::make_pair(worst <= 1e-6, std::string(buf));
  }});

  // ---- 7: gradient checks --------------------------------------------------------
  criteria.push_back({7, "gradient checks (primitives and composite losses)", [&] {
    double worst = 0.0;
    Rng rng(707);
    // 30 random primitive graphs
    for (int trial = 0; trial < 30; ++trial) {
      const int r = rng.uniform_int(1, 3), c = rng.uniform_int(1, 3);
      const int n = r * c;
      std::vector<double> x0(2 * n);
      for (auto& v : x0) v = rng.normal(0.0, 0.8);
      const int variant = trial % 6;
      auto f = [&](std::span<const double> x, std::vector<double>* grad) {
        ad::Tape t;
        ad::Var a = t.param(std::span(x.data(), n), r, c);
        ad::Var b = t.param(std::span(x.data() + n, n), r, c);
        ad::Var out;
        switch (variant) {
          case 0: out = t.mean_all(t.mul(t.exp(a), t.sigmoid(b))); break;
          case 1: out = t.sum_all(t.elu(t.sub(a, b))); break;
          case 2: out = t.dot(t.square(a), t.elu(b)); break;
          case 3: out = t.mean_all(t.matmul(a, b, false, true)); break;
          case 4: out = t.max_all(t.add(t.square(a), t.square(b))); break;
          default:
            out = t.mean_all(t.div(a, t.add_const(t.square(b), 1.0)));
            break;
        }
        const double v = t.scalar(out);
        if (grad) {
          t.backward(out);
          for (int i = 0; i < n; ++i) {
            (*grad)[i] = t.grad(a).v[i];
            (*grad)[n + i] = t.grad(b).v[i];
          }
        }
        return v;
      };
      worst = std::max(worst, ad::gradcheck(f, x0));
    }
    // 12 likelihood-loss configurations (KL reference held constant: it is
    // a stop-gradient by contract)
    const SamplingPlan& plan = plan_cache(cyclic_group(8), 2);
    const int c = plan.n_coeffs();
    for (int trial = 0; trial < 12; ++trial) {
      std::vector<double> x0(c);
      do {
        for (auto& v : x0) v = rng.normal(0.0, 0.6);
        VectorXd lv(c);
        for (int i = 0; i < c; ++i) lv(i) = x0[i];
        VectorXd vals = plan.ift_matrix * lv;
        std::sort(vals.data(), vals.data() + vals.size());
        if (vals(vals.size() - 1) - vals(vals.size() - 2) > 0.05) break;
      } while (true);  // keep the argmax unambiguous for the subgradient
      ad::Tensor ref(c, 1);
      for (auto& v : ref.v) v = rng.normal(0.0, 0.6);
      auto f = [&](std::span<const double> x, std::vector<double>* grad) {
        ad::Tape t;
        ad::Var l1 = t.param(std::span(x.data(), c), c, 1);
        const auto a1 = normalise_ad(t, l1, plan);
        const auto a0 = normalise_ad(t, t.constant(ref), plan);
        ad::Var loss = t.add(alignment_error_ad(t, a1),
                             kl_divergence_ad(t, a1, a0));
        const double v = t.scalar(loss);
        if (grad) {
          t.backward(loss);
          for (int i = 0; i < c; ++i) (*grad)[i] = t.grad(l1).v[i];
        }
        return v;
      };
      worst = std::max(worst, ad::gradcheck(f, x0));
    }
    // 8 full training-loss configurations on a small model:
    // d(task + a_align L_align + a_kl L_KL)/d(all parameters)
    for (int trial = 0; trial < 8; ++trial) {
      nn::ModelConfig cfg;
      cfg.group = cyclic_group(4);
      cfg.mode = ProjectionMode::Probabilistic;
      cfg.nonlin = trial % 2 == 0 ? nn::Nonlin::Gated : nn::Nonlin::FourierElu;
      cfg.bandlimit = 2;
      cfg.hidden_freqs = {2, 2};
      cfg.copies = 1;
      cfg.alpha_align = 2.0;
      cfg.alpha_kl = 3.0;
      // uniform references keep the full loss differentiable in every
      // parameter (layer-to-layer pairs hold the reference side constant)
      cfg.kl_pairs = {{1, -1}, {2, -1}};
      cfg.seed = 700 + trial;
      nn::Model model(cfg);
      const tasks::VectorsData data = tasks::generate_vectors(12, 70 + trial);
      MatrixXd y = data.angle_target;

      // pack all parameters into one vector
      std::vector<VectorXd*> params;
      for (auto& [id, lik] : model.likelihoods_mut())
        params.push_back(lik.logits.get());
      for (auto& l : model.layers_mut()) {
        params.push_back(&l.weights);
        params.push_back(&l.bias);
        if (l.has_nonlin) params.push_back(&l.norm_log_scale);
      }
      int total = 0;
      for (auto* p : params) total += static_cast<int>(p->size());
      std::vector<double> x0(total);
      {
        int off = 0;
        Rng prng(7000 + trial);
        for (auto* p : params)
          for (int i = 0; i < p->size(); ++i)
            x0[off++] = (*p)(i) + 0.1 * prng.normal();
      }
      worst = std::max(worst, [&] {
        // analytic gradients via one backward pass
        std::vector<double> analytic(total, 0.0);
        {
          int off = 0;
          for (auto* p : params)
            for (int i = 0; i < p->size(); ++i) (*p)(i) = x0[off++];
        }
        const auto grads = model.loss_gradients(data.inputs, y);
        {
          int off = 0;
          for (std::size_t pi = 0; pi < params.size(); ++pi)
            for (int i = 0; i < params[pi]->size(); ++i)
              analytic[off++] = grads[pi](i);
        }
        double w = 0.0;
        const double step = 1e-5;
        for (int k = 0; k < total; ++k) {
          auto set = [&](double delta) {
            int off = 0;
            for (auto* p : params)
              for (int i = 0; i < p->size(); ++i) {
                (*p)(i) = x0[off] + (off == k ? delta : 0.0);
                ++off;
              }
          };
          set(step);
          const double fp = model.loss_value(data.inputs, y);
          set(-step);
          const double fm = model.loss_value(data.inputs, y);
          set(0.0);
          const double num = (fp - fm) / (2 * step);
          const double den =
              std::max({std::abs(num), std::abs(analytic[k]), 1e-6});
          w = std::max(w, std::abs(num - analytic[k]) / den);
        }
        return w;
      }());
    }
    char buf[96];
    std::snprintf(buf, sizeof buf, "max relative gradient error %.3g", worst);
    return std::make_pair(worst <= 1e-4, std::string(buf));
  }});

  // ---- 8: vectors angle reproduction --------------------------------------------
  criteria.push_back({8, "vectors/angle ordering (partial vs invariant)", [&] {
    const auto t0 = Clock::now();
    const auto& prob = cache.get("pescnn-gated-angle");
    const auto& emlp = cache.get("emlp-gated-angle");
    double prob_mean = 0.0, emlp_mean = 0.0;
    for (const auto& r : prob) prob_mean += r.test_mse / prob.size();
    for (const auto& r : emlp) emlp_mean += r.test_mse / emlp.size();
    const double secs = seconds_since(t0);
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "probabilistic %.4f (<= 0.15), equivariant %.3f (>= 1.0), %.0fs",
                  prob_mean, emlp_mean, secs);
    return std::make_pair(prob_mean <= 0.15 && emlp_mean >= 1.0 &&
                              cache.train_seconds <= 1800.0,
                          std::string(buf));
  }});

  // ---- 9: alignment anchors the density at the identity ---------------------------
  criteria.push_back({9, "alignment anchors the argmax at the identity", [&] {
    int aligned_seeds = 0;
    for (const auto& run : cache.get("pescnn-gated-angle")) {
      bool all_layers = true;
      for (const auto& layer : run.model.layers()) {
        const auto norm = run.model.likelihood(layer.layer_id);
        int argmax = 0;
        for (int i = 1; i < norm.sampled_values.size(); ++i)
          if (norm.sampled_values(i) > norm.sampled_values(argmax)) argmax = i;
        all_layers = all_layers && argmax == 0;
      }
      if (all_layers) ++aligned_seeds;
    }
    int misaligned_seeds = 0;
    for (const auto& run : cache.get("pescnn-gated-angle-noalign")) {
      for (const auto& layer : run.model.layers()) {
        const auto norm = run.model.likelihood(layer.layer_id);
        int argmax = 0;
        for (int i = 1; i < norm.sampled_values.size(); ++i)
          if (norm.sampled_values(i) > norm.sampled_values(argmax)) argmax = i;
        if (argmax != 0) {
          ++misaligned_seeds;
          break;
        }
      }
    }
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "aligned %d/5 with the loss, misaligned %d/5 without",
                  aligned_seeds, misaligned_seeds);
    return std::make_pair(aligned_seeds >= 4 && misaligned_seeds >= 1,
                          std::string(buf));
  }});

  // ---- 10: KL regularisation lowers consecutive-layer divergence -------------------
  criteria.push_back({10, "KL regularisation lowers consecutive-layer KL", [&] {
    auto mean_consecutive_kl = [](const std::vector<TrainedRun>& runs) {
      double total = 0.0;
      for (const auto& run : runs) {
        const auto& layers = run.model.layers();
        double kl = 0.0;
        for (std::size_t i = 1; i < layers.size(); ++i)
          kl += kl_divergence(run.model.likelihood(layers[i].layer_id),
                              run.model.likelihood(layers[i - 1].layer_id));
        total += kl / (layers.size() - 1);
      }
      return total / runs.size();
    };
    const double with_kl = mean_consecutive_kl(cache.get("pescnn-gated-norm"));
    const double no_kl = mean_consecutive_kl(cache.get("pescnn-gated-norm-nokl"));
    char buf[120];
    std::snprintf(buf, sizeof buf, "mean KL %.4g (a_kl=25) vs %.4g (a_kl=0)",
                  with_kl, no_kl);
    return std::make_pair(with_kl < no_kl, std::string(buf));
  }});

  // ---- 11: bandlimit 0 on O(2) breaks reflections only -----------------------------
  criteria.push_back({11, "bandlimit 0 on O(2) is constant within cosets", [&] {
    tasks::ExperimentPreset preset = tasks::find_preset("pescnn-gated-angle-l0");
    preset.hp.epochs = std::min(preset.hp.epochs, 60);
    double worst = 0.0, coset_gap = 0.0;
    nn::Model model = tasks::train_preset_seed(preset, preset.seeds[0]);
    for (const auto& layer : model.layers()) {
      const auto norm = model.likelihood(layer.layer_id);
      const auto& plan = norm.plan();
      double mn[2] = {1e300, 1e300}, mx[2] = {-1e300, -1e300};
      for (int i = 0; i < plan.n_samples(); ++i) {
        const int c = plan.elements[i].reflect ? 1 : 0;
        mn[c] = std::min(mn[c], norm.sampled_values(i));
        mx[c] = std::max(mx[c], norm.sampled_values(i));
      }
      worst = std::max({worst, mx[0] - mn[0], mx[1] - mn[1]});
      coset_gap = std::max(coset_gap, std::abs(mx[0] - mx[1]));
    }
    char buf[140];
    std::snprintf(buf, sizeof buf,
                  "max intra-coset variation %.3g, coset gap %.3g", worst,
                  coset_gap);
    return std::make_pair(worst <= 1e-8, std::string(buf));
  }});

  // ---- 12: likelihood / error anti-correlation --------------------------------------
  criteria.push_back({12, "lambda anti-correlates with the equivariance error", [&] {
    int negative = 0;
    for (const auto& run : cache.get("pescnn-gated-angle")) {
      const Profile p = model_profile(run.model);
      double mean_rho = 0.0;
      int used = 0;
      for (std::size_t li = 0; li < p.lambda.size(); ++li) {
        // skip degenerate profiles (dead layers)
        double span = *std::max_element(p.eps[li].begin(), p.eps[li].end()) -
                      *std::min_element(p.eps[li].begin(), p.eps[li].end());
        if (span < 1e-12) continue;
        mean_rho += spearman(p.lambda[li], p.eps[li]);
        ++used;
      }
      if (used > 0 && mean_rho / used < 0.0) ++negative;
    }
    char buf[96];
    std::snprintf(buf, sizeof buf, "negative mean Spearman in %d/5 seeds",
                  negative);
    return std::make_pair(negative >= 4, std::string(buf));
  }});

  bool all = true;
  for (auto& c : criteria) {
    const auto t0 = Clock::now();
    std::pair<bool, std::string> res;
    try {
      res = c.run();
    } catch (const std::exception& e) {
      res = {false, std::string("exception: ") + e.what()};
    }
    std::printf("[%s] criterion %2d: %s — %s (%.1fs)\n",
                res.first ? "PASS" : "FAIL", c.id, c.name.c_str(),
                res.second.c_str(), seconds_since(t0));
    std::fflush(stdout);
    all = all && res.first;
  }
  std::printf("%s\n", all ? "ACCEPTANCE: all criteria passed"
                          : "ACCEPTANCE: FAILURES present");
  return all ? 0 : 1;
}
