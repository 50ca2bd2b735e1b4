// steer: steerable kernels with a learnable degree of equivariance.
//
// Subcommands:
//   verify       run the oracle/property suite
//   train        train a vectors-task model, write checkpoint + metrics
//   preset       run a named experiment preset over its fixed seeds
//   likelihood   export the learnt density curves of a checkpoint
//   equiv-error  per-layer equivariance error over the group grid
//   basis        sample a planar steerable kernel basis to JSON
//
// Exit codes: 0 ok, 1 verification failure, 2 usage error, 3 training
// divergence.

#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "steer/vectors_task.hpp"
#include "steer/verify.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace steer;

namespace {

int cmd_verify(const std::string& filter) {
  verify::Options opts;
  opts.filter = filter;
  const auto results = verify::run_checks(opts);
  bool all = true;
  for (const auto& r : results) {
    std::cout << (r.passed ? "[PASS] " : "[FAIL] ") << r.name << ": " << r.detail
              << "\n";
    all = all && r.passed;
  }
  if (results.empty()) {
    std::cout << "no checks matched filter '" << filter << "'\n";
    return 1;
  }
  std::cout << (all ? "all checks passed" : "verification FAILED") << "\n";
  return all ? 0 : 1;
}

struct TrainArgs {
  std::string task = "angle";
  std::string group = "o2";
  std::string mode = "probabilistic";
  std::string nonlinearity = "gated";
  int bandlimit = 4;
  int epochs = 100;
  double lr = 5e-5;
  int batch = 1024;
  double alpha_align = 5.0;
  double alpha_kl = 25.0;
  bool shared = false;
  std::uint64_t seed = 1;
  std::string out = "out";
};

int cmd_train(const TrainArgs& a) {
  tasks::ExperimentPreset p;
  p.name = "train";
  p.task = a.task;
  p.group = parse_group(a.group);
  p.mode = parse_mode(a.mode);
  if (p.mode == ProjectionMode::Equivariant && a.bandlimit != 4)
    std::cerr << "warning: --bandlimit has no effect in equivariant mode\n";
  p.nonlin = nn::parse_nonlin(a.nonlinearity);
  p.shared_equivariance = a.shared;
  p.hp.lr = a.lr;
  p.hp.epochs = a.epochs;
  p.hp.batch = a.batch;
  p.hp.alpha_align = a.alpha_align;
  p.hp.alpha_kl = a.alpha_kl;
  p.hp.bandlimit = a.bandlimit;

  fs::create_directories(a.out);
  std::vector<nn::EpochStats> hist;
  double test_mse = 0.0;
  nn::Model model = tasks::train_preset_seed(p, a.seed, &hist, &test_mse);

  const std::string ckpt = a.out + "/model.json";
  std::ofstream(ckpt) << nn::model_to_json(model);
  std::ofstream metrics(a.out + "/metrics.csv");
  metrics << "epoch,task_loss,align_loss,kl_loss\n";
  for (const auto& e : hist)
    metrics << e.epoch << "," << e.task << "," << e.align << "," << e.kl << "\n";
  std::cout << "test mse " << test_mse << "\ncheckpoint " << ckpt << "\n";
  return 0;
}

nn::Model load_model(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("missing checkpoint: " + path);
  std::string text((std::istreambuf_iterator<char>(f)),
                   std::istreambuf_iterator<char>());
  return nn::model_from_json(text);
}

int cmd_likelihood(const std::string& model_path, int samples, int layer,
                   const std::string& format, const std::string& out_path) {
  const nn::Model model = load_model(model_path);
  std::ostringstream os;
  json jout = json::array();
  os << "layer_id,reflect,theta_radians,lambda\n";
  int idx = -1;
  for (const auto& l : model.layers()) {
    ++idx;
    if (layer >= 0 && layer != idx) continue;
    const NormalizedLikelihood norm = model.likelihood(l.layer_id);
    const SamplingPlan& plan = norm.plan();
    auto emit = [&](const GroupElement& e) {
      const double lam = std::max(0.0, evaluate(norm, e));
      os << l.layer_id << "," << (e.reflect ? 1 : 0) << "," << e.theta << ","
         << lam << "\n";
      jout.push_back({{"layer_id", l.layer_id},
                      {"reflect", e.reflect ? 1 : 0},
                      {"theta_radians", e.theta},
                      {"lambda", lam}});
    };
    for (const auto& e : plan.elements) emit(e);
    if (!model.config().group.finite()) {
      // dense curve per coset for plotting
      const int cosets = model.config().group.has_reflections() ? 2 : 1;
      for (int c = 0; c < cosets; ++c)
        for (int i = 0; i < samples; ++i)
          emit({kTau * i / samples, c == 1});
    }
  }
  const std::string text = format == "json" ? jout.dump(2) : os.str();
  if (out_path.empty()) {
    std::cout << text;
  } else {
    std::ofstream(out_path) << text;
    std::cout << "wrote " << out_path << "\n";
  }
  return 0;
}

int cmd_equiv_error(const std::string& model_path, int samples, int batch_size,
                    bool relative, const std::string& out_path) {
  const nn::Model model = load_model(model_path);
  const GroupDescriptor g = model.config().group;
  const auto grid = sample_grid(g, samples);

  const tasks::VectorsData data =
      tasks::generate_vectors(batch_size, model.config().seed ^ 0xbadcafeULL);
  const MatrixXd batch = data.inputs;

  std::optional<nn::Model> twin;
  if (relative) {
    nn::ModelConfig tc = model.config();
    tc.mode = ProjectionMode::Equivariant;
    twin.emplace(tc);
  }

  std::ostringstream os;
  os << "layer,reflect,theta_radians,epsilon\n";
  for (std::size_t li = 0; li < model.layers().size(); ++li) {
    const MatrixXd h = model.layer_input(batch, static_cast<int>(li));
    const FieldType fin = model.layers()[li].plan.field_in;
    const FieldType fout = model.layers()[li].out_feat;
    MatrixXd h_twin;
    if (twin) h_twin = twin->layer_input(batch, static_cast<int>(li));
    for (const auto& e : grid) {
      double eps = equivariance_error(
          [&](const MatrixXd& b) { return model.apply_layer(b, static_cast<int>(li)); },
          fin, fout, h, e);
      if (twin) {
        eps -= equivariance_error(
            [&](const MatrixXd& b) { return twin->apply_layer(b, static_cast<int>(li)); },
            fin, fout, h_twin, e);
      }
      os << li << "," << (e.reflect ? 1 : 0) << "," << e.theta << "," << eps
         << "\n";
    }
  }
  if (out_path.empty()) {
    std::cout << os.str();
  } else {
    std::ofstream(out_path) << os.str();
    std::cout << "wrote " << out_path << "\n";
  }
  return 0;
}

IrrepId parse_irrep(const std::string& s) {
  const auto comma = s.find(',');
  if (comma == std::string::npos)
    throw std::invalid_argument("irrep format: flip,freq (e.g. 1,2)");
  return {std::stoi(s.substr(0, comma)), std::stoi(s.substr(comma + 1))};
}

int cmd_basis(const std::string& group, const std::string& in_irrep,
              const std::string& out_irrep, int size, int rings,
              const std::string& out_path) {
  const GroupDescriptor g = parse_group(group);
  const IrrepId l = parse_irrep(in_irrep);
  const IrrepId J = parse_irrep(out_irrep);
  if (!irrep_valid(g, l) || !irrep_valid(g, J))
    throw std::invalid_argument("invalid irrep for group " + g.name());

  const int max_freq = std::min(4, g.max_frequency());
  const SteerableBasis basis = planar_basis(g, max_freq, rings, 1.0);
  FieldType fin{g, {{l, 1}}}, fout{g, {{J, 1}}};
  const ProjectionPlan plan =
      make_projection_plan(fin, fout, basis, ProjectionMode::Equivariant, max_freq);
  Rng rng(7);
  const VectorXd w = init_weights(plan, 1.0, rng);
  const ProjectedKernel kernel = project_kernel(plan, w, nullptr);

  // steerability residual of the synthesised kernel itself
  double resid = 0.0;
  Rng hr(13);
  const MatrixXd probe = kernel.evaluate(0.37, -0.81);
  const double scale = std::max(probe.cwiseAbs().maxCoeff(), 1e-12);
  for (int t = 0; t < 50; ++t) {
    const GroupElement h = random_element(g, hr);
    const Eigen::Vector2d x(hr.uniform(-1.5, 1.5), hr.uniform(-1.5, 1.5));
    const Eigen::Vector2d hx =
        act_on_plane(inverse(h, g), x);
    const MatrixXd lhs = kernel.evaluate(x(0), x(1));
    const MatrixXd rhs = direct_sum_matrix(fout, h) * kernel.evaluate(hx(0), hx(1)) *
                         direct_sum_matrix(fin, h).transpose();
    resid = std::max(resid, (lhs - rhs).cwiseAbs().maxCoeff() / scale);
  }

  json j;
  j["group"] = g.name();
  j["in_irrep"] = {l.flip, l.freq};
  j["out_irrep"] = {J.flip, J.freq};
  j["size"] = size;
  j["steerability_residual"] = resid;
  json grid = json::array();
  const double extent = rings * 1.0;
  for (int iy = 0; iy < size; ++iy) {
    json row = json::array();
    for (int ix = 0; ix < size; ++ix) {
      const double x = -extent + 2 * extent * ix / std::max(1, size - 1);
      const double y = -extent + 2 * extent * iy / std::max(1, size - 1);
      const MatrixXd k = kernel.evaluate(x, y);
      json cell = json::array();
      for (int r = 0; r < k.rows(); ++r)
        for (int c = 0; c < k.cols(); ++c) cell.push_back(k(r, c));
      row.push_back(cell);
    }
    grid.push_back(row);
  }
  j["grid"] = grid;
  std::ofstream(out_path) << j.dump();
  std::cout << "steerability residual " << resid << "\nwrote " << out_path
            << "\n";
  return 0;
}

int cmd_preset(const std::string& name, const std::string& out_dir) {
  const auto& preset = tasks::find_preset(name);
  const auto report = tasks::run_preset(preset, out_dir);
  std::cout << tasks::report_to_json(report) << "\n";
  for (const auto& r : report.per_seed)
    if (r.failed) return 3;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"steerable kernels with a learnable degree of equivariance"};
  app.require_subcommand(1);

  std::string filter;
  auto* verify_cmd = app.add_subcommand("verify", "run the oracle/property suite");
  verify_cmd->add_option("--filter", filter, "run checks whose name contains this");

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "train on the vectors task");
  train_cmd->add_option("--task", ta.task, "angle|norm|both");
  train_cmd->add_option("--group", ta.group, "c<N>|d<N>|so2|o2");
  train_cmd->add_option("--mode", ta.mode, "equivariant|probabilistic|preliminary");
  train_cmd->add_option("--nonlinearity", ta.nonlinearity, "gated|fourier_elu");
  train_cmd->add_option("--bandlimit", ta.bandlimit, "likelihood bandlimit L");
  train_cmd->add_option("--epochs", ta.epochs);
  train_cmd->add_option("--lr", ta.lr);
  train_cmd->add_option("--batch", ta.batch);
  train_cmd->add_option("--alpha-align", ta.alpha_align);
  train_cmd->add_option("--alpha-kl", ta.alpha_kl);
  train_cmd->add_flag("--shared-equivariance", ta.shared);
  train_cmd->add_option("--seed", ta.seed);
  train_cmd->add_option("--out", ta.out);

  std::string model_path, format = "csv", out_path;
  int samples = 256, layer = -1;
  auto* lik_cmd = app.add_subcommand("likelihood", "export learnt density curves");
  lik_cmd->add_option("--model", model_path)->required();
  lik_cmd->add_option("--samples", samples, "dense curve points per coset");
  lik_cmd->add_option("--layer", layer, "layer index (-1 = all)");
  lik_cmd->add_option("--format", format, "csv|json");
  lik_cmd->add_option("--out", out_path);

  std::string eq_model, eq_out;
  int eq_samples = 16, eq_batch = 256;
  bool eq_relative = false;
  auto* eq_cmd = app.add_subcommand("equiv-error", "per-layer equivariance error");
  eq_cmd->add_option("--model", eq_model)->required();
  eq_cmd->add_option("--samples", eq_samples, "grid points per coset");
  eq_cmd->add_option("--batch", eq_batch);
  eq_cmd->add_flag("--relative", eq_relative,
                   "subtract a freshly built equivariant twin");
  eq_cmd->add_option("--out", eq_out);

  std::string b_group = "so2", b_in = "0,1", b_out_ir = "0,1",
              b_path = "basis.json";
  int b_size = 9, b_rings = 2;
  auto* basis_cmd = app.add_subcommand("basis", "sample a planar kernel basis");
  basis_cmd->add_option("--group", b_group);
  basis_cmd->add_option("--in-irrep", b_in, "flip,freq");
  basis_cmd->add_option("--out-irrep", b_out_ir, "flip,freq");
  basis_cmd->add_option("--size", b_size, "grid resolution");
  basis_cmd->add_option("--rings", b_rings);
  basis_cmd->add_option("--out", b_path);

  std::string p_name, p_out = "out";
  auto* preset_cmd = app.add_subcommand("preset", "run an experiment preset");
  preset_cmd->add_option("name", p_name)->required();
  preset_cmd->add_option("--out", p_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*verify_cmd) return cmd_verify(filter);
    if (*train_cmd) return cmd_train(ta);
    if (*lik_cmd) return cmd_likelihood(model_path, samples, layer, format, out_path);
    if (*eq_cmd)
      return cmd_equiv_error(eq_model, eq_samples, eq_batch, eq_relative, eq_out);
    if (*basis_cmd)
      return cmd_basis(b_group, b_in, b_out_ir, b_size, b_rings, b_path);
    if (*preset_cmd) return cmd_preset(p_name, p_out);
  } catch (const nn::TrainingDiverged& e) {
    std::cerr << "training diverged: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
