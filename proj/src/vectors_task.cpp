#include "steer/vectors_task.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "json.hpp"

namespace steer::tasks {

using json = nlohmann::json;

VectorsData generate_vectors(int n, std::uint64_t seed) {
  Rng rng(seed);
  VectorsData d;
  d.inputs.resize(n, 2);
  d.angle_target.resize(n);
  d.norm_target.resize(n);
  const double max_norm = std::sqrt(2.0);
  for (int i = 0; i < n; ++i) {
    const double angle = rng.uniform(0.0, kTau);
    const double norm = rng.uniform(0.0, max_norm);
    // angle measured from the positive y-axis
    d.inputs(i, 0) = norm * std::sin(angle);
    d.inputs(i, 1) = norm * std::cos(angle);
    d.angle_target(i) = std::cos(angle);
    d.norm_target(i) = norm;
  }
  return d;
}

Split split_vectors(const VectorsData& data, const std::string& task,
                    std::uint64_t seed, double train_fraction) {
  const int n = static_cast<int>(data.inputs.rows());
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed ^ 0x9e37ULL);
  for (int i = n - 1; i > 0; --i) std::swap(order[i], order[rng.uniform_int(0, i)]);

  const int n_train = static_cast<int>(std::lround(train_fraction * n));
  const int n_targets = task == "both" ? 2 : 1;
  Split s;
  s.x_train.resize(n_train, 2);
  s.y_train.resize(n_train, n_targets);
  s.x_test.resize(n - n_train, 2);
  s.y_test.resize(n - n_train, n_targets);

  auto fill = [&](MatrixXd& x, MatrixXd& y, int from, int count, int base) {
    for (int i = 0; i < count; ++i) {
      const int src = order[base + i];
      x.row(from + i) = data.inputs.row(src);
      if (task == "angle") {
        y(from + i, 0) = data.angle_target(src);
      } else if (task == "norm") {
        y(from + i, 0) = data.norm_target(src);
      } else {
        y(from + i, 0) = data.angle_target(src);
        y(from + i, 1) = data.norm_target(src);
      }
    }
  };
  fill(s.x_train, s.y_train, 0, n_train, 0);
  fill(s.x_test, s.y_test, 0, n - n_train, n_train);
  return s;
}

namespace {

const std::vector<std::uint64_t> kSeeds = {11, 22, 33, 44, 55};

std::vector<ExperimentPreset> build_presets() {
  std::vector<ExperimentPreset> out;
  auto add = [&](const std::string& name, const std::string& task,
                 ProjectionMode mode, nn::Nonlin nl,
                 std::function<void(ExperimentPreset&)> tweak = {}) {
    ExperimentPreset p;
    p.name = name;
    p.task = task;
    p.mode = mode;
    p.nonlin = nl;
    p.seeds = kSeeds;
    if (tweak) tweak(p);
    out.push_back(std::move(p));
  };

  for (const std::string task : {"angle", "norm"}) {
    add("emlp-gated-" + task, task, ProjectionMode::Equivariant, nn::Nonlin::Gated);
    add("emlp-fourier-" + task, task, ProjectionMode::Equivariant,
        nn::Nonlin::FourierElu);
    add("pescnn-gated-" + task, task, ProjectionMode::Probabilistic,
        nn::Nonlin::Gated);
    add("pescnn-fourier-" + task, task, ProjectionMode::Probabilistic,
        nn::Nonlin::FourierElu);
    add("prelim-gated-" + task, task, ProjectionMode::Preliminary,
        nn::Nonlin::Gated);
    add("prelim-noise-gated-" + task, task, ProjectionMode::Preliminary,
        nn::Nonlin::Gated, [](ExperimentPreset& p) { p.prelim_noise = 1e-3; });
  }
  add("pescnn-gated-norm-shared", "norm", ProjectionMode::Probabilistic,
      nn::Nonlin::Gated, [](ExperimentPreset& p) { p.shared_equivariance = true; });
  add("pescnn-gated-angle-noalign", "angle", ProjectionMode::Probabilistic,
      nn::Nonlin::Gated, [](ExperimentPreset& p) { p.hp.alpha_align = 0.0; });
  add("pescnn-gated-norm-nokl", "norm", ProjectionMode::Probabilistic,
      nn::Nonlin::Gated, [](ExperimentPreset& p) { p.hp.alpha_kl = 0.0; });
  add("pescnn-gated-angle-l0", "angle", ProjectionMode::Probabilistic,
      nn::Nonlin::Gated, [](ExperimentPreset& p) { p.hp.bandlimit = 0; });
  return out;
}

}  // namespace

const std::vector<ExperimentPreset>& preset_table() {
  static const std::vector<ExperimentPreset> table = build_presets();
  return table;
}

const ExperimentPreset& find_preset(const std::string& name) {
  for (const auto& p : preset_table())
    if (p.name == name) return p;
  throw std::invalid_argument("unknown preset: " + name);
}

nn::ModelConfig preset_model_config(const ExperimentPreset& preset,
                                    std::uint64_t seed) {
  nn::ModelConfig cfg;
  cfg.group = preset.group;
  cfg.mode = preset.mode;
  cfg.nonlin = preset.nonlin;
  cfg.n_targets = preset.task == "both" ? 2 : 1;
  cfg.bandlimit = preset.hp.bandlimit;
  cfg.shared_equivariance = preset.shared_equivariance;
  cfg.alpha_align = preset.hp.alpha_align;
  cfg.alpha_kl = preset.hp.alpha_kl;
  cfg.init_gain = preset.hp.init_gain;
  cfg.prelim_noise = preset.prelim_noise;
  cfg.seed = seed;
  return cfg;
}

nn::Model train_preset_seed(const ExperimentPreset& preset, std::uint64_t seed,
                            std::vector<nn::EpochStats>* history,
                            double* test_mse) {
  const VectorsData data = generate_vectors(1000, seed);
  const Split split = split_vectors(data, preset.task, seed);
  nn::Model model(preset_model_config(preset, seed));
  nn::TrainOptions opts;
  opts.lr = preset.hp.lr;
  opts.epochs = preset.hp.epochs;
  opts.batch = preset.hp.batch;
  opts.seed = seed;
  auto hist = nn::train(model, split.x_train, split.y_train, opts);
  if (history) *history = hist;
  if (test_mse) *test_mse = model.mse(split.x_test, split.y_test);
  return model;
}

PresetReport run_preset(const ExperimentPreset& preset,
                        const std::string& out_dir) {
  PresetReport report;
  report.preset = preset.name;
  namespace fs = std::filesystem;
  if (!out_dir.empty()) fs::create_directories(out_dir);

  for (const auto seed : preset.seeds) {
    SeedResult r;
    r.seed = seed;
    try {
      std::vector<nn::EpochStats> hist;
      double mse = 0.0;
      nn::Model model = train_preset_seed(preset, seed, &hist, &mse);
      r.history = hist;
      r.mse = mse;

      if (preset.task == "angle") {
        r.mse_angle = mse;
      } else if (preset.task == "norm") {
        r.mse_norm = mse;
      } else {
        const VectorsData data = generate_vectors(1000, seed);
        const Split s = split_vectors(data, "both", seed);
        const MatrixXd pred = model.forward(s.x_test);
        r.mse_angle = (pred.col(0) - s.y_test.col(0)).array().square().mean();
        r.mse_norm = (pred.col(1) - s.y_test.col(1)).array().square().mean();
      }
      if (!out_dir.empty()) {
        const std::string path =
            out_dir + "/" + preset.name + "-seed" + std::to_string(seed) + ".json";
        std::ofstream f(path);
        f << nn::model_to_json(model);
        r.checkpoint_path = path;

        std::ofstream m(out_dir + "/" + preset.name + "-seed" +
                        std::to_string(seed) + "-metrics.csv");
        m << "epoch,task_loss,align_loss,kl_loss\n";
        for (const auto& e : hist)
          m << e.epoch << "," << e.task << "," << e.align << "," << e.kl << "\n";
      }
    } catch (const std::exception& ex) {
      r.failed = true;
      r.error = ex.what();
    }
    report.per_seed.push_back(std::move(r));
  }

  double sum = 0.0, sum2 = 0.0;
  int n = 0;
  for (const auto& r : report.per_seed) {
    if (r.failed) continue;
    sum += r.mse;
    sum2 += r.mse * r.mse;
    ++n;
  }
  if (n > 0) {
    report.mean = sum / n;
    const double var = std::max(0.0, sum2 / n - report.mean * report.mean);
    report.stddev = std::sqrt(var);
  }
  if (!out_dir.empty()) {
    std::ofstream f(out_dir + "/" + preset.name + "-report.json");
    f << report_to_json(report);
  }
  return report;
}

std::string report_to_json(const PresetReport& report) {
  json j;
  j["preset"] = report.preset;
  j["seeds"] = json::array();
  j["per_seed"] = json::array();
  for (const auto& r : report.per_seed) {
    j["seeds"].push_back(r.seed);
    json rj;
    rj["seed"] = r.seed;
    if (r.failed) {
      rj["error"] = r.error;
    } else {
      if (r.mse_angle) rj["mse_angle"] = *r.mse_angle;
      if (r.mse_norm) rj["mse_norm"] = *r.mse_norm;
      rj["mse"] = r.mse;
      rj["checkpoint_path"] = r.checkpoint_path;
      json hist = json::array();
      for (const auto& e : r.history)
        hist.push_back({{"epoch", e.epoch},
                        {"task", e.task},
                        {"align", e.align},
                        {"kl", e.kl}});
      rj["history"] = hist;
    }
    j["per_seed"].push_back(rj);
  }
  j["mean"] = report.mean;
  j["std"] = report.stddev;
  return j.dump(2);
}

}  // namespace steer::tasks
