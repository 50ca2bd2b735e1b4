#pragma once

#include <optional>
#include <string>
#include <vector>

#include "steer/nn.hpp"

namespace steer::tasks {

// Planar vectors with uniform angle (measured from the +y axis) and uniform
// norm in [0, sqrt(2)]. Targets: cosine of the angle and/or the norm.
struct VectorsData {
  MatrixXd inputs;         // n x 2
  VectorXd angle_target;   // cos(angle)
  VectorXd norm_target;
};

VectorsData generate_vectors(int n, std::uint64_t seed);

struct Split {
  MatrixXd x_train, y_train, x_test, y_test;
};

// task: "angle", "norm" or "both"; deterministic shuffled 80/20 split.
Split split_vectors(const VectorsData& data, const std::string& task,
                    std::uint64_t seed, double train_fraction = 0.8);

struct Hyperparams {
  double lr = 1e-3;
  int epochs = 400;
  int batch = 1024;
  double alpha_align = 5.0;
  double alpha_kl = 25.0;
  int bandlimit = 4;
  double init_gain = 1.0;
};

struct ExperimentPreset {
  std::string name;
  std::string task;  // angle | norm | both
  ProjectionMode mode = ProjectionMode::Probabilistic;
  nn::Nonlin nonlin = nn::Nonlin::Gated;
  bool shared_equivariance = false;
  double prelim_noise = 0.0;
  GroupDescriptor group = o2_group();
  std::vector<std::uint64_t> seeds;  // 5 fixed seeds
  Hyperparams hp;
};

const std::vector<ExperimentPreset>& preset_table();
const ExperimentPreset& find_preset(const std::string& name);

struct SeedResult {
  std::uint64_t seed = 0;
  std::optional<double> mse_angle, mse_norm;
  double mse = 0.0;
  std::vector<nn::EpochStats> history;
  std::string checkpoint_path;  // empty when not written
  bool failed = false;
  std::string error;
};

struct PresetReport {
  std::string preset;
  std::vector<SeedResult> per_seed;
  double mean = 0.0, stddev = 0.0;
};

// Runs every seed (failures are recorded, not propagated); writes
// checkpoint/metrics artifacts under out_dir when given.
PresetReport run_preset(const ExperimentPreset& preset,
                        const std::string& out_dir = "");

// Fully-trained model for one seed (used by the acceptance suite and CLI).
nn::Model train_preset_seed(const ExperimentPreset& preset, std::uint64_t seed,
                            std::vector<nn::EpochStats>* history = nullptr,
                            double* test_mse = nullptr);

nn::ModelConfig preset_model_config(const ExperimentPreset& preset,
                                    std::uint64_t seed);

std::string report_to_json(const PresetReport& report);

}  // namespace steer::tasks
