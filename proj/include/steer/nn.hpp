#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "steer/kernel_projection.hpp"

namespace steer::nn {

enum class Nonlin { Gated, FourierElu };

Nonlin parse_nonlin(const std::string& s);
std::string nonlin_name(Nonlin n);

struct ModelConfig {
  GroupDescriptor group = o2_group();
  ProjectionMode mode = ProjectionMode::Probabilistic;
  Nonlin nonlin = Nonlin::Gated;
  int n_targets = 1;
  int bandlimit = 4;                    // likelihood bandlimit L
  std::vector<int> hidden_freqs = {4, 3};
  int copies = 8;
  bool shared_equivariance = false;
  // KL pairs by layer index; -1 as reference = uniform density.
  // Empty means consecutive pairs (1,0), (2,1), ...
  std::vector<std::pair<int, int>> kl_pairs;
  double alpha_align = 5.0;
  double alpha_kl = 25.0;
  double init_gain = 1.0;
  int nl_samples = 16;       // per coset, Fourier nonlinearity
  double prelim_noise = 0.0; // preliminary mode init noise
  std::uint64_t seed = 1;
};

// One linear block: projected map, optional norm + nonlinearity.
struct Layer {
  ProjectionPlan plan;
  FieldType out_full;   // features plus gate scalars
  FieldType out_feat;   // field after the nonlinearity
  bool has_nonlin = false;
  std::string layer_id;
  int n_gates = 0;

  VectorXd weights;
  VectorXd bias;            // one per trivial copy of out_full
  VectorXd norm_log_scale;  // one per copy of out_full
  VectorXd running_rms;     // buffer, same length
  VectorXd prelim_c;        // preliminary mode only
};

struct StepStats {
  double task = 0.0, align = 0.0, kl = 0.0, total = 0.0;
};

class Model {
 public:
  explicit Model(const ModelConfig& cfg);
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;
  Model(Model&&) = default;
  Model& operator=(Model&&) = default;

  const ModelConfig& config() const { return cfg_; }
  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& layers_mut() { return layers_; }
  const FieldType& input_field() const { return input_field_; }

  // Distinct likelihood parameter sets keyed by layer_id.
  const std::map<std::string, LikelihoodParams>& likelihoods() const {
    return likelihoods_;
  }
  std::map<std::string, LikelihoodParams>& likelihoods_mut() {
    return likelihoods_;
  }
  const std::vector<GroupElement>& align_extra() const { return align_extra_; }

  // Inference forward (eval-mode normalisation).
  MatrixXd forward(const MatrixXd& x) const;
  // Activations entering layer `i` for a given input batch.
  MatrixXd layer_input(const MatrixXd& x, int i) const;
  // The function computed by layer i (linear + norm + nonlinearity).
  MatrixXd apply_layer(const MatrixXd& h, int i) const;

  // One optimisation step on a batch; returns losses. Throws
  // TrainingDiverged on non-finite loss.
  StepStats train_step(const MatrixXd& x, const MatrixXd& y, double lr);

  // Mean losses without updating (eval-mode stats are not touched).
  StepStats eval_losses(const MatrixXd& x, const MatrixXd& y);

  // Training-mode total loss as a pure function of the parameters, and its
  // gradients per registered parameter block (used by gradient checks).
  double loss_value(const MatrixXd& x, const MatrixXd& y) const;
  std::vector<VectorXd> loss_gradients(const MatrixXd& x, const MatrixXd& y) const;

  double mse(const MatrixXd& x, const MatrixXd& y) const;

  NormalizedLikelihood likelihood(const std::string& layer_id) const;

 private:
  friend Model model_from_json(const std::string&);
  struct ParamSlot {
    double* data;
    int size;
    VectorXd m, v;  // Adam state
  };

  void build();
  void register_params();

  ModelConfig cfg_;
  FieldType input_field_;
  std::vector<Layer> layers_;
  std::map<std::string, LikelihoodParams> likelihoods_;
  std::vector<GroupElement> align_extra_;
  std::vector<ParamSlot> slots_;
  std::int64_t adam_t_ = 0;
};

struct TrainingDiverged : std::runtime_error {
  explicit TrainingDiverged(const std::string& what) : std::runtime_error(what) {}
};

struct TrainOptions {
  double lr = 5e-5;
  int epochs = 100;
  int batch = 1024;
  std::uint64_t seed = 1;
};

struct EpochStats {
  int epoch = 0;
  double task = 0.0, align = 0.0, kl = 0.0;
};

// Minimises task + alpha_align * L_align + alpha_kl * L_KL with Adam.
std::vector<EpochStats> train(Model& model, const MatrixXd& x, const MatrixXd& y,
                              const TrainOptions& opts);

void adam_step(VectorXd& param, const VectorXd& grad, VectorXd& m, VectorXd& v,
               double lr, std::int64_t t, double beta1 = 0.9,
               double beta2 = 0.999, double eps = 1e-8);

std::string model_to_json(const Model& model);
Model model_from_json(const std::string& json_text);

// Sampling plan used by the Fourier nonlinearity (n_per_coset samples for
// continuous groups, full enumeration otherwise).
const SamplingPlan& plan_cache_nl(const GroupDescriptor& g, int bandlimit,
                                  int n_per_coset);
// FT(gamma(IFT(block))) applied row-wise to a batch of Fourier stacks.
ad::Var fourier_nonlinearity_ad(ad::Tape& t, ad::Var block,
                                const SamplingPlan& plan,
                                bool identity_gamma = false);

}  // namespace steer::nn
