#pragma once

#include <memory>
#include <string>
#include <vector>

#include "steer/autodiff.hpp"
#include "steer/fourier.hpp"

namespace steer {

// Learnable likelihood over H, parameterised by the Fourier coefficients of
// its logits. Layers sharing a layer_id reference the same logit storage.
struct LikelihoodParams {
  GroupDescriptor group;
  int bandlimit = 0;
  std::string layer_id;
  std::shared_ptr<VectorXd> logits;  // flat lambda-hat' (learnable)

  const SamplingPlan& plan() const { return plan_cache(group, bandlimit); }
};

// Softmax of zero logits is the uniform density.
LikelihoodParams init_uniform(const GroupDescriptor& g, int bandlimit,
                              const std::string& layer_id = "");

struct NormalizedLikelihood {
  GroupDescriptor group;
  int bandlimit = 0;
  FourierCoeffs coeffs;         // lambda-hat (of the density)
  FourierCoeffs logits_coeffs;  // lambda-hat' (copy of the learnables)
  double z = 1.0;
  double max_logit = 0.0;
  VectorXd sampled_values;  // softmax values over the plan grid

  const SamplingPlan& plan() const { return plan_cache(group, bandlimit); }
  // Density value through the softmax form (positive everywhere).
  double density_at(const GroupElement& e) const;
};

// Max-shifted softmax over the plan grid, re-projected with ft.
NormalizedLikelihood normalise(const LikelihoodParams& params);

// Bandlimited synthesis of the density coefficients; can be slightly
// negative off-grid, non-negative on the plan grid.
double evaluate(const NormalizedLikelihood& norm, const GroupElement& e);

// max(lambda) - lambda(e) over plan + extra evaluation points.
double alignment_error(const NormalizedLikelihood& norm,
                       const std::vector<GroupElement>& extra = {});

// Fourier-domain KL divergence D(next || ref); ref treated as constant.
double kl_divergence(const NormalizedLikelihood& next,
                     const NormalizedLikelihood& ref);

// ---------------------------------------------------------------------------
// Tape-embedded versions (single source of truth for gradients: the plain
// functions above run these on a local tape).
// ---------------------------------------------------------------------------
struct LikelihoodAd {
  ad::Var logits;       // C x 1
  ad::Var values;       // N x 1 softmax samples over the plan
  ad::Var extra_values; // M x 1 at extra points (invalid if none)
  ad::Var coeffs;       // C x 1 lambda-hat
  ad::Var max_logit;    // 1 x 1
  ad::Var log_z;        // 1 x 1
};

LikelihoodAd normalise_ad(ad::Tape& t, ad::Var logits, const SamplingPlan& plan,
                          const std::vector<GroupElement>& extra = {});

ad::Var alignment_error_ad(ad::Tape& t, const LikelihoodAd& lik);

// D(next || ref); ref enters as constants (stop-gradient).
ad::Var kl_divergence_ad(ad::Tape& t, const LikelihoodAd& next,
                         const LikelihoodAd& ref);
// Reference is the uniform density (pair (m, none)).
ad::Var kl_to_uniform_ad(ad::Tape& t, const LikelihoodAd& next);

// Mean alignment over distinct likelihoods and mean KL over pairs.
// A pair (m, -1) uses the uniform density as reference.
std::pair<double, double> aggregate_losses(
    const std::vector<LikelihoodParams>& layers,
    const std::vector<std::pair<int, int>>& pairs,
    const std::vector<GroupElement>& extra = {});

}  // namespace steer
