#include "steer/likelihood.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

namespace steer {

LikelihoodParams init_uniform(const GroupDescriptor& g, int bandlimit,
                              const std::string& layer_id) {
  LikelihoodParams p;
  p.group = g;
  p.bandlimit = bandlimit;
  p.layer_id = layer_id;
  const int c = FourierCoeffs::zero(g, bandlimit).flat_size();
  p.logits = std::make_shared<VectorXd>(VectorXd::Zero(c));
  return p;
}

LikelihoodAd normalise_ad(ad::Tape& t, ad::Var logits, const SamplingPlan& plan,
                          const std::vector<GroupElement>& extra) {
  LikelihoodAd out;
  out.logits = logits;

  ad::Tensor ift_t(plan.n_samples(), plan.n_coeffs());
  for (int i = 0; i < plan.n_samples(); ++i)
    for (int j = 0; j < plan.n_coeffs(); ++j)
      ift_t.at(i, j) = plan.ift_matrix(i, j);
  ad::Var ift_m = t.constant(std::move(ift_t));

  ad::Var raw = t.matmul(ift_m, logits);          // N x 1 logit samples
  out.max_logit = t.max_all(raw);
  ad::Var shifted = t.sub_scalar(raw, out.max_logit);
  ad::Var e = t.exp(shifted);
  ad::Var z = t.mean_all(e);
  out.values = t.div_scalar(e, z);
  out.log_z = t.log(z);

  ad::Tensor ft_t(plan.n_coeffs(), plan.n_samples());
  for (int i = 0; i < plan.n_coeffs(); ++i)
    for (int j = 0; j < plan.n_samples(); ++j)
      ft_t.at(i, j) = plan.ft_matrix(i, j);
  out.coeffs = t.matmul(t.constant(std::move(ft_t)), out.values);  // C x 1

  if (!extra.empty()) {
    ad::Tensor ex(static_cast<int>(extra.size()), plan.n_coeffs());
    for (std::size_t i = 0; i < extra.size(); ++i) {
      const VectorXd row = ift_row(plan.group, plan.bandlimit, extra[i]);
      for (int j = 0; j < plan.n_coeffs(); ++j)
        ex.at(static_cast<int>(i), j) = row(j);
    }
    ad::Var raw_ex = t.matmul(t.constant(std::move(ex)), logits);
    // same shift and z as the plan grid, so mass stays defined by the grid
    out.extra_values = t.div_scalar(t.exp(t.sub_scalar(raw_ex, out.max_logit)), z);
  }
  return out;
}

ad::Var alignment_error_ad(ad::Tape& t, const LikelihoodAd& lik) {
  ad::Var all = lik.extra_values.valid()
                    ? t.concat_flat({lik.values, lik.extra_values})
                    : lik.values;
  ad::Var peak = t.max_all(all);
  ad::Var at_identity = t.gather(lik.values, {0}, 1, 1);  // grid starts at e
  return t.sub(peak, at_identity);
}

ad::Var kl_divergence_ad(ad::Tape& t, const LikelihoodAd& next,
                         const LikelihoodAd& ref) {
  ad::Var ref_logits = t.detach(ref.logits);
  ad::Var term = t.sub(t.dot(next.coeffs, next.logits), next.max_logit);
  term = t.sub(term, next.log_z);
  term = t.sub(term, t.dot(next.coeffs, ref_logits));
  term = t.add_scalar(term, t.detach(ref.max_logit));
  return t.add_scalar(term, t.detach(ref.log_z));
}

ad::Var kl_to_uniform_ad(ad::Tape& t, const LikelihoodAd& next) {
  // uniform reference: zero logits, max 0, z = 1
  ad::Var term = t.sub(t.dot(next.coeffs, next.logits), next.max_logit);
  return t.sub(term, next.log_z);
}

namespace {

NormalizedLikelihood run_normalise(const LikelihoodParams& params) {
  const SamplingPlan& plan = params.plan();
  ad::Tape t;
  ad::Tensor lg(static_cast<int>(params.logits->size()), 1);
  for (int i = 0; i < params.logits->size(); ++i) lg.v[i] = (*params.logits)(i);
  LikelihoodAd lik = normalise_ad(t, t.constant(std::move(lg)), plan);

  NormalizedLikelihood out;
  out.group = params.group;
  out.bandlimit = params.bandlimit;
  out.coeffs = FourierCoeffs::zero(params.group, params.bandlimit);
  VectorXd cf(out.coeffs.flat_size());
  for (int i = 0; i < cf.size(); ++i) cf(i) = t.val(lik.coeffs).v[i];
  out.coeffs.set_flat(cf);
  out.logits_coeffs = FourierCoeffs::zero(params.group, params.bandlimit);
  out.logits_coeffs.set_flat(*params.logits);
  out.z = std::exp(t.scalar(lik.log_z));
  out.max_logit = t.scalar(lik.max_logit);
  out.sampled_values.resize(plan.n_samples());
  for (int i = 0; i < plan.n_samples(); ++i)
    out.sampled_values(i) = t.val(lik.values).v[i];
  return out;
}

}  // namespace

NormalizedLikelihood normalise(const LikelihoodParams& params) {
  if (static_cast<int>(params.logits->size()) !=
      FourierCoeffs::zero(params.group, params.bandlimit).flat_size())
    throw std::invalid_argument("normalise: logits size does not match bandlimit");
  return run_normalise(params);
}

double NormalizedLikelihood::density_at(const GroupElement& e) const {
  const double raw = ift_at(logits_coeffs, e);
  return std::exp(raw - max_logit) / z;
}

double evaluate(const NormalizedLikelihood& norm, const GroupElement& e) {
  return ift_at(norm.coeffs, e);
}

double alignment_error(const NormalizedLikelihood& norm,
                       const std::vector<GroupElement>& extra) {
  double peak = norm.sampled_values.maxCoeff();
  for (const auto& e : extra) peak = std::max(peak, norm.density_at(e));
  return peak - norm.sampled_values(0);
}

double kl_divergence(const NormalizedLikelihood& next,
                     const NormalizedLikelihood& ref) {
  if (!(next.group == ref.group) || next.bandlimit != ref.bandlimit)
    throw std::invalid_argument("kl_divergence: mismatched plans");
  const VectorXd nc = next.coeffs.flat();
  return nc.dot(next.logits_coeffs.flat()) - next.max_logit - std::log(next.z) -
         nc.dot(ref.logits_coeffs.flat()) + ref.max_logit + std::log(ref.z);
}

std::pair<double, double> aggregate_losses(
    const std::vector<LikelihoodParams>& layers,
    const std::vector<std::pair<int, int>>& pairs,
    const std::vector<GroupElement>& extra) {
  std::vector<NormalizedLikelihood> norms;
  norms.reserve(layers.size());
  for (const auto& l : layers) norms.push_back(normalise(l));

  // distinct likelihoods: one per layer_id (shared storage counts once)
  std::set<std::string> seen;
  double align = 0.0;
  int n_distinct = 0;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (!seen.insert(layers[i].layer_id.empty() ? std::to_string(i)
                                                : layers[i].layer_id)
             .second)
      continue;
    align += alignment_error(norms[i], extra);
    ++n_distinct;
  }
  if (n_distinct > 0) align /= n_distinct;

  double kl = 0.0;
  for (const auto& [m, n] : pairs) {
    if (m < 0 || m >= static_cast<int>(layers.size()))
      throw std::invalid_argument("aggregate_losses: unknown layer index");
    if (n >= static_cast<int>(layers.size()))
      throw std::invalid_argument("aggregate_losses: unknown reference index");
    if (n < 0) {
      const VectorXd nc = norms[m].coeffs.flat();
      kl += nc.dot(norms[m].logits_coeffs.flat()) - norms[m].max_logit -
            std::log(norms[m].z);
    } else {
      kl += kl_divergence(norms[m], norms[n]);
    }
  }
  if (!pairs.empty()) kl /= static_cast<double>(pairs.size());
  return {align, kl};
}

}  // namespace steer
