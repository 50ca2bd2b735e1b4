#include "steer/nn.hpp"

#include <cmath>
#include <mutex>
#include <set>
#include <tuple>

#include "json.hpp"

namespace steer::nn {

using json = nlohmann::json;

Nonlin parse_nonlin(const std::string& s) {
  if (s == "gated") return Nonlin::Gated;
  if (s == "fourier_elu" || s == "fourier") return Nonlin::FourierElu;
  throw std::invalid_argument("unknown nonlinearity: " + s);
}

std::string nonlin_name(Nonlin n) {
  return n == Nonlin::Gated ? "gated" : "fourier_elu";
}

namespace {

struct CopyInfo {
  IrrepId id;
  int offset = 0;
  int dim = 1;
  bool trivial = false;
};

std::vector<CopyInfo> field_copies(const FieldType& f) {
  std::vector<CopyInfo> out;
  int off = 0;
  for (const auto& id : f.copies()) {
    const int d = irrep_info(f.group, id).dim;
    out.push_back({id, off, d, id == IrrepId{0, 0}});
    off += d;
  }
  return out;
}

ad::Var const_matrix(ad::Tape& t, const MatrixXd& m) {
  ad::Tensor tt(static_cast<int>(m.rows()), static_cast<int>(m.cols()));
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) tt.at(i, j) = m(i, j);
  return t.constant(std::move(tt));
}

ad::Var vec_var(ad::Tape& t, const VectorXd& v, bool track, bool as_row) {
  ad::Tensor tt(as_row ? 1 : static_cast<int>(v.size()),
                as_row ? static_cast<int>(v.size()) : 1);
  for (int i = 0; i < v.size(); ++i) tt.v[i] = v(i);
  return track ? t.param(tt) : t.constant(std::move(tt));
}

}  // namespace

Model::Model(const ModelConfig& cfg) : cfg_(cfg) {
  build();
  register_params();
}

void Model::build() {
  const GroupDescriptor g = cfg_.group;
  input_field_ = standard_field(g);
  Rng rng(cfg_.seed);

  const SteerableBasis pbasis = point_basis(g, 0);

  FieldType prev = input_field_;
  const int n_hidden = static_cast<int>(cfg_.hidden_freqs.size());
  for (int i = 0; i <= n_hidden; ++i) {
    Layer layer;
    layer.layer_id =
        cfg_.shared_equivariance ? "shared" : "layer" + std::to_string(i);
    if (i < n_hidden) {
      const int f = cfg_.hidden_freqs[i];
      layer.out_feat = cfg_.nonlin == Nonlin::FourierElu
                           ? fourier_field(g, f, cfg_.copies)
                           : irrep_field(g, f, cfg_.copies);
      layer.out_full = layer.out_feat;
      if (cfg_.nonlin == Nonlin::Gated) {
        int gates = 0;
        for (const auto& c : field_copies(layer.out_feat))
          if (!c.trivial) ++gates;
        layer.n_gates = gates;
        if (gates > 0) layer.out_full.entries.push_back({IrrepId{0, 0}, gates});
      }
      layer.has_nonlin = true;
    } else {
      layer.out_feat = trivial_field(g, cfg_.n_targets);
      layer.out_full = layer.out_feat;
      layer.has_nonlin = false;
    }
    layer.plan = make_projection_plan(prev, layer.out_full, pbasis, cfg_.mode,
                                      cfg_.bandlimit);
    layer.weights = init_weights(layer.plan, cfg_.init_gain, rng);
    int n_triv = 0, n_copies = 0;
    for (const auto& c : field_copies(layer.out_full)) {
      if (c.trivial) ++n_triv;
      ++n_copies;
    }
    layer.bias = VectorXd::Zero(n_triv);
    layer.norm_log_scale = VectorXd::Zero(n_copies);
    layer.running_rms = VectorXd::Ones(n_copies);
    if (cfg_.mode == ProjectionMode::Preliminary)
      layer.prelim_c = init_prelim_c(layer.plan, cfg_.prelim_noise, rng);
    prev = layer.out_feat;
    layers_.push_back(std::move(layer));
  }

  for (const auto& l : layers_)
    if (!likelihoods_.count(l.layer_id))
      likelihoods_.emplace(l.layer_id,
                           init_uniform(g, cfg_.bandlimit, l.layer_id));

  Rng extra_rng(cfg_.seed ^ 0xa11697ULL);
  align_extra_ = sample_near_identity(g, 100, extra_rng);
}

void Model::register_params() {
  slots_.clear();
  auto add = [&](VectorXd& v) {
    if (v.size() == 0) return;
    ParamSlot s;
    s.data = v.data();
    s.size = static_cast<int>(v.size());
    s.m = VectorXd::Zero(v.size());
    s.v = VectorXd::Zero(v.size());
    slots_.push_back(std::move(s));
  };
  if (cfg_.mode == ProjectionMode::Probabilistic)
    for (auto& [id, lik] : likelihoods_) add(*lik.logits);
  for (auto& l : layers_) {
    add(l.weights);
    add(l.bias);
    if (l.has_nonlin) add(l.norm_log_scale);
    if (cfg_.mode == ProjectionMode::Preliminary) add(l.prelim_c);
  }
}

namespace {

struct Forward {
  ad::Var output;
  std::map<std::string, LikelihoodAd> liks;
  std::vector<ad::Var> w_vars, b_vars, s_vars, c_vars;
  std::map<std::string, ad::Var> logit_vars;
  std::vector<std::vector<double>> rms;  // per layer, per copy (training mode)
  std::vector<ad::Var> layer_inputs;
};

// iid batch-norm substitute: divide each field by the RMS of its norms,
// then apply a learnable positive scale. Exactly equivariant.
ad::Var iid_norm_ad(ad::Tape& t, ad::Var x, const std::vector<CopyInfo>& copies,
                    ad::Var log_scale, bool training,
                    const VectorXd& running_rms, std::vector<double>* rms_out) {
  std::vector<ad::Var> parts;
  for (std::size_t f = 0; f < copies.size(); ++f) {
    const CopyInfo& c = copies[f];
    ad::Var block = t.slice_cols(x, c.offset, c.offset + c.dim);
    ad::Var rms;
    if (training) {
      ad::Var s = t.sum_cols(t.square(block));           // B x 1
      ad::Var m = t.scale(t.mean_all(s), 1.0 / c.dim);   // scalar
      rms = t.sqrt(t.add_const(m, 1e-5));
      if (rms_out) rms_out->push_back(t.scalar(rms));
    } else {
      rms = t.constant_scalar(running_rms(static_cast<int>(f)));
    }
    ad::Var scale =
        t.exp(t.slice_cols(log_scale, static_cast<int>(f), static_cast<int>(f) + 1));
    parts.push_back(t.mul_scalar(t.div_scalar(block, rms), scale));
  }
  return t.concat_cols(parts);
}

ad::Var gated_nonlinearity_ad(ad::Tape& t, ad::Var x,
                              const std::vector<CopyInfo>& feat_copies,
                              int gates_offset) {
  std::vector<ad::Var> parts;
  int gate = 0;
  for (const auto& c : feat_copies) {
    ad::Var block = t.slice_cols(x, c.offset, c.offset + c.dim);
    if (c.trivial) {
      parts.push_back(t.elu(block));
    } else {
      ad::Var gcol = t.slice_cols(x, gates_offset + gate, gates_offset + gate + 1);
      parts.push_back(t.mul_colvec(block, t.sigmoid(gcol)));
      ++gate;
    }
  }
  return t.concat_cols(parts);
}

}  // namespace

// Sample the per-copy Fourier stack, apply the pointwise gamma, project back.
ad::Var fourier_nonlinearity_ad(ad::Tape& t, ad::Var block,
                                const SamplingPlan& plan, bool identity_gamma) {
  ad::Var ift_m = const_matrix(t, plan.ift_matrix);
  ad::Var ft_m = const_matrix(t, plan.ft_matrix);
  ad::Var sampled = t.matmul(block, ift_m, false, true);  // B x N
  ad::Var activated = identity_gamma ? sampled : t.elu(sampled);
  return t.matmul(activated, ft_m, false, true);  // B x C
}

namespace {

Forward build_graph(ad::Tape& t, const Model& model, const MatrixXd& x,
                    bool training, bool track) {
  const ModelConfig& cfg = model.config();
  Forward fw;

  if (cfg.mode == ProjectionMode::Probabilistic) {
    for (const auto& [id, lik] : model.likelihoods()) {
      ad::Var lv = vec_var(t, *lik.logits, track, false);
      fw.logit_vars[id] = lv;
      fw.liks.emplace(id, normalise_ad(t, lv, lik.plan(), model.align_extra()));
    }
  }

  ad::Var h = const_matrix(t, x);
  fw.rms.resize(model.layers().size());
  for (std::size_t i = 0; i < model.layers().size(); ++i) {
    const Layer& layer = model.layers()[i];
    fw.layer_inputs.push_back(h);

    ad::Var w = vec_var(t, layer.weights, track, true);
    fw.w_vars.push_back(w);
    ad::Var lam, pc;
    if (cfg.mode == ProjectionMode::Probabilistic)
      lam = fw.liks.at(layer.layer_id).coeffs;
    if (cfg.mode == ProjectionMode::Preliminary) {
      pc = vec_var(t, layer.prelim_c, track, true);
      fw.c_vars.push_back(pc);
    }
    ad::Var map = assemble_map_ad(t, layer.plan, w, lam, pc);
    h = t.matmul(h, map, false, true);  // B x d_out

    const auto copies = field_copies(layer.out_full);
    // bias on trivial copies only (keeps the layer equivariant)
    ad::Var b = vec_var(t, layer.bias, track, true);
    fw.b_vars.push_back(b);
    if (layer.bias.size() > 0) {
      MatrixXd place = MatrixXd::Zero(layer.bias.size(), layer.out_full.dim());
      int bi = 0;
      for (const auto& c : copies)
        if (c.trivial) place(bi++, c.offset) = 1.0;
      h = t.add_rowvec(h, t.matmul(b, const_matrix(t, place)));
    }

    if (layer.has_nonlin) {
      ad::Var ls = vec_var(t, layer.norm_log_scale, track, true);
      fw.s_vars.push_back(ls);
      h = iid_norm_ad(t, h, copies, ls, training, layer.running_rms,
                      training ? &fw.rms[i] : nullptr);
      if (cfg.nonlin == Nonlin::Gated) {
        const auto feat = field_copies(layer.out_feat);
        const int gates_offset = layer.out_feat.dim();
        h = gated_nonlinearity_ad(t, h, feat, gates_offset);
      } else {
        // per-copy Fourier ELU over the group samples
        const int f = cfg.hidden_freqs[i];
        const SamplingPlan& plan =
            plan_cache_nl(cfg.group, f, cfg.nl_samples);
        std::vector<ad::Var> parts;
        const int c_per = plan.n_coeffs();
        for (int c = 0; c < cfg.copies; ++c) {
          ad::Var block = t.slice_cols(h, c * c_per, (c + 1) * c_per);
          parts.push_back(fourier_nonlinearity_ad(t, block, plan, false));
        }
        h = t.concat_cols(parts);
      }
    } else {
      fw.s_vars.push_back(ad::Var{});
    }
  }
  fw.output = h;
  return fw;
}

}  // namespace

const SamplingPlan& plan_cache_nl(const GroupDescriptor& g, int bandlimit,
                                  int n_per_coset) {
  using Key = std::tuple<int, int, int, int>;
  static std::map<Key, SamplingPlan> cache;
  static std::mutex mtx;
  std::lock_guard<std::mutex> lock(mtx);
  const Key key{static_cast<int>(g.kind), g.finite() ? g.n : 0, bandlimit,
                n_per_coset};
  auto it = cache.find(key);
  if (it == cache.end()) {
    const int n = g.finite() ? g.n : n_per_coset;
    it = cache.emplace(key, make_plan(g, bandlimit, n)).first;
  }
  return it->second;
}

MatrixXd Model::forward(const MatrixXd& x) const {
  ad::Tape t;
  Forward fw = build_graph(t, *this, x, false, false);
  const ad::Tensor& out = t.val(fw.output);
  MatrixXd y(out.rows, out.cols);
  for (int i = 0; i < out.rows; ++i)
    for (int j = 0; j < out.cols; ++j) y(i, j) = out.at(i, j);
  return y;
}

MatrixXd Model::layer_input(const MatrixXd& x, int i) const {
  ad::Tape t;
  Forward fw = build_graph(t, *this, x, false, false);
  const ad::Tensor& a = t.val(fw.layer_inputs.at(i));
  MatrixXd y(a.rows, a.cols);
  for (int r = 0; r < a.rows; ++r)
    for (int c = 0; c < a.cols; ++c) y(r, c) = a.at(r, c);
  return y;
}

MatrixXd Model::apply_layer(const MatrixXd& h, int i) const {
  // run the full graph on a stub input? no: rebuild just this layer
  const Layer& layer = layers_.at(i);
  ad::Tape t;
  ad::Var hv = const_matrix(t, h);
  ad::Var w = vec_var(t, layer.weights, false, true);
  ad::Var lam, pc;
  NormalizedLikelihood norm;
  if (cfg_.mode == ProjectionMode::Probabilistic) {
    norm = normalise(likelihoods_.at(layer.layer_id));
    lam = vec_var(t, norm.coeffs.flat(), false, false);
  }
  if (cfg_.mode == ProjectionMode::Preliminary)
    pc = vec_var(t, layer.prelim_c, false, true);
  ad::Var map = assemble_map_ad(t, layer.plan, w, lam, pc);
  ad::Var y = t.matmul(hv, map, false, true);
  const auto copies = field_copies(layer.out_full);
  if (layer.bias.size() > 0) {
    MatrixXd place = MatrixXd::Zero(layer.bias.size(), layer.out_full.dim());
    int bi = 0;
    for (const auto& c : copies)
      if (c.trivial) place(bi++, c.offset) = 1.0;
    y = t.add_rowvec(y, t.matmul(vec_var(t, layer.bias, false, true),
                                 const_matrix(t, place)));
  }
  if (layer.has_nonlin) {
    y = iid_norm_ad(t, y, copies, vec_var(t, layer.norm_log_scale, false, true),
                    false, layer.running_rms, nullptr);
    if (cfg_.nonlin == Nonlin::Gated) {
      y = gated_nonlinearity_ad(t, y, field_copies(layer.out_feat),
                                layer.out_feat.dim());
    } else {
      const SamplingPlan& plan =
          plan_cache_nl(cfg_.group, cfg_.hidden_freqs[i], cfg_.nl_samples);
      std::vector<ad::Var> parts;
      const int c_per = plan.n_coeffs();
      for (int c = 0; c < cfg_.copies; ++c)
        parts.push_back(fourier_nonlinearity_ad(
            t, t.slice_cols(y, c * c_per, (c + 1) * c_per), plan, false));
      y = t.concat_cols(parts);
    }
  }
  const ad::Tensor& out = t.val(y);
  MatrixXd res(out.rows, out.cols);
  for (int r = 0; r < out.rows; ++r)
    for (int c = 0; c < out.cols; ++c) res(r, c) = out.at(r, c);
  return res;
}

namespace {

struct LossNodes {
  ad::Var task, align, kl, total;
};

LossNodes build_losses(ad::Tape& t, const Model& model, Forward& fw,
                       const MatrixXd& y) {
  const ModelConfig& cfg = model.config();
  LossNodes out;
  out.task = t.mean_all(t.square(t.sub(fw.output, const_matrix(t, y))));

  if (cfg.mode == ProjectionMode::Probabilistic) {
    std::vector<ad::Var> aligns;
    for (auto& [id, lik] : fw.liks) aligns.push_back(alignment_error_ad(t, lik));
    ad::Var asum = aligns[0];
    for (std::size_t i = 1; i < aligns.size(); ++i) asum = t.add(asum, aligns[i]);
    out.align = t.scale(asum, 1.0 / static_cast<double>(aligns.size()));

    std::vector<std::pair<int, int>> pairs = cfg.kl_pairs;
    if (pairs.empty())
      for (std::size_t i = 1; i < model.layers().size(); ++i)
        pairs.push_back({static_cast<int>(i), static_cast<int>(i) - 1});
    std::vector<ad::Var> kls;
    for (const auto& [m, n] : pairs) {
      const std::string mid = model.layers().at(m).layer_id;
      if (n < 0) {
        kls.push_back(kl_to_uniform_ad(t, fw.liks.at(mid)));
      } else {
        const std::string nid = model.layers().at(n).layer_id;
        kls.push_back(kl_divergence_ad(t, fw.liks.at(mid), fw.liks.at(nid)));
      }
    }
    if (!kls.empty()) {
      ad::Var ksum = kls[0];
      for (std::size_t i = 1; i < kls.size(); ++i) ksum = t.add(ksum, kls[i]);
      out.kl = t.scale(ksum, 1.0 / static_cast<double>(kls.size()));
    } else {
      out.kl = t.constant_scalar(0.0);
    }
    ad::Var total = t.add(out.task, t.scale(out.align, cfg.alpha_align));
    out.total = t.add(total, t.scale(out.kl, cfg.alpha_kl));
  } else {
    out.align = t.constant_scalar(0.0);
    out.kl = t.constant_scalar(0.0);
    out.total = out.task;
  }
  return out;
}

}  // namespace

void adam_step(VectorXd& param, const VectorXd& grad, VectorXd& m, VectorXd& v,
               double lr, std::int64_t t, double beta1, double beta2,
               double eps) {
  m = beta1 * m + (1.0 - beta1) * grad;
  v = (beta2 * v.array() + (1.0 - beta2) * grad.array().square()).matrix();
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  param.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + eps);
}

StepStats Model::train_step(const MatrixXd& x, const MatrixXd& y, double lr) {
  ad::Tape t;
  Forward fw = build_graph(t, *this, x, true, true);
  LossNodes loss = build_losses(t, *this, fw, y);

  StepStats stats;
  stats.task = t.scalar(loss.task);
  stats.align = t.scalar(loss.align);
  stats.kl = t.scalar(loss.kl);
  stats.total = t.scalar(loss.total);
  if (!std::isfinite(stats.total))
    throw TrainingDiverged("non-finite loss at adam step " +
                           std::to_string(adam_t_ + 1));

  t.backward(loss.total);

  // gradients in registration order
  std::vector<const ad::Tensor*> grads;
  if (cfg_.mode == ProjectionMode::Probabilistic)
    for (auto& [id, lik] : likelihoods_) grads.push_back(&t.grad(fw.logit_vars[id]));
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    grads.push_back(&t.grad(fw.w_vars[i]));
    if (layers_[i].bias.size() > 0) grads.push_back(&t.grad(fw.b_vars[i]));
    if (layers_[i].has_nonlin) grads.push_back(&t.grad(fw.s_vars[i]));
    if (cfg_.mode == ProjectionMode::Preliminary)
      grads.push_back(&t.grad(fw.c_vars[i]));
  }
  if (grads.size() != slots_.size())
    throw std::logic_error("parameter slot mismatch");

  ++adam_t_;
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    ParamSlot& s = slots_[i];
    Eigen::Map<VectorXd> p(s.data, s.size);
    VectorXd g(s.size);
    for (int k = 0; k < s.size; ++k) g(k) = grads[i]->v[k];
    VectorXd pv = p;
    adam_step(pv, g, s.m, s.v, lr, adam_t_);
    p = pv;
  }

  // running RMS buffers
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (!layers_[i].has_nonlin) continue;
    for (std::size_t f = 0; f < fw.rms[i].size(); ++f)
      layers_[i].running_rms(static_cast<int>(f)) =
          0.9 * layers_[i].running_rms(static_cast<int>(f)) + 0.1 * fw.rms[i][f];
  }
  return stats;
}

StepStats Model::eval_losses(const MatrixXd& x, const MatrixXd& y) {
  ad::Tape t;
  Forward fw = build_graph(t, *this, x, false, false);
  LossNodes loss = build_losses(t, *this, fw, y);
  StepStats stats;
  stats.task = t.scalar(loss.task);
  stats.align = t.scalar(loss.align);
  stats.kl = t.scalar(loss.kl);
  stats.total = t.scalar(loss.total);
  return stats;
}

double Model::loss_value(const MatrixXd& x, const MatrixXd& y) const {
  ad::Tape t;
  Forward fw = build_graph(t, *this, x, true, false);
  LossNodes loss = build_losses(t, *this, fw, y);
  return t.scalar(loss.total);
}

std::vector<VectorXd> Model::loss_gradients(const MatrixXd& x,
                                            const MatrixXd& y) const {
  ad::Tape t;
  Forward fw = build_graph(t, *this, x, true, true);
  LossNodes loss = build_losses(t, *this, fw, y);
  t.backward(loss.total);
  std::vector<const ad::Tensor*> grads;
  if (cfg_.mode == ProjectionMode::Probabilistic)
    for (const auto& [id, lik] : likelihoods_)
      grads.push_back(&t.grad(fw.logit_vars.at(id)));
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    grads.push_back(&t.grad(fw.w_vars[i]));
    if (layers_[i].bias.size() > 0) grads.push_back(&t.grad(fw.b_vars[i]));
    if (layers_[i].has_nonlin) grads.push_back(&t.grad(fw.s_vars[i]));
    if (cfg_.mode == ProjectionMode::Preliminary)
      grads.push_back(&t.grad(fw.c_vars[i]));
  }
  std::vector<VectorXd> out;
  for (const auto* g : grads) {
    VectorXd v(g->size());
    for (std::size_t i = 0; i < g->size(); ++i)
      v(static_cast<int>(i)) = g->v[i];
    out.push_back(std::move(v));
  }
  return out;
}

double Model::mse(const MatrixXd& x, const MatrixXd& y) const {
  const MatrixXd pred = forward(x);
  return (pred - y).array().square().mean();
}

NormalizedLikelihood Model::likelihood(const std::string& layer_id) const {
  return normalise(likelihoods_.at(layer_id));
}

std::vector<EpochStats> train(Model& model, const MatrixXd& x, const MatrixXd& y,
                              const TrainOptions& opts) {
  std::vector<EpochStats> history;
  const int n = static_cast<int>(x.rows());
  const int batch = std::min(opts.batch, n);
  Rng shuffle_rng(opts.seed ^ 0x5f3759dfULL);
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;

  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    if (batch < n) {
      for (int i = n - 1; i > 0; --i)
        std::swap(order[i], order[shuffle_rng.uniform_int(0, i)]);
    }
    EpochStats es;
    es.epoch = epoch;
    int steps = 0;
    for (int start = 0; start < n; start += batch) {
      const int bs = std::min(batch, n - start);
      MatrixXd xb(bs, x.cols()), yb(bs, y.cols());
      for (int i = 0; i < bs; ++i) {
        xb.row(i) = x.row(order[start + i]);
        yb.row(i) = y.row(order[start + i]);
      }
      const StepStats ss = model.train_step(xb, yb, opts.lr);
      es.task += ss.task;
      es.align += ss.align;
      es.kl += ss.kl;
      ++steps;
    }
    es.task /= steps;
    es.align /= steps;
    es.kl /= steps;
    history.push_back(es);
  }
  return history;
}

std::string model_to_json(const Model& model) {
  const ModelConfig& cfg = model.config();
  json j;
  j["group"] = cfg.group.name();
  j["bandlimit"] = cfg.bandlimit;
  j["nonlinearity"] = nonlin_name(cfg.nonlin);
  j["seed"] = cfg.seed;
  json cfgj;
  cfgj["mode"] = mode_name(cfg.mode);
  cfgj["n_targets"] = cfg.n_targets;
  cfgj["hidden_freqs"] = cfg.hidden_freqs;
  cfgj["copies"] = cfg.copies;
  cfgj["shared_equivariance"] = cfg.shared_equivariance;
  cfgj["alpha_align"] = cfg.alpha_align;
  cfgj["alpha_kl"] = cfg.alpha_kl;
  cfgj["init_gain"] = cfg.init_gain;
  cfgj["nl_samples"] = cfg.nl_samples;
  cfgj["prelim_noise"] = cfg.prelim_noise;
  j["config"] = cfgj;

  auto field_json = [](const FieldType& f) {
    json out = json::array();
    for (const auto& [id, mult] : f.entries)
      out.push_back({id.flip, id.freq, mult});
    return out;
  };

  j["layers"] = json::array();
  for (const auto& l : model.layers()) {
    json lj;
    lj["field_in"] = field_json(l.plan.field_in);
    lj["field_out"] = field_json(l.out_feat);
    lj["mode"] = mode_name(cfg.mode);
    lj["layer_id"] = l.layer_id;
    lj["weights"] = std::vector<double>(l.weights.data(),
                                        l.weights.data() + l.weights.size());
    const auto& lik = model.likelihoods().at(l.layer_id);
    lj["logits"] = std::vector<double>(lik.logits->data(),
                                       lik.logits->data() + lik.logits->size());
    lj["bias"] =
        std::vector<double>(l.bias.data(), l.bias.data() + l.bias.size());
    lj["norm_log_scale"] =
        std::vector<double>(l.norm_log_scale.data(),
                            l.norm_log_scale.data() + l.norm_log_scale.size());
    lj["running_rms"] = std::vector<double>(
        l.running_rms.data(), l.running_rms.data() + l.running_rms.size());
    j["layers"].push_back(lj);
  }
  return j.dump(2);
}

Model model_from_json(const std::string& json_text) {
  const json j = json::parse(json_text);
  ModelConfig cfg;
  cfg.group = parse_group(j.at("group").get<std::string>());
  cfg.bandlimit = j.at("bandlimit").get<int>();
  cfg.nonlin = parse_nonlin(j.at("nonlinearity").get<std::string>());
  cfg.seed = j.at("seed").get<std::uint64_t>();
  const json& cj = j.at("config");
  cfg.mode = parse_mode(cj.at("mode").get<std::string>());
  cfg.n_targets = cj.at("n_targets").get<int>();
  cfg.hidden_freqs = cj.at("hidden_freqs").get<std::vector<int>>();
  cfg.copies = cj.at("copies").get<int>();
  cfg.shared_equivariance = cj.at("shared_equivariance").get<bool>();
  cfg.alpha_align = cj.at("alpha_align").get<double>();
  cfg.alpha_kl = cj.at("alpha_kl").get<double>();
  cfg.init_gain = cj.at("init_gain").get<double>();
  cfg.nl_samples = cj.at("nl_samples").get<int>();
  cfg.prelim_noise = cj.at("prelim_noise").get<double>();

  Model model(cfg);
  const json& layers = j.at("layers");
  for (std::size_t i = 0; i < model.layers_.size(); ++i) {
    const json& lj = layers.at(i);
    auto load = [&](const char* key, VectorXd& dst) {
      const auto vals = lj.at(key).get<std::vector<double>>();
      if (static_cast<int>(vals.size()) != dst.size())
        throw std::invalid_argument("checkpoint: size mismatch for " +
                                    std::string(key));
      for (std::size_t k = 0; k < vals.size(); ++k)
        dst(static_cast<int>(k)) = vals[k];
    };
    load("weights", model.layers_[i].weights);
    load("bias", model.layers_[i].bias);
    load("norm_log_scale", model.layers_[i].norm_log_scale);
    load("running_rms", model.layers_[i].running_rms);
    const auto logit_vals = lj.at("logits").get<std::vector<double>>();
    auto& lik = model.likelihoods_.at(model.layers_[i].layer_id);
    if (static_cast<int>(logit_vals.size()) != lik.logits->size())
      throw std::invalid_argument("checkpoint: logits size mismatch");
    for (std::size_t k = 0; k < logit_vals.size(); ++k)
      (*lik.logits)(static_cast<int>(k)) = logit_vals[k];
  }
  return model;
}

}  // namespace steer::nn
