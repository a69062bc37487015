// Per-pixel logistic model trained by gradient descent under any loss.
//
// Inputs per pixel: the synthetic feature channels plus the positive and
// negative click disks. p = sigmoid(w . x + b); dL/dz = dL/dp * p (1 - p).
#pragma once

#include <cmath>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "iseg/clicks.hpp"
#include "iseg/clicksim.hpp"
#include "iseg/loss_config.hpp"
#include "iseg/synthgen.hpp"

namespace iseg {

class TrainingError : public Error {
 public:
  TrainingError(std::size_t step, const std::string& what)
      : Error("training diverged at step " + std::to_string(step) + ": " + what), step(step) {}
  std::size_t step;
};

struct PixelModel {
  std::vector<double> weights;  // feature channels, then positive / negative click channels
  double bias = 0.0;
  double click_radius = kDefaultClickRadius;

  static PixelModel zeros(std::size_t n_inputs) { return {std::vector<double>(n_inputs, 0.0), 0.0}; }
};

enum class Optimizer { sgd, adam };

struct TrainConfig {
  LossConfig loss;
  std::size_t steps = 500;
  double learning_rate = 0.5;
  Optimizer optimizer = Optimizer::adam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  Seed seed{};
  std::size_t instance = 0;  // which ground-truth instance is the target
  double click_radius = kDefaultClickRadius;

  void validate() const {
    require(steps >= 1, "TrainConfig: steps must be >= 1");
    require(learning_rate >= 0.0 && std::isfinite(learning_rate),
            "TrainConfig: learning_rate must be finite and >= 0");
  }
};

struct TrainLogRow {
  std::size_t step = 0;
  double loss = 0.0;
  double iou = 0.0;
  double gamma_a = 0.0;
  double gamma_d = 0.0;
  double mu = 1.0;
};

struct TrainResult {
  PixelModel model;
  std::vector<TrainLogRow> log;
  double final_iou = 0.0;
  double final_loss = 0.0;
};

inline Field logit_chain(const Field& grad_wrt_prob, const ProbMap& probs) {
  require_same_shape(grad_wrt_prob, probs, "logit_chain");
  std::vector<double> out(probs.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = grad_wrt_prob[i] * probs[i] * (1.0 - probs[i]);
  return Field(probs.height(), probs.width(), std::move(out));
}

/// Row-major design matrix: one row of inputs per pixel.
struct Design {
  std::size_t pixels = 0;
  std::size_t inputs = 0;
  std::size_t h = 0, w = 0;
  std::vector<double> x;

  double operator()(std::size_t i, std::size_t j) const { return x[i * inputs + j]; }
};

inline Design make_design(std::span<const Field> features, std::span<const ClickRecord> clicks,
                          double radius) {
  require(!features.empty(), "make_design: no feature channels");
  const std::size_t h = features.front().height(), w = features.front().width();
  for (const auto& f : features) require_same_shape(f, features.front(), "make_design");
  const ClickMaps cm = encode_clicks(clicks, h, w, radius);
  Design d{h * w, features.size() + 2, h, w, {}};
  d.x.resize(d.pixels * d.inputs);
  for (std::size_t i = 0; i < d.pixels; ++i) {
    for (std::size_t k = 0; k < features.size(); ++k) d.x[i * d.inputs + k] = features[k][i];
    d.x[i * d.inputs + features.size()] = cm.positive[i];
    d.x[i * d.inputs + features.size() + 1] = cm.negative[i];
  }
  return d;
}

inline ProbMap predict(const PixelModel& m, const Design& d) {
  require(m.weights.size() == d.inputs, "predict: model input size does not match features");
  std::vector<double> p(d.pixels);
  for (std::size_t i = 0; i < d.pixels; ++i) {
    double z = m.bias;
    for (std::size_t j = 0; j < d.inputs; ++j) z += m.weights[j] * d(i, j);
    p[i] = 1.0 / (1.0 + std::exp(-z));
  }
  return ProbMap(d.h, d.w, std::move(p));
}

struct ParamGrad {
  std::vector<double> weights;
  double bias = 0.0;
};

inline ParamGrad param_gradient(const Design& d, const Field& grad_logit) {
  ParamGrad g{std::vector<double>(d.inputs, 0.0), 0.0};
  for (std::size_t i = 0; i < d.pixels; ++i) {
    const double gz = grad_logit[i];
    for (std::size_t j = 0; j < d.inputs; ++j) g.weights[j] += gz * d(i, j);
    g.bias += gz;
  }
  return g;
}

/// Training clicks: the first simulated click on the target instance.
inline std::vector<ClickRecord> training_clicks(const BinaryMask& gt) {
  const BinaryMask empty(gt.height(), gt.width(), std::uint8_t{0});
  return {next_click(empty, gt)};
}

/// Deterministic: zero initialization and no sampling, so the seed only
/// labels the run.
inline TrainResult train(const SynthSample& sample, const TrainConfig& cfg) {
  cfg.validate();
  if (cfg.instance >= sample.gt_instances.size())
    throw ParameterError("train: instance index out of range");
  const BinaryMask& gt = sample.gt_instances[cfg.instance];
  const auto channels = feature_channels(sample);
  const auto clicks = training_clicks(gt);
  const Design d = make_design(channels, clicks, cfg.click_radius);

  TrainResult r;
  r.model = PixelModel::zeros(d.inputs);
  r.model.click_radius = cfg.click_radius;
  std::vector<double> m1(d.inputs + 1, 0.0), m2(d.inputs + 1, 0.0);

  for (std::size_t step = 1; step <= cfg.steps; ++step) {
    const ProbMap p = predict(r.model, d);
    const LossOutput lo = evaluate_loss(cfg.loss, p, gt);
    if (!std::isfinite(lo.value)) throw TrainingError(step, "non-finite loss");
    r.log.push_back({step, lo.value, iou(binarize(p), gt), lo.diagnostics.at("gamma_a"),
                     lo.diagnostics.at("gamma_d"), lo.diagnostics.at("mu")});

    const ParamGrad g = param_gradient(d, logit_chain(lo.grad, p));
    for (std::size_t j = 0; j <= d.inputs; ++j) {
      const double gj = j < d.inputs ? g.weights[j] : g.bias;
      double upd;
      if (cfg.optimizer == Optimizer::sgd) {
        upd = cfg.learning_rate * gj;
      } else {
        m1[j] = cfg.beta1 * m1[j] + (1.0 - cfg.beta1) * gj;
        m2[j] = cfg.beta2 * m2[j] + (1.0 - cfg.beta2) * gj * gj;
        const double mh = m1[j] / (1.0 - std::pow(cfg.beta1, static_cast<double>(step)));
        const double vh = m2[j] / (1.0 - std::pow(cfg.beta2, static_cast<double>(step)));
        upd = cfg.learning_rate * mh / (std::sqrt(vh) + cfg.adam_eps);
      }
      (j < d.inputs ? r.model.weights[j] : r.model.bias) -= upd;
    }
    for (double v : r.model.weights)
      if (!std::isfinite(v)) throw TrainingError(step, "non-finite parameter");
  }

  const ProbMap p = predict(r.model, d);
  r.final_iou = iou(binarize(p), gt);
  r.final_loss = evaluate_loss(cfg.loss, p, gt).value;
  return r;
}

inline std::string log_csv(const std::vector<TrainLogRow>& log) {
  std::ostringstream os;
  os.precision(17);
  os << "step,loss,iou,gamma_a,gamma_d,mu\n";
  for (const auto& r : log)
    os << r.step << ',' << r.loss << ',' << r.iou << ',' << r.gamma_a << ',' << r.gamma_d << ','
       << r.mu << '\n';
  return os.str();
}

struct ComparisonRow {
  std::string name;
  LossConfig loss;
  double final_iou = 0.0;
  double final_loss = 0.0;
  std::vector<TrainLogRow> log;
};

/// One run per loss from the same (zero) initialization.
inline std::vector<ComparisonRow> compare_losses(const SynthSample& sample,
                                                 const std::vector<LossConfig>& losses,
                                                 const TrainConfig& base) {
  std::vector<ComparisonRow> rows;
  for (const auto& l : losses) {
    TrainConfig cfg = base;
    cfg.loss = l;
    TrainResult r = train(sample, cfg);
    rows.push_back({std::string(to_string(l.kind)), l, r.final_iou, r.final_loss, std::move(r.log)});
  }
  return rows;
}

/// Clicks-aware predictor backed by a trained pixel model.
inline Predictor make_trained_predictor(PixelModel model) {
  return [model = std::move(model)](const NocSample& s, std::span<const ClickRecord> clicks) {
    return predict(model, make_design(s.features, clicks, model.click_radius));
  };
}

}  // namespace iseg
