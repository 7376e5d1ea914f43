#include "robusta/detector.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "robusta/error.hpp"
#include "robusta/rng.hpp"

namespace robusta {

namespace {

constexpr const char* kModule = "detector";
// Logits are clamped so that scores stay strictly inside (0, 1) in double.
constexpr double kLogitClamp = 36.0;
constexpr double kMinStd = 1e-3;

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

struct ForwardCache {
  Matrix input;                 // detector input rows (post projection)
  std::vector<Matrix> pre;      // pre-activation of every layer
  std::vector<Matrix> act;      // act[0] = input, act[l] = relu(pre[l-1])
  std::vector<double> logits;   // clamped
  std::vector<double> scores;
};

Matrix detector_input(const AnomalyModel& model, const PreparedSample& s) {
  if (s.view == SampleView::AudioView && model.projection) return project(s.input, *model.projection);
  return s.input;
}

ForwardCache forward(const DetectorParams& det, Matrix input) {
  ForwardCache c;
  c.act.push_back(std::move(input));
  const std::size_t L = det.layers.size();
  for (std::size_t l = 0; l < L; ++l) {
    const auto& layer = det.layers[l];
    Matrix z = c.act.back() * layer.weight;
    z.rowwise() += layer.bias;
    c.pre.push_back(z);
    if (l + 1 < L) c.act.push_back(z.cwiseMax(0.0));
  }
  const Matrix& out = c.pre.back();
  c.logits.resize(static_cast<std::size_t>(out.rows()));
  c.scores.resize(c.logits.size());
  for (std::size_t i = 0; i < c.logits.size(); ++i) {
    c.logits[i] = std::clamp(out(static_cast<Eigen::Index>(i), 0), -kLogitClamp, kLogitClamp);
    c.scores[i] = sigmoid(c.logits[i]);
  }
  c.input = c.act.front();
  return c;
}

void check_detector_input(const DetectorParams& det, const Matrix& features) {
  if (det.layers.empty()) throw ContractError(kModule, "detector has no layers");
  if (static_cast<std::size_t>(features.cols()) != det.input_dim()) {
    throw ContractError(kModule, "feature width " + std::to_string(features.cols()) +
                                     " != detector input " + std::to_string(det.input_dim()));
  }
}

// Accumulates the parameter gradient of one sample into g, given d loss / d score.
void backward(const AnomalyModel& model, const PreparedSample& sample, const ForwardCache& c,
              std::span<const double> dscore, LossAndGradient& g) {
  const auto& det = model.detector;
  const std::size_t L = det.layers.size();
  const auto rows = static_cast<Eigen::Index>(c.scores.size());
  Matrix delta(rows, 1);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    const double z = c.pre.back()(i, 0);
    const bool clamped = z <= -kLogitClamp || z >= kLogitClamp;
    const double s = c.scores[idx];
    delta(i, 0) = clamped ? 0.0 : dscore[idx] * s * (1.0 - s);
  }
  for (std::size_t l = L; l-- > 0;) {
    g.detector.layers[l].weight.noalias() += c.act[l].transpose() * delta;
    g.detector.layers[l].bias += delta.colwise().sum();
    if (l == 0 && !(sample.view == SampleView::AudioView && model.projection)) break;
    Matrix upstream = delta * det.layers[l].weight.transpose();
    if (l > 0) {
      delta = upstream.cwiseProduct((c.pre[l - 1].array() > 0.0).cast<double>().matrix());
    } else {
      // Through the projection: input = audio * W + b.
      g.projection->weight.noalias() += sample.input.transpose() * upstream;
      g.projection->bias += upstream.colwise().sum();
    }
  }
}

LossAndGradient zero_like(const AnomalyModel& model) {
  LossAndGradient g;
  if (model.projection) {
    g.projection = ProjectionParams{Matrix::Zero(model.projection->weight.rows(), model.projection->weight.cols()),
                                    RowVector::Zero(model.projection->bias.size())};
  }
  for (const auto& layer : model.detector.layers) {
    g.detector.layers.push_back(DenseLayer{Matrix::Zero(layer.weight.rows(), layer.weight.cols()),
                                           RowVector::Zero(layer.bias.size())});
  }
  return g;
}

Matrix glorot(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Matrix w(static_cast<Eigen::Index>(fan_in), static_cast<Eigen::Index>(fan_out));
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = rng.uniform(-limit, limit);
  }
  return w;
}

Matrix scaled_or_filled(const FeatureScaler& scaler, const SegmentedModalityFeatures* f, std::size_t rows) {
  if (f) return scaler.apply(*f);
  // Zero-filled raw block, then standardised like real input.
  Matrix z(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(scaler.dim()));
  for (Eigen::Index i = 0; i < z.rows(); ++i) z.row(i) = (-scaler.mean).cwiseProduct(scaler.inv_std);
  return z;
}

// Detector-space rows for a view, given raw features.
Matrix make_view(const AnomalyModel& model, const SegmentedModalityFeatures* audio,
                 const SegmentedModalityFeatures* visual, SampleView view) {
  switch (view) {
    case SampleView::AudioView: {
      if (!is_shared(model.variant)) throw ContractError(kModule, "audio view needs a shared-space model");
      if (!audio) throw ContractError(kModule, "audio view without audio features");
      if (audio->dim != model.audio_dim) throw ContractError(kModule, "audio dim mismatch");
      Matrix a = model.audio_scaler.apply(*audio);
      if (model.variant == ModelVariant::SharedProjection) return a;
      Matrix padded = Matrix::Zero(a.rows(), static_cast<Eigen::Index>(model.visual_dim));
      padded.leftCols(a.cols()) = a;
      return padded;
    }
    case SampleView::VisualView:
      if (!is_shared(model.variant)) throw ContractError(kModule, "visual view needs a shared-space model");
      if (!visual) throw ContractError(kModule, "visual view without visual features");
      if (visual->dim != model.visual_dim) throw ContractError(kModule, "visual dim mismatch");
      return model.visual_scaler.apply(*visual);
    case SampleView::ConcatView: {
      if (model.variant != ModelVariant::Concat) throw ContractError(kModule, "concat view needs the concat model");
      if (!audio && !visual) throw ContractError(kModule, "concat view without features");
      if (audio && audio->dim != model.audio_dim) throw ContractError(kModule, "audio dim mismatch");
      if (visual && visual->dim != model.visual_dim) throw ContractError(kModule, "visual dim mismatch");
      const std::size_t m = audio ? audio->segments : visual->segments;
      Matrix a = scaled_or_filled(model.audio_scaler, audio, m);
      Matrix v = scaled_or_filled(model.visual_scaler, visual, m);
      Matrix out(a.rows(), a.cols() + v.cols());
      out << a, v;
      return out;
    }
  }
  throw ContractError(kModule, "unknown view");
}

std::vector<std::uint8_t> signature(const ForwardCache& c, std::size_t top_k) {
  std::vector<std::uint8_t> sig;
  for (std::size_t l = 0; l + 1 < c.pre.size(); ++l) {
    const auto& z = c.pre[l];
    for (Eigen::Index i = 0; i < z.size(); ++i) sig.push_back(z.data()[i] > 0.0);
  }
  for (std::size_t i = 0; i < c.scores.size(); ++i) {
    const double raw = c.pre.back()(static_cast<Eigen::Index>(i), 0);
    sig.push_back(static_cast<std::uint8_t>((c.scores[i] <= kMilEps) | ((c.scores[i] >= 1.0 - kMilEps) << 1) |
                                            ((std::abs(raw) >= kLogitClamp) << 2)));
  }
  for (auto idx : top_k_indices(c.scores, std::min(top_k, c.scores.size()))) {
    sig.push_back(static_cast<std::uint8_t>(idx));
  }
  return sig;
}

}  // namespace

std::string_view to_string(ModelVariant v) noexcept {
  switch (v) {
    case ModelVariant::SharedProjection: return "shared";
    case ModelVariant::SharedPadding: return "padding";
    case ModelVariant::Concat: return "concat";
  }
  return "?";
}

std::optional<ModelVariant> parse_model_variant(std::string_view name) {
  if (name == "shared" || name == "projection") return ModelVariant::SharedProjection;
  if (name == "padding") return ModelVariant::SharedPadding;
  if (name == "concat") return ModelVariant::Concat;
  return std::nullopt;
}

bool is_shared(ModelVariant v) noexcept { return v != ModelVariant::Concat; }

FeatureScaler FeatureScaler::fit(std::span<const SegmentedModalityFeatures* const> blocks) {
  if (blocks.empty()) throw ContractError(kModule, "cannot fit a scaler on no features");
  const std::size_t d = blocks.front()->dim;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
  Eigen::VectorXd sq = sum;
  double count = 0.0;
  for (const auto* b : blocks) {
    if (b->dim != d) throw ContractError(kModule, "scaler inputs disagree on dim");
    for (std::size_t i = 0; i < b->segments; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        const double v = b->at(i, j);
        sum[static_cast<Eigen::Index>(j)] += v;
        sq[static_cast<Eigen::Index>(j)] += v * v;
      }
      count += 1.0;
    }
  }
  FeatureScaler s;
  s.mean = (sum / count).transpose();
  s.inv_std.resize(static_cast<Eigen::Index>(d));
  for (Eigen::Index j = 0; j < s.mean.size(); ++j) {
    const double var = std::max(0.0, sq[j] / count - s.mean[j] * s.mean[j]);
    s.inv_std[j] = 1.0 / std::max(std::sqrt(var), kMinStd);
  }
  return s;
}

FeatureScaler FeatureScaler::identity(std::size_t dim) {
  FeatureScaler s;
  s.mean = RowVector::Zero(static_cast<Eigen::Index>(dim));
  s.inv_std = RowVector::Ones(static_cast<Eigen::Index>(dim));
  return s;
}

Matrix FeatureScaler::apply(const SegmentedModalityFeatures& f) const {
  if (f.dim != dim()) throw ContractError(kModule, "scaler dim mismatch");
  Matrix out(static_cast<Eigen::Index>(f.segments), static_cast<Eigen::Index>(f.dim));
  for (std::size_t i = 0; i < f.segments; ++i) {
    for (std::size_t j = 0; j < f.dim; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      out(static_cast<Eigen::Index>(i), jj) = (f.at(i, j) - mean[jj]) * inv_std[jj];
    }
  }
  return out;
}

void validate_config(const TrainConfig& cfg) {
  auto fail = [](const std::string& what) { throw ContractError(kModule, "invalid train config: " + what); };
  if (cfg.epochs == 0) fail("epochs must be positive");
  if (!(cfg.learning_rate >= 0.0) || !std::isfinite(cfg.learning_rate)) fail("learning rate must be >= 0");
  if (cfg.batch_size == 0) fail("batch size must be positive");
  if (!(cfg.weight_decay >= 0.0)) fail("weight decay must be >= 0");
  if (cfg.top_k && *cfg.top_k == 0) fail("top_k must be positive");
  for (auto h : cfg.hidden) {
    if (h == 0) fail("hidden sizes must be positive");
  }
}

Matrix project(const Matrix& audio, const ProjectionParams& params) {
  if (static_cast<std::size_t>(audio.cols()) != params.in_dim()) {
    throw ContractError(kModule, "projection expects d_A=" + std::to_string(params.in_dim()) +
                                     ", got " + std::to_string(audio.cols()));
  }
  if (params.bias.size() != params.weight.cols()) throw ContractError(kModule, "projection bias shape");
  Matrix out = audio * params.weight;
  out.rowwise() += params.bias;
  return out;
}

std::vector<double> forward_score(const Matrix& features, const DetectorParams& params) {
  check_detector_input(params, features);
  return forward(params, features).scores;
}

std::vector<std::size_t> top_k_indices(std::span<const double> scores, std::size_t k) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  idx.resize(std::min(k, idx.size()));
  return idx;
}

MilLoss mil_loss(std::span<const double> scores, std::uint8_t label, std::size_t k) {
  if (k < 1 || k > scores.size()) {
    throw ContractError(kModule, "top-k " + std::to_string(k) + " outside [1, " + std::to_string(scores.size()) + "]");
  }
  const auto top = top_k_indices(scores, k);
  double mean = 0.0;
  for (auto i : top) mean += std::clamp(scores[i], kMilEps, 1.0 - kMilEps);
  mean /= static_cast<double>(k);
  const double y = label ? 1.0 : 0.0;
  MilLoss out;
  out.loss = -(y * std::log(mean) + (1.0 - y) * std::log(1.0 - mean));
  out.grad.assign(scores.size(), 0.0);
  const double dmean = -y / mean + (1.0 - y) / (1.0 - mean);
  for (auto i : top) {
    const bool inside = scores[i] > kMilEps && scores[i] < 1.0 - kMilEps;
    out.grad[i] = inside ? dmean / static_cast<double>(k) : 0.0;
  }
  return out;
}

AnomalyModel init_model(ModelVariant variant, std::size_t audio_dim, std::size_t visual_dim, const TrainConfig& cfg) {
  validate_config(cfg);
  if (audio_dim == 0 || visual_dim == 0) throw ContractError(kModule, "feature dims must be positive");
  if (variant == ModelVariant::SharedPadding && audio_dim > visual_dim) {
    throw ContractError(kModule, "padding needs d_A <= d_V");
  }
  AnomalyModel m;
  m.variant = variant;
  m.audio_dim = audio_dim;
  m.visual_dim = visual_dim;
  m.audio_scaler = FeatureScaler::identity(audio_dim);
  m.visual_scaler = FeatureScaler::identity(visual_dim);
  m.train_config = cfg;
  Rng rng(derive_seed(cfg.seed, "init"));
  if (variant == ModelVariant::SharedProjection) {
    m.projection = ProjectionParams{glorot(audio_dim, visual_dim, rng), RowVector::Zero(static_cast<Eigen::Index>(visual_dim))};
  }
  std::size_t fan_in = variant == ModelVariant::Concat ? audio_dim + visual_dim : visual_dim;
  std::vector<std::size_t> widths = cfg.hidden;
  widths.push_back(1);
  for (auto w : widths) {
    m.detector.layers.push_back(DenseLayer{glorot(fan_in, w, rng), RowVector::Zero(static_cast<Eigen::Index>(w))});
    fan_in = w;
  }
  return m;
}

Matrix AnomalyModel::view_input(const VideoBag& bag, SampleView view) const {
  return make_view(*this, bag.features(Modality::Audio), bag.features(Modality::Visual), view);
}

std::vector<double> AnomalyModel::score_audio(const SegmentedModalityFeatures& audio) const {
  PreparedSample s{make_view(*this, &audio, nullptr, SampleView::AudioView), SampleView::AudioView, 0};
  return forward_score(detector_input(*this, s), detector);
}

std::vector<double> AnomalyModel::score_visual(const SegmentedModalityFeatures& visual) const {
  return forward_score(make_view(*this, nullptr, &visual, SampleView::VisualView), detector);
}

std::vector<double> AnomalyModel::score_concat(const SegmentedModalityFeatures* audio,
                                               const SegmentedModalityFeatures* visual) const {
  if (audio && visual && audio->segments != visual->segments) throw ContractError(kModule, "segment count mismatch");
  return forward_score(make_view(*this, audio, visual, SampleView::ConcatView), detector);
}

PreparedSample prepare_sample(const AnomalyModel& model, const VideoBag& bag, SampleView view) {
  return PreparedSample{model.view_input(bag, view), view, bag.label};
}

LossAndGradient loss_and_gradient(const AnomalyModel& model, std::span<const PreparedSample> samples,
                                  std::size_t top_k) {
  LossAndGradient g = zero_like(model);
  for (const auto& s : samples) {
    const Matrix x = detector_input(model, s);
    check_detector_input(model.detector, x);
    const auto c = forward(model.detector, x);
    const auto mil = mil_loss(c.scores, s.label, top_k);
    g.loss += mil.loss;
    backward(model, s, c, mil.grad, g);
  }
  return g;
}

double total_loss(const AnomalyModel& model, std::span<const PreparedSample> samples, std::size_t top_k) {
  double loss = 0.0;
  for (const auto& s : samples) {
    const Matrix x = detector_input(model, s);
    check_detector_input(model.detector, x);
    loss += mil_loss(forward(model.detector, x).scores, s.label, top_k).loss;
  }
  return loss;
}

std::vector<double*> parameter_pointers(AnomalyModel& model) {
  std::vector<double*> out;
  auto add = [&](auto& mat) {
    for (Eigen::Index i = 0; i < mat.size(); ++i) out.push_back(mat.data() + i);
  };
  if (model.projection) {
    add(model.projection->weight);
    add(model.projection->bias);
  }
  for (auto& l : model.detector.layers) {
    add(l.weight);
    add(l.bias);
  }
  return out;
}

std::vector<const double*> gradient_pointers(const LossAndGradient& g) {
  std::vector<const double*> out;
  auto add = [&](const auto& mat) {
    for (Eigen::Index i = 0; i < mat.size(); ++i) out.push_back(mat.data() + i);
  };
  if (g.projection) {
    add(g.projection->weight);
    add(g.projection->bias);
  }
  for (const auto& l : g.detector.layers) {
    add(l.weight);
    add(l.bias);
  }
  return out;
}

std::vector<std::pair<std::size_t, SampleView>> epoch_samples(std::size_t bag_count, ModelVariant variant,
                                                              std::uint64_t seed, std::size_t epoch) {
  std::vector<std::pair<std::size_t, SampleView>> out;
  out.reserve(is_shared(variant) ? 2 * bag_count : bag_count);
  for (std::size_t i = 0; i < bag_count; ++i) {
    if (is_shared(variant)) {
      out.emplace_back(i, SampleView::VisualView);
      out.emplace_back(i, SampleView::AudioView);
    } else {
      out.emplace_back(i, SampleView::ConcatView);
    }
  }
  Rng rng(derive_seed(seed, "epoch", epoch));
  rng.shuffle(std::span(out));
  return out;
}

void fit_model(AnomalyModel& model, std::span<const VideoBag> bags, const TrainConfig& cfg) {
  validate_config(cfg);
  if (bags.empty()) throw ContractError(kModule, "no training bags");
  for (const auto& b : bags) {
    if (!b.audio || !b.visual) throw ContractError(kModule, "training bag '" + b.id + "' is missing a modality");
  }
  const std::size_t m = bags.front().segment_count();
  const std::size_t k = cfg.top_k.value_or(default_top_k(m));
  std::vector<PreparedSample> samples;
  std::vector<std::size_t> base(bags.size());  // first sample index of each bag
  for (std::size_t i = 0; i < bags.size(); ++i) {
    if (k > bags[i].segment_count()) throw ContractError(kModule, "top_k exceeds segment count");
    base[i] = samples.size();
    if (is_shared(model.variant)) {
      samples.push_back(prepare_sample(model, bags[i], SampleView::VisualView));
      samples.push_back(prepare_sample(model, bags[i], SampleView::AudioView));
    } else {
      samples.push_back(prepare_sample(model, bags[i], SampleView::ConcatView));
    }
  }
  const double count = static_cast<double>(samples.size());
  model.loss_history.assign(1, total_loss(model, samples, k) / count);

  const std::size_t steps_per_epoch = (samples.size() + cfg.batch_size - 1) / cfg.batch_size;
  const double total_steps = static_cast<double>(steps_per_epoch * cfg.epochs);
  auto params = parameter_pointers(model);
  std::size_t step = 0;
  std::vector<PreparedSample> batch;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto order = epoch_samples(bags.size(), model.variant, cfg.seed, epoch);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      batch.clear();
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      for (std::size_t i = start; i < end; ++i) {
        const auto [bag, view] = order[i];
        batch.push_back(samples[base[bag] + (view == SampleView::AudioView ? 1 : 0)]);
      }
      const auto g = loss_and_gradient(model, batch, k);
      epoch_loss += g.loss;
      const double lr = cfg.learning_rate * 0.5 *
                        (1.0 + std::cos(std::numbers::pi * static_cast<double>(step) / total_steps));
      ++step;
      if (lr == 0.0) continue;
      const auto grads = gradient_pointers(g);
      for (std::size_t p = 0; p < params.size(); ++p) {
        *params[p] -= lr * (*grads[p] + cfg.weight_decay * *params[p]);
      }
    }
    model.loss_history.push_back(epoch_loss / count);
  }
}

namespace {

AnomalyModel prepared_model(std::span<const VideoBag> bags, const TrainConfig& cfg, ModelVariant variant) {
  if (bags.empty()) throw ContractError(kModule, "no training bags");
  std::vector<const SegmentedModalityFeatures*> audio, visual;
  for (const auto& b : bags) {
    if (!b.audio || !b.visual) throw ContractError(kModule, "training bag '" + b.id + "' is missing a modality");
    audio.push_back(&*b.audio);
    visual.push_back(&*b.visual);
  }
  AnomalyModel model = init_model(variant, audio.front()->dim, visual.front()->dim, cfg);
  model.audio_scaler = FeatureScaler::fit(audio);
  model.visual_scaler = FeatureScaler::fit(visual);
  return model;
}

}  // namespace

AnomalyModel train_concat(std::span<const VideoBag> bags, const TrainConfig& cfg) {
  AnomalyModel model = prepared_model(bags, cfg, ModelVariant::Concat);
  fit_model(model, bags, cfg);
  return model;
}

AnomalyModel train_shared(std::span<const VideoBag> bags, const TrainConfig& cfg, ModelVariant variant) {
  if (!is_shared(variant)) throw ContractError(kModule, "train_shared needs a shared variant");
  AnomalyModel model = prepared_model(bags, cfg, variant);
  fit_model(model, bags, cfg);
  return model;
}

GradientCheckResult gradient_check(const AnomalyModel& model, std::span<const PreparedSample> samples,
                                   const GradientCheckOptions& opts) {
  if (samples.empty()) throw ContractError(kModule, "gradient check needs samples");
  const std::size_t m = static_cast<std::size_t>(samples.front().input.rows());
  const std::size_t k = model.train_config.top_k.value_or(default_top_k(m));
  const auto analytic = loss_and_gradient(model, samples, k);
  const auto grads = gradient_pointers(analytic);

  auto signatures = [&](const AnomalyModel& mdl) {
    std::vector<std::uint8_t> sig;
    for (const auto& s : samples) {
      const auto part = signature(forward(mdl.detector, detector_input(mdl, s)), k);
      sig.insert(sig.end(), part.begin(), part.end());
    }
    return sig;
  };
  const auto base_sig = signatures(model);

  AnomalyModel probe = model;
  auto params = parameter_pointers(probe);
  Rng rng(derive_seed(opts.seed, "gradcheck"));
  GradientCheckResult r;
  const std::size_t max_attempts = opts.probes * 20;
  for (std::size_t attempt = 0; attempt < max_attempts && r.checked < opts.probes; ++attempt) {
    const auto idx = static_cast<std::size_t>(rng.below(params.size()));
    const double original = *params[idx];
    *params[idx] = original + opts.step;
    const double plus = total_loss(probe, samples, k);
    const bool same_plus = signatures(probe) == base_sig;
    *params[idx] = original - opts.step;
    const double minus = total_loss(probe, samples, k);
    const bool same_minus = signatures(probe) == base_sig;
    *params[idx] = original;
    if (!same_plus || !same_minus) {
      ++r.skipped;
      continue;
    }
    const double numeric = (plus - minus) / (2.0 * opts.step);
    const double a = *grads[idx] + opts.analytic_bias;
    const double denom = std::max({std::abs(a), std::abs(numeric), opts.floor});
    r.max_relative_error = std::max(r.max_relative_error, std::abs(a - numeric) / denom);
    r.max_abs_analytic = std::max(r.max_abs_analytic, std::abs(a));
    r.max_abs_numeric = std::max(r.max_abs_numeric, std::abs(numeric));
    ++r.checked;
  }
  return r;
}

}  // namespace robusta
