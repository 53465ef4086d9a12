#include "ddhqa/regression.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "ddhqa/error.hpp"

namespace ddhqa {

std::vector<double> fuse(const GeometryFeatureVector& gf, const ClipFeatureRecord& clip,
                         const FeatureDims& dims) {
  if (clip.sf.size() != dims.spatial || clip.tf.size() != dims.temporal) {
    std::ostringstream msg;
    msg << "clip " << clip.video_id << '#' << clip.clip_index << " has sf/tf widths "
        << clip.sf.size() << '/' << clip.tf.size() << ", expected " << dims.spatial << '/'
        << dims.temporal;
    throw Error(ErrorKind::DimensionMismatch, msg.str());
  }
  std::vector<double> fused;
  fused.reserve(dims.fused());
  fused.insert(fused.end(), gf.begin(), gf.end());
  fused.insert(fused.end(), clip.sf.begin(), clip.sf.end());
  fused.insert(fused.end(), clip.tf.begin(), clip.tf.end());
  return fused;
}

void TrainingConfig::validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorKind::InvalidArgument, m); };
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) fail("learning rate must be > 0");
  if (batch_size < 1) fail("batch size must be >= 1");
  if (hidden < 1) fail("hidden width must be >= 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    fail("moment decays must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) fail("epsilon must be > 0");
}

// ---------------------------------------------------------------------------

RegressionHead::RegressionHead(std::size_t input_dim, std::size_t hidden_dim)
    : input_dim_(input_dim),
      hidden_dim_(hidden_dim),
      params_(hidden_dim * (input_dim + 2) + 1, 0.0) {
  if (input_dim == 0 || hidden_dim == 0) {
    throw Error(ErrorKind::InvalidArgument, "regression head needs non-zero dimensions");
  }
}

RegressionHead RegressionHead::initialized(std::size_t input_dim, std::size_t hidden_dim,
                                           std::uint64_t seed) {
  RegressionHead head(input_dim, hidden_dim);
  std::mt19937_64 rng(seed);
  const double bound1 = 1.0 / std::sqrt(static_cast<double>(input_dim));
  const double bound2 = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
  std::uniform_real_distribution<double> layer1(-bound1, bound1);
  std::uniform_real_distribution<double> layer2(-bound2, bound2);
  for (double& w : head.w1()) w = layer1(rng);
  for (double& b : head.b1()) b = layer1(rng);
  for (double& w : head.w2()) w = layer2(rng);
  head.b2() = layer2(rng);
  return head;
}

RegressionHead RegressionHead::from_parameters(std::size_t input_dim, std::size_t hidden_dim,
                                               std::vector<double> params) {
  RegressionHead head(input_dim, hidden_dim);
  if (params.size() != head.params_.size()) {
    throw Error(ErrorKind::ShapeMismatch, "expected " + std::to_string(head.params_.size()) +
                                              " head parameters, got " +
                                              std::to_string(params.size()));
  }
  head.params_ = std::move(params);
  return head;
}

namespace {

void check_input(const RegressionHead& head, std::span<const double> features) {
  if (features.size() != head.input_dim()) {
    throw Error(ErrorKind::DimensionMismatch,
                "head expects " + std::to_string(head.input_dim()) + " inputs, got " +
                    std::to_string(features.size()));
  }
}

// Pre-activations of the hidden layer.
void hidden_preactivation(const RegressionHead& head, std::span<const double> features,
                          std::vector<double>& z) {
  const std::size_t n_in = head.input_dim();
  const auto w1 = head.w1();
  const auto b1 = head.b1();
  z.resize(head.hidden_dim());
  for (std::size_t j = 0; j < head.hidden_dim(); ++j) {
    const double* row = w1.data() + j * n_in;
    double acc = b1[j];
    for (std::size_t k = 0; k < n_in; ++k) acc += row[k] * features[k];
    z[j] = acc;
  }
}

double output_from_hidden(const RegressionHead& head, const std::vector<double>& z) {
  const auto w2 = head.w2();
  double q = head.b2();
  for (std::size_t j = 0; j < z.size(); ++j) q += w2[j] * std::max(0.0, z[j]);
  return q;
}

}  // namespace

double forward(const RegressionHead& head, std::span<const double> features) {
  check_input(head, features);
  std::vector<double> z;
  hidden_preactivation(head, features, z);
  return output_from_hidden(head, z);
}

double predict_quality(const RegressionHead& head, const GeometryFeatureVector& gf,
                       std::span<const ClipFeatureRecord> clips, const FeatureDims& dims) {
  if (clips.empty()) throw Error(ErrorKind::NoClips, "cannot pool an empty clip list");
  double sum = 0.0;
  for (const auto& clip : clips) sum += forward(head, fuse(gf, clip, dims));
  return sum / static_cast<double>(clips.size());
}

double mse_loss(const RegressionHead& head, std::span<const TrainingRow> rows,
                std::span<const std::size_t> indices, std::span<double> gradient) {
  if (indices.empty()) throw Error(ErrorKind::InvalidArgument, "loss over an empty batch");
  const bool want_grad = !gradient.empty();
  if (want_grad && gradient.size() != head.parameter_count()) {
    throw Error(ErrorKind::ShapeMismatch, "gradient buffer does not match head parameters");
  }
  if (want_grad) std::fill(gradient.begin(), gradient.end(), 0.0);

  const std::size_t n_in = head.input_dim();
  const std::size_t n_hidden = head.hidden_dim();
  const double inv_n = 1.0 / static_cast<double>(indices.size());
  const auto w2 = head.w2();
  std::vector<double> z;
  double loss = 0.0;
  for (const auto idx : indices) {
    const auto& row = rows[idx];
    check_input(head, row.features);
    hidden_preactivation(head, row.features, z);
    const double residual = output_from_hidden(head, z) - row.target;
    loss += residual * residual;
    if (!want_grad) continue;

    const double d_out = 2.0 * residual * inv_n;
    double* g_w1 = gradient.data();
    double* g_b1 = g_w1 + n_hidden * n_in;
    double* g_w2 = g_b1 + n_hidden;
    for (std::size_t j = 0; j < n_hidden; ++j) {
      if (z[j] <= 0.0) continue;
      g_w2[j] += d_out * z[j];
      const double d_hidden = d_out * w2[j];
      g_b1[j] += d_hidden;
      double* g_row = g_w1 + j * n_in;
      for (std::size_t k = 0; k < n_in; ++k) g_row[k] += d_hidden * row.features[k];
    }
    gradient.back() += d_out;
  }
  return loss * inv_n;
}

double mse_loss(const RegressionHead& head, std::span<const TrainingRow> rows,
                std::span<double> gradient) {
  std::vector<std::size_t> all(rows.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return mse_loss(head, rows, all, gradient);
}

// ---------------------------------------------------------------------------

void adam_step_in_place(std::span<double> params, std::span<const double> grads,
                        AdamMoments& moments, const TrainingConfig& config, std::size_t step) {
  const std::size_t n = params.size();
  if (grads.size() != n || moments.first.size() != n || moments.second.size() != n) {
    throw Error(ErrorKind::ShapeMismatch, "parameter, gradient and moment buffers differ in size");
  }
  if (step < 1) throw Error(ErrorKind::InvalidArgument, "adam step index starts at 1");
  const double b1 = config.beta1;
  const double b2 = config.beta2;
  const double step_d = static_cast<double>(step);
  const double correction1 = 1.0 - std::pow(b1, step_d);
  const double correction2 = 1.0 - std::pow(b2, step_d);
  for (std::size_t i = 0; i < n; ++i) {
    const double g = grads[i];
    moments.first[i] = b1 * moments.first[i] + (1.0 - b1) * g;
    moments.second[i] = b2 * moments.second[i] + (1.0 - b2) * g * g;
    const double m_hat = moments.first[i] / correction1;
    const double v_hat = moments.second[i] / correction2;
    params[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
  }
}

AdamStepResult adam_step(std::span<const double> params, std::span<const double> grads,
                         const AdamMoments& moments, const TrainingConfig& config,
                         std::size_t step) {
  AdamStepResult out{{params.begin(), params.end()}, moments};
  adam_step_in_place(out.params, grads, out.moments, config, step);
  return out;
}

TrainResult train(RegressionHead head, std::span<const TrainingRow> rows,
                  const TrainingConfig& config) {
  config.validate();
  if (rows.empty()) throw Error(ErrorKind::InvalidArgument, "training set is empty");
  for (const auto& row : rows) {
    if (!std::isfinite(row.target)) throw Error(ErrorKind::InvalidArgument, "non-finite target");
    check_input(head, row.features);
  }

  TrainResult result;
  result.initial_loss = mse_loss(head, rows);
  result.epoch_loss.reserve(config.epochs);

  const std::size_t n_params = head.parameter_count();
  AdamMoments moments{std::vector<double>(n_params, 0.0), std::vector<double>(n_params, 0.0)};
  std::vector<double> gradient(n_params, 0.0);
  std::vector<std::size_t> order(rows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);

  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      const std::span<const std::size_t> batch(order.data() + start, stop - start);
      const double loss = mse_loss(head, rows, batch, gradient);
      if (!std::isfinite(loss)) {
        std::ostringstream msg;
        msg << "loss became non-finite at epoch " << epoch + 1 << ", batch "
            << start / config.batch_size + 1 << " (learning rate " << config.learning_rate
            << ")";
        throw Error(ErrorKind::NonFiniteLoss, msg.str());
      }
      epoch_sum += loss * static_cast<double>(batch.size());
      adam_step_in_place(head.parameters(), gradient, moments, config, ++step);
    }
    result.epoch_loss.push_back(epoch_sum / static_cast<double>(rows.size()));
  }
  result.head = std::move(head);
  return result;
}

// ---------------------------------------------------------------------------

FeatureStandardizer FeatureStandardizer::fit(std::span<const TrainingRow> rows) {
  if (rows.empty()) throw Error(ErrorKind::InvalidArgument, "cannot standardize an empty set");
  const std::size_t dim = rows.front().features.size();
  FeatureStandardizer s{std::vector<double>(dim, 0.0), std::vector<double>(dim, 0.0)};
  for (const auto& row : rows) {
    if (row.features.size() != dim) {
      throw Error(ErrorKind::DimensionMismatch, "rows differ in feature width");
    }
    for (std::size_t k = 0; k < dim; ++k) s.mean[k] += row.features[k];
  }
  const double n = static_cast<double>(rows.size());
  for (double& m : s.mean) m /= n;
  for (const auto& row : rows) {
    for (std::size_t k = 0; k < dim; ++k) {
      const double d = row.features[k] - s.mean[k];
      s.scale[k] += d * d;
    }
  }
  for (double& v : s.scale) {
    const double sd = std::sqrt(v / n);
    v = sd > 0.0 ? sd : 1.0;
  }
  return s;
}

void FeatureStandardizer::apply(std::span<double> features) const {
  if (features.size() != mean.size()) {
    throw Error(ErrorKind::DimensionMismatch, "standardizer width differs from features");
  }
  for (std::size_t k = 0; k < features.size(); ++k) {
    features[k] = (features[k] - mean[k]) / scale[k];
  }
}

std::vector<ClipFeatureRecord> select_clips(std::span<const ClipFeatureRecord> clips,
                                            std::size_t target) {
  if (clips.empty()) throw Error(ErrorKind::NoClips, "video has no clips");
  std::vector<const ClipFeatureRecord*> ordered;
  ordered.reserve(clips.size());
  for (const auto& c : clips) ordered.push_back(&c);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const auto* a, const auto* b) { return a->clip_index < b->clip_index; });
  std::vector<ClipFeatureRecord> out;
  for (const auto i : cyclic_clip_sample(ordered.size(), target)) out.push_back(*ordered[i]);
  return out;
}

double QualityModel::predict(const VideoSample& sample) const {
  const auto clips = select_clips(sample.clips, clip_target);
  double sum = 0.0;
  for (const auto& clip : clips) {
    auto features = fuse(sample.gf, clip, dims);
    standardizer.apply(features);
    sum += forward(head, features);
  }
  return sum / static_cast<double>(clips.size());
}

QualityModelFit fit_quality_model(std::span<const VideoSample> samples, const FeatureDims& dims,
                                  const TrainingConfig& config, std::size_t clip_target) {
  config.validate();
  if (samples.empty()) throw Error(ErrorKind::InvalidArgument, "no training videos");
  std::vector<TrainingRow> rows;
  for (const auto& sample : samples) {
    if (!std::isfinite(sample.mos)) {
      throw Error(ErrorKind::InvalidArgument, "non-finite MOS for " + sample.video_id);
    }
    for (const auto& clip : select_clips(sample.clips, clip_target)) {
      rows.push_back({fuse(sample.gf, clip, dims), sample.mos});
    }
  }
  QualityModelFit fit;
  fit.model.dims = dims;
  fit.model.clip_target = clip_target;
  fit.model.standardizer = FeatureStandardizer::fit(rows);
  for (auto& row : rows) fit.model.standardizer.apply(row.features);

  auto head = RegressionHead::initialized(dims.fused(), config.hidden, config.seed);
  fit.training = train(std::move(head), rows, config);
  fit.model.head = fit.training.head;
  return fit;
}

}  // namespace ddhqa
