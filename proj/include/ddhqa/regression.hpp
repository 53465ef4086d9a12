#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ddhqa/clip_sampling.hpp"
#include "ddhqa/geometry_features.hpp"

namespace ddhqa {

/// Declared widths of the per-clip spatial and temporal feature vectors.
struct FeatureDims {
  std::size_t spatial = 3840;
  std::size_t temporal = 2304;

  std::size_t fused() const { return kGeometryFeatureCount + spatial + temporal; }
  friend bool operator==(const FeatureDims&, const FeatureDims&) = default;
};

struct ClipFeatureRecord {
  std::string video_id;
  std::size_t clip_index = 0;
  std::vector<double> sf;
  std::vector<double> tf;
};

/// GF, then SF, then TF. Throws Error{DimensionMismatch} if the clip does not
/// match `dims`.
std::vector<double> fuse(const GeometryFeatureVector& gf, const ClipFeatureRecord& clip,
                         const FeatureDims& dims);

struct TrainingConfig {
  double learning_rate = 4e-6;
  std::size_t epochs = 30;
  std::size_t batch_size = 4;
  std::uint64_t seed = 0;
  std::size_t hidden = 128;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  /// Throws Error{InvalidArgument} unless lr > 0, batch >= 1, hidden >= 1 and
  /// the moment decays lie in [0, 1).
  void validate() const;
};

/// Two-layer perceptron: hidden = relu(W1 f + b1), Q = w2 . hidden + b2.
///
/// Parameters live in one flat buffer laid out as
/// [W1 (hidden x input, row-major) | b1 (hidden) | w2 (hidden) | b2].
class RegressionHead {
 public:
  RegressionHead() = default;
  /// Zero-initialized head.
  RegressionHead(std::size_t input_dim, std::size_t hidden_dim);

  /// Weights uniform in +-1/sqrt(fan_in) from a generator seeded by `seed`.
  static RegressionHead initialized(std::size_t input_dim, std::size_t hidden_dim,
                                    std::uint64_t seed);

  /// Wraps a flat parameter buffer in the layout described above.
  /// Throws Error{ShapeMismatch} if its length does not fit the dimensions.
  static RegressionHead from_parameters(std::size_t input_dim, std::size_t hidden_dim,
                                        std::vector<double> params);

  std::size_t input_dim() const { return input_dim_; }
  std::size_t hidden_dim() const { return hidden_dim_; }
  std::size_t parameter_count() const { return params_.size(); }

  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }

  std::span<double> w1() { return {params_.data(), hidden_dim_ * input_dim_}; }
  std::span<const double> w1() const { return {params_.data(), hidden_dim_ * input_dim_}; }
  std::span<double> b1() { return {params_.data() + hidden_dim_ * input_dim_, hidden_dim_}; }
  std::span<const double> b1() const {
    return {params_.data() + hidden_dim_ * input_dim_, hidden_dim_};
  }
  std::span<double> w2() { return {params_.data() + hidden_dim_ * (input_dim_ + 1), hidden_dim_}; }
  std::span<const double> w2() const {
    return {params_.data() + hidden_dim_ * (input_dim_ + 1), hidden_dim_};
  }
  double& b2() { return params_.back(); }
  double b2() const { return params_.back(); }

  friend bool operator==(const RegressionHead&, const RegressionHead&) = default;

 private:
  std::size_t input_dim_ = 0;
  std::size_t hidden_dim_ = 0;
  std::vector<double> params_;
};

/// Clip score Q_i. Throws Error{DimensionMismatch} on a wrong input length.
double forward(const RegressionHead& head, std::span<const double> features);

/// Mean of the clip scores of `clips` (in the given order).
/// Throws Error{NoClips} for an empty list.
double predict_quality(const RegressionHead& head, const GeometryFeatureVector& gf,
                       std::span<const ClipFeatureRecord> clips, const FeatureDims& dims);

struct TrainingRow {
  std::vector<double> features;
  double target = 0.0;
};

/// Mean squared error of `head` over `rows`; when `gradient` is non-empty it
/// receives d(MSE)/d(parameters) (overwritten, same layout as the head).
double mse_loss(const RegressionHead& head, std::span<const TrainingRow> rows,
                std::span<double> gradient = {});

/// Same as mse_loss over the rows selected by `indices`.
double mse_loss(const RegressionHead& head, std::span<const TrainingRow> rows,
                std::span<const std::size_t> indices, std::span<double> gradient);

struct AdamMoments {
  std::vector<double> first;
  std::vector<double> second;
};

struct AdamStepResult {
  std::vector<double> params;
  AdamMoments moments;
};

/// One bias-corrected adaptive-moment update; `step` counts from 1.
/// Throws Error{ShapeMismatch} when the buffers differ in length.
AdamStepResult adam_step(std::span<const double> params, std::span<const double> grads,
                         const AdamMoments& moments, const TrainingConfig& config,
                         std::size_t step);

/// In-place form of adam_step used by the trainer.
void adam_step_in_place(std::span<double> params, std::span<const double> grads,
                        AdamMoments& moments, const TrainingConfig& config, std::size_t step);

struct TrainResult {
  RegressionHead head;
  double initial_loss = 0.0;       // MSE of the untrained head over all rows
  std::vector<double> epoch_loss;  // mean per-sample loss seen during each epoch
};

/// Minibatch training on clip-level MSE. Rows are reshuffled every epoch by a
/// generator seeded from `config.seed`, so a fixed seed reproduces the
/// parameter trajectory bit for bit. Throws Error{NonFiniteLoss} when a batch
/// loss stops being finite.
TrainResult train(RegressionHead head, std::span<const TrainingRow> rows,
                  const TrainingConfig& config);

/// Per-dimension z-scoring with statistics from the training rows. Dimensions
/// with zero spread keep scale 1.
struct FeatureStandardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  static FeatureStandardizer fit(std::span<const TrainingRow> rows);
  void apply(std::span<double> features) const;
};

/// One video's inputs: geometry features, all available clips, MOS label and
/// motion group.
struct VideoSample {
  std::string video_id;
  std::string group_id;
  GeometryFeatureVector gf{};
  std::vector<ClipFeatureRecord> clips;
  double mos = 0.0;
};

/// Clips picked by cyclic_clip_sample after ordering by clip_index.
std::vector<ClipFeatureRecord> select_clips(std::span<const ClipFeatureRecord> clips,
                                            std::size_t target);

struct QualityModel {
  FeatureDims dims;
  std::size_t clip_target = kDefaultClipTarget;
  FeatureStandardizer standardizer;
  RegressionHead head;

  /// Standardized fused features of each sampled clip, pooled by mean.
  double predict(const VideoSample& sample) const;
};

struct QualityModelFit {
  QualityModel model;
  TrainResult training;
};

/// Fuses and standardizes the sampled clips of `samples` (every clip
/// regresses to its video's MOS), then trains a freshly initialized head.
QualityModelFit fit_quality_model(std::span<const VideoSample> samples, const FeatureDims& dims,
                                  const TrainingConfig& config,
                                  std::size_t clip_target = kDefaultClipTarget);

}  // namespace ddhqa
