#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ddhqa/clip_sampling.hpp"
#include "ddhqa/regression.hpp"

namespace ddhqa {

// ---------------------------------------------------------------------------
// Criteria. All of them throw Error{InvalidArgument} on unequal lengths or too
// few points, and Error{DegenerateInput} where the statistic is undefined
// (zero variance), never NaN.

/// 1-based ranks with ties sharing the average rank.
std::vector<double> average_ranks(std::span<const double> values);

double srcc(std::span<const double> pred, std::span<const double> mos);
/// Kendall tau-b.
double krcc(std::span<const double> pred, std::span<const double> mos);

struct MetricOptions {
  /// Map predictions through a fitted 4-parameter logistic before PLCC/RMSE.
  bool logistic_remap = false;
};

double plcc(std::span<const double> pred, std::span<const double> mos,
            const MetricOptions& options = {});
double rmse(std::span<const double> pred, std::span<const double> mos,
            const MetricOptions& options = {});

/// f(x) = lower + (upper - lower) / (1 + exp(-(x - center) / |slope|))
struct LogisticParams {
  double upper = 1.0;
  double lower = 0.0;
  double center = 0.0;
  double slope = 1.0;

  double operator()(double x) const;
};

/// Least-squares fit (Levenberg-Marquardt) of `mos` against `pred`.
LogisticParams fit_logistic(std::span<const double> pred, std::span<const double> mos);

// ---------------------------------------------------------------------------
// Protocol

struct FoldSpec {
  std::size_t fold_id = 0;
  std::vector<std::string> train_groups;
  std::vector<std::string> test_groups;
};

/// Seeded shuffle of `groups`, consecutive pairs become the test sets.
/// Requires exactly 10 distinct groups unless `allow_any_even` is set, in
/// which case any even count >= 4 gives count/2 folds.
std::vector<FoldSpec> kfold_split(std::span<const std::string> groups, std::uint64_t seed,
                                  bool allow_any_even = false);

struct FoldResult {
  FoldSpec fold;
  std::size_t n = 0;
  double srcc = 0.0;
  double plcc = 0.0;
  double krcc = 0.0;
  double rmse = 0.0;
};

struct EvaluationReport {
  std::vector<FoldResult> folds;
  std::size_t n = 0;
  double srcc = 0.0;
  double plcc = 0.0;
  double krcc = 0.0;
  double rmse = 0.0;
  bool logistic_remap = false;
  std::string score_scale = "raw MOS";
};

/// Scores for held-out videos produced by a model trained on one fold.
using Predictor = std::function<double(const VideoSample&)>;
using FoldTrainer =
    std::function<Predictor(std::span<const VideoSample> train, const TrainingConfig& config)>;

struct CrossValidationConfig {
  TrainingConfig training;
  FeatureDims dims;
  std::size_t clip_target = kDefaultClipTarget;
  std::uint64_t seed = 0;
  bool logistic_remap = false;
  bool generalized_folds = false;
  /// Replaces the default head training; used to inject fixed predictors.
  FoldTrainer trainer;
};

/// Splits videos by motion group, trains a fresh model per fold (training
/// seed offset by the fold id), scores the held-out videos and averages the
/// per-fold criteria.
EvaluationReport run_cross_validation(std::span<const VideoSample> dataset,
                                      const CrossValidationConfig& config);

}  // namespace ddhqa
