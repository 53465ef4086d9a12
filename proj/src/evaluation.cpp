#include "ddhqa/evaluation.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "ddhqa/error.hpp"

namespace ddhqa {

std::vector<std::size_t> cyclic_clip_sample(std::size_t n_clips_available, std::size_t target) {
  if (n_clips_available == 0) throw Error(ErrorKind::InvalidArgument, "video has no clips");
  if (target == 0) throw Error(ErrorKind::InvalidArgument, "clip target must be positive");
  std::vector<std::size_t> out(target);
  for (std::size_t i = 0; i < target; ++i) out[i] = i % n_clips_available;
  return out;
}

namespace {

void check_pair(std::span<const double> a, std::span<const double> b, std::size_t min_n,
                const char* what) {
  if (a.size() != b.size()) {
    throw Error(ErrorKind::InvalidArgument, std::string(what) + ": length mismatch " +
                                                std::to_string(a.size()) + " vs " +
                                                std::to_string(b.size()));
  }
  if (a.size() < min_n) {
    throw Error(ErrorKind::InvalidArgument,
                std::string(what) + " needs at least " + std::to_string(min_n) + " points");
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!std::isfinite(a[i]) || !std::isfinite(b[i])) {
      throw Error(ErrorKind::InvalidArgument, std::string(what) + ": non-finite input");
    }
  }
}

double pearson(std::span<const double> x, std::span<const double> y, const char* what) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) {
    throw Error(ErrorKind::DegenerateInput, std::string(what) + " of a constant vector");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

// Number of tied pairs, summed over runs of equal values in a sorted range.
template <typename Eq>
std::uint64_t tied_pairs(const std::vector<std::size_t>& order, Eq equal) {
  std::uint64_t ties = 0;
  std::uint64_t run = 1;
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (equal(order[i - 1], order[i])) {
      ++run;
    } else {
      ties += run * (run - 1) / 2;
      run = 1;
    }
  }
  return ties + run * (run - 1) / 2;
}

// Merge sort of `idx` by y, counting swaps (discordant pairs).
std::uint64_t merge_count(std::vector<std::size_t>& idx, std::vector<std::size_t>& buf,
                          std::size_t lo, std::size_t hi, std::span<const double> y) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::uint64_t swaps = merge_count(idx, buf, lo, mid, y) + merge_count(idx, buf, mid, hi, y);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (y[idx[j]] < y[idx[i]]) {
      swaps += mid - i;
      buf[k++] = idx[j++];
    } else {
      buf[k++] = idx[i++];
    }
  }
  while (i < mid) buf[k++] = idx[i++];
  while (j < hi) buf[k++] = idx[j++];
  std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo),
            buf.begin() + static_cast<std::ptrdiff_t>(hi),
            idx.begin() + static_cast<std::ptrdiff_t>(lo));
  return swaps;
}

}  // namespace

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i + 1;
    while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
    // Positions i..j-1 share the mean of ranks i+1..j.
    const double rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    i = j;
  }
  return ranks;
}

double srcc(std::span<const double> pred, std::span<const double> mos) {
  check_pair(pred, mos, 3, "srcc");
  const auto rp = average_ranks(pred);
  const auto rm = average_ranks(mos);
  return pearson(rp, rm, "srcc");
}

// Knight's O(n log n) tau-b.
double krcc(std::span<const double> pred, std::span<const double> mos) {
  check_pair(pred, mos, 3, "krcc");
  const std::size_t n = pred.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return pred[a] < pred[b] || (pred[a] == pred[b] && mos[a] < mos[b]);
  });

  const std::uint64_t n0 = static_cast<std::uint64_t>(n) * (n - 1) / 2;
  const std::uint64_t ties_x = tied_pairs(idx, [&](auto a, auto b) { return pred[a] == pred[b]; });
  const std::uint64_t ties_xy = tied_pairs(
      idx, [&](auto a, auto b) { return pred[a] == pred[b] && mos[a] == mos[b]; });

  std::vector<std::size_t> buf(n);
  const std::uint64_t swaps = merge_count(idx, buf, 0, n, mos);
  const std::uint64_t ties_y = tied_pairs(idx, [&](auto a, auto b) { return mos[a] == mos[b]; });

  if (ties_x == n0 || ties_y == n0) {
    throw Error(ErrorKind::DegenerateInput, "krcc of a constant vector");
  }
  // concordant - discordant = n0 - tx - ty + txy - 2 * swaps
  const double numerator = static_cast<double>(n0) - static_cast<double>(ties_x) -
                           static_cast<double>(ties_y) + static_cast<double>(ties_xy) -
                           2.0 * static_cast<double>(swaps);
  const double denominator = std::sqrt(static_cast<double>(n0 - ties_x)) *
                             std::sqrt(static_cast<double>(n0 - ties_y));
  return std::clamp(numerator / denominator, -1.0, 1.0);
}

namespace {

std::vector<double> maybe_remap(std::span<const double> pred, std::span<const double> mos,
                                const MetricOptions& options) {
  if (!options.logistic_remap) return {pred.begin(), pred.end()};
  const auto fit = fit_logistic(pred, mos);
  std::vector<double> out(pred.size());
  std::transform(pred.begin(), pred.end(), out.begin(), fit);
  return out;
}

}  // namespace

double plcc(std::span<const double> pred, std::span<const double> mos,
            const MetricOptions& options) {
  check_pair(pred, mos, 3, "plcc");
  const auto mapped = maybe_remap(pred, mos, options);
  return pearson(mapped, mos, "plcc");
}

double rmse(std::span<const double> pred, std::span<const double> mos,
            const MetricOptions& options) {
  check_pair(pred, mos, 2, "rmse");
  const auto mapped = maybe_remap(pred, mos, options);
  double ss = 0.0;
  for (std::size_t i = 0; i < mapped.size(); ++i) {
    const double d = mapped[i] - mos[i];
    ss += d * d;
  }
  return std::sqrt(ss / static_cast<double>(mapped.size()));
}

double LogisticParams::operator()(double x) const {
  const double s = std::abs(slope);
  return lower + (upper - lower) / (1.0 + std::exp(-(x - center) / s));
}

LogisticParams fit_logistic(std::span<const double> pred, std::span<const double> mos) {
  check_pair(pred, mos, 4, "fit_logistic");
  const std::size_t n = pred.size();
  const double mean_pred = std::accumulate(pred.begin(), pred.end(), 0.0) / static_cast<double>(n);
  double var_pred = 0.0;
  for (double p : pred) var_pred += (p - mean_pred) * (p - mean_pred);
  const double sd_pred = std::sqrt(var_pred / static_cast<double>(n));
  if (!(sd_pred > 0.0)) throw Error(ErrorKind::DegenerateInput, "logistic fit of constant scores");

  Eigen::Vector4d beta(*std::max_element(mos.begin(), mos.end()),
                       *std::min_element(mos.begin(), mos.end()), mean_pred, sd_pred);
  auto params = [](const Eigen::Vector4d& b) { return LogisticParams{b[0], b[1], b[2], b[3]}; };
  auto sse = [&](const Eigen::Vector4d& b) {
    const auto f = params(b);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += (f(pred[i]) - mos[i]) * (f(pred[i]) - mos[i]);
    return s;
  };

  double lambda = 1e-3;
  double current = sse(beta);
  Eigen::MatrixXd jac(n, 4);
  Eigen::VectorXd residual(n);
  for (int iter = 0; iter < 500; ++iter) {
    const double s = std::abs(beta[3]);
    const double sign = beta[3] < 0.0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double t = (pred[i] - beta[2]) / s;
      const double g = 1.0 / (1.0 + std::exp(-t));
      const double dg = g * (1.0 - g);
      const double span = beta[0] - beta[1];
      const auto r = static_cast<Eigen::Index>(i);
      jac(r, 0) = g;
      jac(r, 1) = 1.0 - g;
      jac(r, 2) = -span * dg / s;
      jac(r, 3) = -span * dg * t / s * sign;
      residual[r] = mos[i] - (beta[1] + span * g);
    }
    const Eigen::Matrix4d jtj = jac.transpose() * jac;
    const Eigen::Vector4d jtr = jac.transpose() * residual;

    bool improved = false;
    while (lambda < 1e12) {
      Eigen::Matrix4d damped = jtj;
      damped.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-12);
      const Eigen::Vector4d delta = damped.ldlt().solve(jtr);
      const Eigen::Vector4d candidate = beta + delta;
      const double next = candidate.allFinite() && candidate[3] != 0.0 ? sse(candidate) : current;
      if (next < current) {
        const double gain = current - next;
        beta = candidate;
        current = next;
        lambda = std::max(lambda / 10.0, 1e-12);
        improved = gain > 1e-15 * std::max(1.0, current);
        break;
      }
      lambda *= 10.0;
    }
    if (!improved) break;
  }
  return params(beta);
}

// ---------------------------------------------------------------------------

std::vector<FoldSpec> kfold_split(std::span<const std::string> groups, std::uint64_t seed,
                                  bool allow_any_even) {
  const std::set<std::string> distinct(groups.begin(), groups.end());
  if (distinct.size() != groups.size()) {
    throw Error(ErrorKind::InvalidArgument, "group ids must be distinct");
  }
  if (allow_any_even) {
    if (groups.size() < 4 || groups.size() % 2 != 0) {
      throw Error(ErrorKind::InvalidArgument,
                  "fold split needs an even number (>= 4) of groups, got " +
                      std::to_string(groups.size()));
    }
  } else if (groups.size() != 10) {
    throw Error(ErrorKind::InvalidArgument,
                "fold split needs exactly 10 motion groups, got " + std::to_string(groups.size()));
  }

  std::vector<std::string> shuffled(groups.begin(), groups.end());
  std::mt19937_64 rng(seed);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);

  std::vector<FoldSpec> folds;
  for (std::size_t f = 0; f < shuffled.size() / 2; ++f) {
    FoldSpec spec;
    spec.fold_id = f;
    spec.test_groups = {shuffled[2 * f], shuffled[2 * f + 1]};
    for (std::size_t k = 0; k < shuffled.size(); ++k) {
      if (k / 2 != f) spec.train_groups.push_back(shuffled[k]);
    }
    folds.push_back(std::move(spec));
  }
  return folds;
}

EvaluationReport run_cross_validation(std::span<const VideoSample> dataset,
                                      const CrossValidationConfig& config) {
  if (dataset.empty()) throw Error(ErrorKind::InvalidArgument, "empty dataset");
  std::set<std::string> group_set;
  for (const auto& s : dataset) {
    if (s.group_id.empty()) {
      throw Error(ErrorKind::InvalidArgument, "video " + s.video_id + " has no group id");
    }
    group_set.insert(s.group_id);
  }
  const std::vector<std::string> groups(group_set.begin(), group_set.end());
  const auto folds = kfold_split(groups, config.seed, config.generalized_folds);

  FoldTrainer trainer = config.trainer;
  if (!trainer) {
    trainer = [&config](std::span<const VideoSample> train_set, const TrainingConfig& tc) {
      auto fit = fit_quality_model(train_set, config.dims, tc, config.clip_target);
      return Predictor([model = std::move(fit.model)](const VideoSample& s) {
        return model.predict(s);
      });
    };
  }

  const MetricOptions metric_options{config.logistic_remap};
  EvaluationReport report;
  report.logistic_remap = config.logistic_remap;
  for (const auto& fold : folds) {
    const std::set<std::string> test_groups(fold.test_groups.begin(), fold.test_groups.end());
    std::vector<VideoSample> train_set;
    std::vector<const VideoSample*> test_set;
    for (const auto& s : dataset) {
      if (test_groups.count(s.group_id)) {
        test_set.push_back(&s);
      } else {
        train_set.push_back(s);
      }
    }
    if (train_set.empty() || test_set.empty()) {
      throw Error(ErrorKind::InvalidArgument,
                  "fold " + std::to_string(fold.fold_id) + " has an empty train or test set");
    }
    TrainingConfig fold_config = config.training;
    fold_config.seed = config.training.seed + fold.fold_id;
    const Predictor predictor = trainer(train_set, fold_config);

    std::vector<double> pred, mos;
    for (const auto* s : test_set) {
      pred.push_back(predictor(*s));
      mos.push_back(s->mos);
    }
    FoldResult result;
    result.fold = fold;
    result.n = test_set.size();
    result.srcc = srcc(pred, mos);
    result.plcc = plcc(pred, mos, metric_options);
    result.krcc = krcc(pred, mos);
    result.rmse = rmse(pred, mos, metric_options);
    report.folds.push_back(std::move(result));
  }

  const double k = static_cast<double>(report.folds.size());
  for (const auto& f : report.folds) {
    report.n += f.n;
    report.srcc += f.srcc / k;
    report.plcc += f.plcc / k;
    report.krcc += f.krcc / k;
    report.rmse += f.rmse / k;
  }
  return report;
}

}  // namespace ddhqa
