#include "ddhqa/geometry_features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include "ddhqa/error.hpp"

namespace ddhqa {

std::string_view to_string(FieldKind kind) noexcept {
  return kind == FieldKind::Dihedral ? "dihedral" : "curvature";
}

ScalarField dihedral_angles(const TriangleMesh& mesh) {
  ScalarField field{FieldKind::Dihedral, {}, 0};
  field.values.reserve(mesh.edge_count());
  for (std::size_t e = 0; e < mesh.edge_count(); ++e) {
    const auto faces = mesh.edge_faces(e);
    if (faces.size() != 2) {
      ++field.excluded;
      continue;
    }
    const auto& g1 = mesh.face_geometry(faces[0]);
    const auto& g2 = mesh.face_geometry(faces[1]);
    if (g1.degenerate || g2.degenerate) {
      ++field.excluded;
      continue;
    }
    // Normals are unit length already.
    const double c = std::clamp(dot(g1.normal, g2.normal), -1.0, 1.0);
    const double theta = std::acos(c);
    if (!std::isfinite(theta)) {
      ++field.excluded;
      continue;
    }
    field.values.push_back(theta);
  }
  if (field.values.empty()) {
    throw Error(ErrorKind::EmptyField, "no edge has exactly two non-degenerate incident faces");
  }
  return field;
}

double corner_angle(const TriangleMesh& mesh, std::size_t face, int corner) {
  const auto& f = mesh.faces()[face];
  const auto verts = mesh.vertices();
  const Vec3& p = verts[f[corner]];
  const Vec3 u = verts[f[(corner + 1) % 3]] - p;
  const Vec3 v = verts[f[(corner + 2) % 3]] - p;
  return std::atan2(norm(cross(u, v)), dot(u, v));
}

namespace {

int corner_of(const Face& f, std::size_t vertex) {
  for (int k = 0; k < 3; ++k) {
    if (f[k] == vertex) return k;
  }
  return -1;
}

double mixed_voronoi_contribution(const TriangleMesh& mesh, std::size_t face, int corner) {
  const auto& f = mesh.faces()[face];
  const auto verts = mesh.vertices();
  const double area = mesh.face_geometry(face).area;
  const double half_pi = 0.5 * std::numbers::pi;

  const double angle_p = corner_angle(mesh, face, corner);
  const double angle_q = corner_angle(mesh, face, (corner + 1) % 3);
  const double angle_r = corner_angle(mesh, face, (corner + 2) % 3);
  if (angle_p > half_pi) return 0.5 * area;
  if (angle_q > half_pi || angle_r > half_pi) return 0.25 * area;

  const Vec3& p = verts[f[corner]];
  const Vec3& q = verts[f[(corner + 1) % 3]];
  const Vec3& r = verts[f[(corner + 2) % 3]];
  const auto cot = [](const Vec3& a, const Vec3& b) { return dot(a, b) / norm(cross(a, b)); };
  const Vec3 pq = q - p;
  const Vec3 pr = r - p;
  const double cot_q = cot(p - q, r - q);
  const double cot_r = cot(p - r, q - r);
  return (dot(pr, pr) * cot_q + dot(pq, pq) * cot_r) / 8.0;
}

}  // namespace

double voronoi_area(const TriangleMesh& mesh, std::size_t vertex, AreaMode mode) {
  if (vertex >= mesh.vertex_count()) {
    throw Error(ErrorKind::InvalidArgument, "vertex index out of range");
  }
  double total = 0.0;
  for (const auto face : mesh.vertex_faces(vertex)) {
    const auto& g = mesh.face_geometry(face);
    if (g.degenerate) continue;
    if (mode == AreaMode::Barycentric) {
      total += g.area / 3.0;
    } else {
      total += mixed_voronoi_contribution(mesh, face, corner_of(mesh.faces()[face], vertex));
    }
  }
  if (!(total > 0.0)) {
    throw Error(ErrorKind::ZeroArea,
                "vertex " + std::to_string(vertex) + " has no non-degenerate incident face");
  }
  return total;
}

std::vector<double> angle_defects(const TriangleMesh& mesh) {
  std::vector<double> defect(mesh.vertex_count(), 2.0 * std::numbers::pi);
  for (std::size_t f = 0; f < mesh.face_count(); ++f) {
    if (mesh.face_geometry(f).degenerate) continue;
    const auto& face = mesh.faces()[f];
    for (int k = 0; k < 3; ++k) defect[face[k]] -= corner_angle(mesh, f, k);
  }
  return defect;
}

ScalarField gaussian_curvature(const TriangleMesh& mesh, AreaMode mode) {
  ScalarField field{FieldKind::Curvature, {}, 0};
  const auto defect = angle_defects(mesh);
  field.values.reserve(mesh.vertex_count());
  for (std::size_t v = 0; v < mesh.vertex_count(); ++v) {
    double area = 0.0;
    try {
      area = voronoi_area(mesh, v, mode);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::ZeroArea) throw;
      ++field.excluded;
      continue;
    }
    const double g = defect[v] / area;
    if (!std::isfinite(g)) {
      ++field.excluded;
      continue;
    }
    field.values.push_back(g);
  }
  if (field.values.empty()) {
    throw Error(ErrorKind::EmptyField, "no vertex has a positive area");
  }
  return field;
}

// ---------------------------------------------------------------------------

namespace {

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
};

Moments moments(std::span<const double> values) {
  double sum = 0.0;
  for (double x : values) sum += x;
  const double mean = sum / static_cast<double>(values.size());
  double ss = 0.0;
  for (double x : values) ss += (x - mean) * (x - mean);
  return {mean, ss / static_cast<double>(values.size())};
}

void require_samples(std::span<const double> values, std::size_t n, const char* what) {
  if (values.size() < n) {
    throw Error(ErrorKind::TooFewSamples, std::string(what) + " needs at least " +
                                              std::to_string(n) + " values, got " +
                                              std::to_string(values.size()));
  }
}

constexpr double kShapeMin = 0.2;
constexpr double kShapeStep = 1e-3;
constexpr std::size_t kShapeSteps = 9800;  // 0.2 .. 10.0 inclusive

const std::vector<double>& moment_ratio_table() {
  static const std::vector<double> table = [] {
    std::vector<double> t(kShapeSteps + 1);
    for (std::size_t k = 0; k <= kShapeSteps; ++k) {
      t[k] = ggd_moment_ratio(kShapeMin + static_cast<double>(k) * kShapeStep);
    }
    return t;
  }();
  return table;
}

double gamma_ratio_sqrt(double shape) {
  return std::sqrt(std::tgamma(1.0 / shape) / std::tgamma(3.0 / shape));
}

}  // namespace

std::vector<double> histogram(std::span<const double> values, std::size_t bins) {
  if (values.empty()) throw Error(ErrorKind::TooFewSamples, "histogram of an empty sample");
  if (bins == 0) throw Error(ErrorKind::InvalidArgument, "histogram needs at least one bin");
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it;
  const double width = *hi_it - lo;
  std::vector<double> counts(bins, 0.0);
  for (double x : values) {
    std::size_t bin = 0;
    if (width > 0.0) {
      const double pos = (x - lo) / width * static_cast<double>(bins);
      bin = std::min(static_cast<std::size_t>(pos), bins - 1);
    }
    counts[bin] += 1.0;
  }
  const double n = static_cast<double>(values.size());
  for (double& c : counts) c /= n;
  return counts;
}

BasicStats fit_basic(std::span<const double> values) {
  require_samples(values, 2, "fit_basic");
  const auto m = moments(values);
  double entropy = 0.0;
  for (double p : histogram(values)) {
    if (p > 0.0) entropy -= p * std::log(p);
  }
  return {m.mean, m.variance, entropy};
}

std::vector<double> zscore(std::span<const double> values) {
  require_samples(values, 2, "zscore");
  const auto m = moments(values);
  if (!(m.variance > 0.0)) throw Error(ErrorKind::DegenerateInput, "zscore of a constant sample");
  const double sd = std::sqrt(m.variance);
  std::vector<double> out(values.size());
  std::transform(values.begin(), values.end(), out.begin(),
                 [&](double x) { return (x - m.mean) / sd; });
  return out;
}

std::vector<double> positive_shift(std::span<const double> values) {
  require_samples(values, 1, "positive_shift");
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it;
  const double eps = 1e-6 * (*hi_it - lo + 1.0);
  std::vector<double> out(values.size());
  std::transform(values.begin(), values.end(), out.begin(),
                 [&](double x) { return x - lo + eps; });
  return out;
}

double ggd_moment_ratio(double shape) {
  const double g2 = std::tgamma(2.0 / shape);
  return g2 * g2 / (std::tgamma(1.0 / shape) * std::tgamma(3.0 / shape));
}

double solve_ggd_shape(double ratio) {
  const auto& table = moment_ratio_table();
  std::size_t best = 0;
  double best_diff = std::abs(table[0] - ratio);
  for (std::size_t k = 1; k < table.size(); ++k) {
    const double diff = std::abs(table[k] - ratio);
    if (diff < best_diff) {
      best_diff = diff;
      best = k;
    }
  }
  return kShapeMin + static_cast<double>(best) * kShapeStep;
}

GgdParams fit_ggd(std::span<const double> values) {
  require_samples(values, 2, "fit_ggd");
  if (!(moments(values).variance > 0.0)) {
    throw Error(ErrorKind::DegenerateInput, "fit_ggd on a constant sample");
  }
  double abs_sum = 0.0;
  double sq_sum = 0.0;
  for (double x : values) {
    abs_sum += std::abs(x);
    sq_sum += x * x;
  }
  const double n = static_cast<double>(values.size());
  const double mean_abs = abs_sum / n;
  const double mean_sq = sq_sum / n;
  const double shape = solve_ggd_shape(mean_abs * mean_abs / mean_sq);
  return {shape, std::sqrt(mean_sq) * gamma_ratio_sqrt(shape)};
}

AggdParams fit_aggd(std::span<const double> values) {
  require_samples(values, 2, "fit_aggd");
  std::size_t left_n = 0, right_n = 0;
  double left_sq = 0.0, right_sq = 0.0, abs_sum = 0.0;
  for (double x : values) {
    if (x < 0.0) {
      ++left_n;
      left_sq += x * x;
    } else {
      ++right_n;
      right_sq += x * x;
    }
    abs_sum += std::abs(x);
  }
  const double n = static_cast<double>(values.size());
  const double mean_sq = (left_sq + right_sq) / n;
  if (!(mean_sq > 0.0)) throw Error(ErrorKind::DegenerateInput, "fit_aggd on an all-zero sample");

  AggdParams p;
  p.one_sided = left_n == 0 || right_n == 0;
  p.left_variance = left_n > 0 ? left_sq / static_cast<double>(left_n) : 0.0;
  p.right_variance = right_n > 0 ? right_sq / static_cast<double>(right_n) : 0.0;
  const double sigma_l = std::sqrt(p.left_variance);
  const double sigma_r = std::sqrt(p.right_variance);

  const double mean_abs = abs_sum / n;
  const double r_hat = mean_abs * mean_abs / mean_sq;
  double r_norm = r_hat;
  // With one side empty, gamma_hat is 0 or infinite and the correction tends to 1.
  if (sigma_l > 0.0 && sigma_r > 0.0) {
    const double g = sigma_l / sigma_r;
    r_norm = r_hat * (g * g * g + 1.0) * (g + 1.0) / ((g * g + 1.0) * (g * g + 1.0));
  }
  p.shape = solve_ggd_shape(r_norm);

  const double k = gamma_ratio_sqrt(p.shape);
  const double beta_l = sigma_l * k;
  const double beta_r = sigma_r * k;
  p.asymmetry = (beta_r - beta_l) * std::tgamma(2.0 / p.shape) / std::tgamma(1.0 / p.shape);
  return p;
}

GammaParams fit_gamma(std::span<const double> values) {
  require_samples(values, 2, "fit_gamma");
  for (double x : values) {
    if (!(x > 0.0) || !std::isfinite(x)) {
      throw Error(ErrorKind::DegenerateInput, "fit_gamma needs strictly positive finite values");
    }
  }
  const auto m = moments(values);
  if (!(m.variance > 0.0)) throw Error(ErrorKind::DegenerateInput, "fit_gamma on a constant sample");
  return {m.mean * m.mean / m.variance, m.mean / m.variance};
}

// ---------------------------------------------------------------------------

const std::array<std::string, kGeometryFeatureCount>& feature_names() {
  static const std::array<std::string, kGeometryFeatureCount> names = [] {
    static constexpr const char* kParams[kParamsPerField] = {
        "mean",     "variance",   "entropy",        "ggd_shape",       "ggd_scale",
        "aggd_eta", "aggd_shape", "aggd_left_var",  "aggd_right_var",  "gamma_shape",
        "gamma_rate"};
    std::array<std::string, kGeometryFeatureCount> out;
    for (std::size_t i = 0; i < kParamsPerField; ++i) {
      out[i] = std::string("dihedral.") + kParams[i];
      out[kParamsPerField + i] = std::string("curvature.") + kParams[i];
    }
    return out;
  }();
  return names;
}

namespace {

void fit_field(const ScalarField& field, GeometryFeatureVector& out,
               std::vector<FitWarning>& warnings) {
  auto set = [&](ParamSlot slot, double v) { out[feature_index(field.kind, slot)] = v; };
  auto warn = [&](const char* fit, const Error& e) {
    warnings.push_back({field.kind, fit, e.what()});
  };
  const std::span<const double> raw(field.values);

  try {
    const auto basic = fit_basic(raw);
    set(ParamSlot::Mean, basic.mean);
    set(ParamSlot::Variance, basic.variance);
    set(ParamSlot::Entropy, basic.entropy);
  } catch (const Error& e) {
    warn("basic", e);
  }

  std::vector<double> normalized;
  try {
    normalized = zscore(raw);
  } catch (const Error& e) {
    warn("ggd", e);
    warn("aggd", e);
  }
  if (!normalized.empty()) {
    try {
      const auto ggd = fit_ggd(normalized);
      set(ParamSlot::GgdShape, ggd.shape);
      set(ParamSlot::GgdScale, ggd.scale);
    } catch (const Error& e) {
      warn("ggd", e);
    }
    try {
      const auto aggd = fit_aggd(normalized);
      set(ParamSlot::AggdAsymmetry, aggd.asymmetry);
      set(ParamSlot::AggdShape, aggd.shape);
      set(ParamSlot::AggdLeftVariance, aggd.left_variance);
      set(ParamSlot::AggdRightVariance, aggd.right_variance);
      if (aggd.one_sided) {
        warnings.push_back({field.kind, "aggd", "one-sided sample; empty side set to 0"});
      }
    } catch (const Error& e) {
      warn("aggd", e);
    }
  }

  try {
    const auto gamma = fit_gamma(positive_shift(raw));
    set(ParamSlot::GammaShape, gamma.shape);
    set(ParamSlot::GammaRate, gamma.rate);
  } catch (const Error& e) {
    warn("gamma", e);
  }
}

}  // namespace

GeometryFeatures extract_geometry_features(const TriangleMesh& mesh,
                                           const GeometryFeatureOptions& options) {
  GeometryFeatures out;
  out.dihedral = dihedral_angles(mesh);
  out.curvature = gaussian_curvature(mesh, options.area_mode);
  fit_field(out.dihedral, out.values, out.warnings);
  fit_field(out.curvature, out.values, out.warnings);
  return out;
}

void write_histogram_csv(std::ostream& out, const ScalarField& field, std::size_t bins,
                         bool header) {
  const auto probs = histogram(field.values, bins);
  const auto [lo_it, hi_it] = std::minmax_element(field.values.begin(), field.values.end());
  const double lo = *lo_it;
  const double width = (*hi_it - lo) / static_cast<double>(bins);
  if (header) out << "field,bin,lower,upper,probability\n";
  const auto old_precision = out.precision(17);
  for (std::size_t b = 0; b < bins; ++b) {
    out << to_string(field.kind) << ',' << b << ',' << lo + width * static_cast<double>(b) << ','
        << lo + width * static_cast<double>(b + 1) << ',' << probs[b] << '\n';
  }
  out.precision(old_precision);
}

}  // namespace ddhqa
