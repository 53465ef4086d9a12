#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ddhqa/mesh.hpp"

namespace ddhqa {

enum class FieldKind { Dihedral, Curvature };

std::string_view to_string(FieldKind kind) noexcept;

/// Per-element geometry attribute values. Elements that could not produce a
/// finite value are dropped and counted in `excluded`.
struct ScalarField {
  FieldKind kind = FieldKind::Dihedral;
  std::vector<double> values;
  std::size_t excluded = 0;
};

enum class AreaMode { MixedVoronoi, Barycentric };

/// Per-edge dihedral angles in [0, pi]. Only edges with exactly two
/// non-degenerate incident faces contribute; the rest are counted as excluded.
/// Throws Error{EmptyField} when no edge qualifies.
ScalarField dihedral_angles(const TriangleMesh& mesh);

/// Interior angle of face `face` at its corner `corner` (0..2).
double corner_angle(const TriangleMesh& mesh, std::size_t face, int corner);

/// Area attributed to `vertex` from its non-degenerate incident faces.
///
/// MixedVoronoi: non-obtuse triangles contribute the cotangent-weighted
/// Voronoi region; an obtuse triangle contributes half its area when the
/// obtuse angle sits at `vertex`, a quarter otherwise.
/// Throws Error{ZeroArea} when no incident face has positive area.
double voronoi_area(const TriangleMesh& mesh, std::size_t vertex,
                    AreaMode mode = AreaMode::MixedVoronoi);

/// Angle defect (2*pi minus the incident corner angles) of every vertex.
std::vector<double> angle_defects(const TriangleMesh& mesh);

/// Discrete Gaussian curvature G = defect / area per vertex. Vertices with
/// zero area are excluded. Throws Error{EmptyField} if none qualifies.
ScalarField gaussian_curvature(const TriangleMesh& mesh, AreaMode mode = AreaMode::MixedVoronoi);

// ---------------------------------------------------------------------------
// Distribution fitting

inline constexpr std::size_t kHistogramBins = 256;

struct BasicStats {
  double mean = 0.0;
  double variance = 0.0;  // population (divide by N)
  double entropy = 0.0;   // nats, 256-bin histogram over [min, max]
};

struct GgdParams {
  double shape = 0.0;  // alpha_1
  double scale = 0.0;  // beta_1
};

struct AggdParams {
  double asymmetry = 0.0;       // eta
  double shape = 0.0;           // v
  double left_variance = 0.0;   // sigma_l^2
  double right_variance = 0.0;  // sigma_r^2
  bool one_sided = false;       // every value on one side of 0; empty side reported as 0
};

struct GammaParams {
  double shape = 0.0;  // alpha_2
  double rate = 0.0;   // beta_2
};

struct DistributionParams {
  BasicStats basic;
  GgdParams ggd;
  AggdParams aggd;
  GammaParams gamma;
};

/// Normalized histogram (probabilities summing to 1) with equal-width bins
/// over [min, max]. A constant input puts all mass in bin 0.
std::vector<double> histogram(std::span<const double> values, std::size_t bins = kHistogramBins);

/// Mean, population variance and histogram entropy. Throws
/// Error{TooFewSamples} for fewer than 2 values.
BasicStats fit_basic(std::span<const double> values);

/// Subtract the sample mean, divide by the (population) standard deviation.
/// Throws Error{DegenerateInput} on zero variance.
std::vector<double> zscore(std::span<const double> values);

/// x - min(x) + eps with eps = 1e-6 * (max - min + 1); strictly positive.
std::vector<double> positive_shift(std::span<const double> values);

/// Gamma-function ratio r(a) = G(2/a)^2 / (G(1/a) G(3/a)).
double ggd_moment_ratio(double shape);

/// Shape on the fixed grid [0.2, 10] (step 1e-3) whose moment ratio is
/// closest to `ratio`.
double solve_ggd_shape(double ratio);

/// Moment-matching GGD fit of a zero-centered (z-scored) sample.
/// Throws Error{DegenerateInput} when the variance is 0.
GgdParams fit_ggd(std::span<const double> values);

/// Moment-matching AGGD fit of a zero-centered sample. Values >= 0 count as
/// the right side. Throws Error{DegenerateInput} if all values are 0.
AggdParams fit_aggd(std::span<const double> values);

/// Method-of-moments Gamma fit of a strictly positive sample
/// (see positive_shift). Throws Error{DegenerateInput} on zero variance or a
/// non-positive value.
GammaParams fit_gamma(std::span<const double> values);

// ---------------------------------------------------------------------------
// 22-slot feature vector

inline constexpr std::size_t kParamsPerField = 11;
inline constexpr std::size_t kGeometryFeatureCount = 2 * kParamsPerField;

/// Slot offsets within one field's block of 11.
enum class ParamSlot : std::size_t {
  Mean = 0,
  Variance,
  Entropy,
  GgdShape,
  GgdScale,
  AggdAsymmetry,
  AggdShape,
  AggdLeftVariance,
  AggdRightVariance,
  GammaShape,
  GammaRate,
};

/// Index of (`kind`, `slot`) in the 22-vector: dihedral block first.
constexpr std::size_t feature_index(FieldKind kind, ParamSlot slot) {
  return (kind == FieldKind::Dihedral ? 0 : kParamsPerField) + static_cast<std::size_t>(slot);
}

/// Human-readable name of each of the 22 slots, e.g. "dihedral.ggd_shape".
const std::array<std::string, kGeometryFeatureCount>& feature_names();

using GeometryFeatureVector = std::array<double, kGeometryFeatureCount>;

struct FitWarning {
  FieldKind field;
  std::string fit;  // "basic", "ggd", "aggd", "gamma"
  std::string message;
};

struct GeometryFeatureOptions {
  AreaMode area_mode = AreaMode::MixedVoronoi;
};

struct GeometryFeatures {
  GeometryFeatureVector values{};
  ScalarField dihedral;
  ScalarField curvature;
  std::vector<FitWarning> warnings;
};

/// Dihedral and curvature fields of `mesh` and their 22 statistical
/// parameters. Basic stats use the raw field, GGD/AGGD the z-scored field,
/// Gamma the positively shifted raw field. A fit that fails on degenerate
/// data leaves its slots at 0 and records a warning; empty fields throw.
GeometryFeatures extract_geometry_features(const TriangleMesh& mesh,
                                           const GeometryFeatureOptions& options = {});

/// Writes `field,bin,lower,upper,probability` rows for one field's histogram.
/// `header` controls the leading column-name row.
void write_histogram_csv(std::ostream& out, const ScalarField& field,
                         std::size_t bins = kHistogramBins, bool header = true);

}  // namespace ddhqa
