#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ddhqa/evaluation.hpp"
#include "ddhqa/geometry_features.hpp"
#include "ddhqa/regression.hpp"

namespace ddhqa {

inline constexpr const char* kToolVersion = DDHQA_VERSION;

// Clip feature file: a header line {"d_s": int, "d_t": int} followed by one
// {"video_id", "clip_index", "sf": [...], "tf": [...]} object per line.
struct ClipFeatureFile {
  FeatureDims dims;
  std::vector<ClipFeatureRecord> records;
};

/// Throws Error{Parse} (with line number) on malformed lines or non-finite
/// values, Error{DimensionMismatch} when a record disagrees with the header.
ClipFeatureFile read_clip_features(std::istream& in);
ClipFeatureFile read_clip_features(const std::filesystem::path& path);
void write_clip_features(std::ostream& out, const ClipFeatureFile& file);

// MOS file: CSV `video_id,mos,group_id`, optional header row.
struct MosEntry {
  std::string video_id;
  double mos = 0.0;
  std::string group_id;
};

std::vector<MosEntry> read_mos_csv(std::istream& in);
std::vector<MosEntry> read_mos_csv(const std::filesystem::path& path);

// Geometry feature records: {"model_id": str, "gf": [22 numbers]} per line. An
// optional leading metadata object (no "model_id") is skipped by the reader.
struct GfRecord {
  std::string model_id;
  GeometryFeatureVector gf{};
};

std::string gf_record_line(const GfRecord& record);
std::vector<GfRecord> read_gf_records(std::istream& in);
std::vector<GfRecord> read_gf_records(const std::filesystem::path& path);

/// CSV `model_id,video_id` (optional header) mapping video ids to model ids.
std::map<std::string, std::string> read_manifest(const std::filesystem::path& path);

/// Joins clip features, geometry features and (optionally) MOS by id. Videos
/// are returned in ascending video_id order, clips ordered by clip_index.
/// Throws Error{JoinMismatch} listing every orphaned id.
std::vector<VideoSample> join_dataset(const ClipFeatureFile& clips,
                                      const std::vector<GfRecord>& gf,
                                      const std::vector<MosEntry>* mos,
                                      const std::map<std::string, std::string>* manifest);

// Trained model artifact (JSON).
inline constexpr int kModelFormatVersion = 1;

struct ModelArtifact {
  QualityModel model;
  TrainingConfig config;
  std::vector<double> loss_curve;
  double initial_loss = 0.0;
};

void save_model(std::ostream& out, const ModelArtifact& artifact);
/// Throws Error{Version} on an unknown format or version, Error{Parse} on a
/// malformed document.
ModelArtifact load_model(std::istream& in);

}  // namespace ddhqa
