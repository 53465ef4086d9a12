#include "ddhqa/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include "json.hpp"
#include <set>
#include <sstream>

#include "ddhqa/error.hpp"

namespace ddhqa {

using nlohmann::json;

namespace {

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return in;
}

template <typename F>
auto with_path(const std::filesystem::path& path, F&& read) {
  auto in = open_input(path);
  try {
    return read(in);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

[[noreturn]] void parse_fail(std::size_t line, const std::string& what) {
  throw Error(ErrorKind::Parse, "line " + std::to_string(line) + ": " + what);
}

bool blank(const std::string& line) {
  return std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); });
}

json parse_json_line(const std::string& line, std::size_t line_no) {
  try {
    return json::parse(line);
  } catch (const json::exception& e) {
    parse_fail(line_no, std::string("invalid JSON: ") + e.what());
  }
}

std::vector<double> finite_array(const json& j, const char* key, std::size_t line_no) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_array()) parse_fail(line_no, std::string("missing array '") + key + "'");
  std::vector<double> out;
  out.reserve(it->size());
  for (const auto& v : *it) {
    if (!v.is_number()) parse_fail(line_no, std::string("non-numeric entry in '") + key + "'");
    const double x = v.get<double>();
    if (!std::isfinite(x)) parse_fail(line_no, std::string("non-finite entry in '") + key + "'");
    out.push_back(x);
  }
  return out;
}

std::size_t unsigned_field(const json& j, const char* key, std::size_t line_no) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_number_integer() || it->get<long long>() < 0) {
    parse_fail(line_no, std::string("missing non-negative integer '") + key + "'");
  }
  return it->get<std::size_t>();
}

std::string string_field(const json& j, const char* key, std::size_t line_no) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_string()) parse_fail(line_no, std::string("missing string '") + key + "'");
  return it->get<std::string>();
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

ClipFeatureFile read_clip_features(std::istream& in) {
  ClipFeatureFile file;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  std::set<std::pair<std::string, std::size_t>> seen;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    const json j = parse_json_line(line, line_no);
    if (!j.is_object()) parse_fail(line_no, "expected a JSON object");
    if (!have_header) {
      file.dims.spatial = unsigned_field(j, "d_s", line_no);
      file.dims.temporal = unsigned_field(j, "d_t", line_no);
      have_header = true;
      continue;
    }
    ClipFeatureRecord rec;
    rec.video_id = string_field(j, "video_id", line_no);
    rec.clip_index = unsigned_field(j, "clip_index", line_no);
    rec.sf = finite_array(j, "sf", line_no);
    rec.tf = finite_array(j, "tf", line_no);
    if (rec.sf.size() != file.dims.spatial || rec.tf.size() != file.dims.temporal) {
      throw Error(ErrorKind::DimensionMismatch,
                  "line " + std::to_string(line_no) + ": record widths " +
                      std::to_string(rec.sf.size()) + "/" + std::to_string(rec.tf.size()) +
                      " differ from header d_s/d_t " + std::to_string(file.dims.spatial) + "/" +
                      std::to_string(file.dims.temporal));
    }
    if (!seen.emplace(rec.video_id, rec.clip_index).second) {
      parse_fail(line_no, "duplicate clip " + rec.video_id + "#" + std::to_string(rec.clip_index));
    }
    file.records.push_back(std::move(rec));
  }
  if (in.bad()) throw Error(ErrorKind::Io, "read error");
  if (!have_header) throw Error(ErrorKind::Parse, "clip feature file has no header record");
  return file;
}

ClipFeatureFile read_clip_features(const std::filesystem::path& path) {
  return with_path(path, [](std::istream& in) { return read_clip_features(in); });
}

void write_clip_features(std::ostream& out, const ClipFeatureFile& file) {
  out << json{{"d_s", file.dims.spatial}, {"d_t", file.dims.temporal}}.dump() << '\n';
  for (const auto& r : file.records) {
    json j;
    j["video_id"] = r.video_id;
    j["clip_index"] = r.clip_index;
    j["sf"] = r.sf;
    j["tf"] = r.tf;
    out << j.dump() << '\n';
  }
}

// ---------------------------------------------------------------------------

std::vector<MosEntry> read_mos_csv(std::istream& in) {
  std::vector<MosEntry> out;
  std::set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    const auto cells = split_csv(line);
    if (cells.size() != 3) parse_fail(line_no, "expected video_id,mos,group_id");
    if (line_no == 1 && cells[0] == "video_id") continue;
    MosEntry e;
    e.video_id = cells[0];
    try {
      std::size_t used = 0;
      e.mos = std::stod(cells[1], &used);
      if (used != cells[1].size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      parse_fail(line_no, "bad MOS value '" + cells[1] + "'");
    }
    if (!std::isfinite(e.mos)) parse_fail(line_no, "non-finite MOS");
    e.group_id = cells[2];
    if (e.video_id.empty() || e.group_id.empty()) parse_fail(line_no, "empty id");
    if (!ids.insert(e.video_id).second) parse_fail(line_no, "duplicate video id " + e.video_id);
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<MosEntry> read_mos_csv(const std::filesystem::path& path) {
  return with_path(path, [](std::istream& in) { return read_mos_csv(in); });
}

std::string gf_record_line(const GfRecord& record) {
  json j;
  j["model_id"] = record.model_id;
  j["gf"] = record.gf;
  return j.dump();
}

std::vector<GfRecord> read_gf_records(std::istream& in) {
  std::vector<GfRecord> out;
  std::set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    const json j = parse_json_line(line, line_no);
    if (!j.is_object()) parse_fail(line_no, "expected a JSON object");
    if (!j.contains("model_id")) continue;  // metadata record
    GfRecord rec;
    rec.model_id = string_field(j, "model_id", line_no);
    const auto values = finite_array(j, "gf", line_no);
    if (values.size() != kGeometryFeatureCount) {
      parse_fail(line_no, "gf must hold " + std::to_string(kGeometryFeatureCount) + " values");
    }
    std::copy(values.begin(), values.end(), rec.gf.begin());
    if (!ids.insert(rec.model_id).second) parse_fail(line_no, "duplicate model id " + rec.model_id);
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<GfRecord> read_gf_records(const std::filesystem::path& path) {
  return with_path(path, [](std::istream& in) { return read_gf_records(in); });
}

std::map<std::string, std::string> read_manifest(const std::filesystem::path& path) {
  return with_path(path, [](std::istream& in) {
    std::map<std::string, std::string> video_to_model;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (blank(line)) continue;
      const auto cells = split_csv(line);
      if (cells.size() != 2) parse_fail(line_no, "expected model_id,video_id");
      if (line_no == 1 && cells[0] == "model_id") continue;
      if (!video_to_model.emplace(cells[1], cells[0]).second) {
        parse_fail(line_no, "video id " + cells[1] + " mapped twice");
      }
    }
    return video_to_model;
  });
}

std::vector<VideoSample> join_dataset(const ClipFeatureFile& clips,
                                      const std::vector<GfRecord>& gf,
                                      const std::vector<MosEntry>* mos,
                                      const std::map<std::string, std::string>* manifest) {
  std::map<std::string, const GfRecord*> gf_by_model;
  for (const auto& r : gf) gf_by_model[r.model_id] = &r;
  std::map<std::string, const MosEntry*> mos_by_video;
  if (mos) {
    for (const auto& e : *mos) mos_by_video[e.video_id] = &e;
  }

  std::map<std::string, VideoSample> videos;
  for (const auto& rec : clips.records) {
    auto& v = videos[rec.video_id];
    v.video_id = rec.video_id;
    v.clips.push_back(rec);
  }

  std::vector<std::string> problems;
  for (auto& [id, video] : videos) {
    std::string model_id = id;
    if (manifest) {
      if (const auto it = manifest->find(id); it != manifest->end()) model_id = it->second;
    }
    if (const auto it = gf_by_model.find(model_id); it != gf_by_model.end()) {
      video.gf = it->second->gf;
    } else {
      problems.push_back("video " + id + " has no geometry record (model " + model_id + ")");
    }
    if (mos) {
      if (const auto it = mos_by_video.find(id); it != mos_by_video.end()) {
        video.mos = it->second->mos;
        video.group_id = it->second->group_id;
      } else {
        problems.push_back("video " + id + " has no MOS entry");
      }
    }
    std::stable_sort(video.clips.begin(), video.clips.end(),
                     [](const auto& a, const auto& b) { return a.clip_index < b.clip_index; });
  }
  if (mos) {
    for (const auto& e : *mos) {
      if (!videos.count(e.video_id)) {
        problems.push_back("MOS entry " + e.video_id + " has no clip features");
      }
    }
  }
  if (!problems.empty()) {
    std::string msg = "join mismatch:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw Error(ErrorKind::JoinMismatch, msg);
  }

  std::vector<VideoSample> out;
  out.reserve(videos.size());
  for (auto& [id, video] : videos) out.push_back(std::move(video));
  return out;
}

// ---------------------------------------------------------------------------

namespace {

json config_to_json(const TrainingConfig& c) {
  return {{"learning_rate", c.learning_rate}, {"epochs", c.epochs},
          {"batch_size", c.batch_size},       {"seed", c.seed},
          {"hidden", c.hidden},               {"beta1", c.beta1},
          {"beta2", c.beta2},                 {"epsilon", c.epsilon}};
}

TrainingConfig config_from_json(const json& j) {
  TrainingConfig c;
  c.learning_rate = j.at("learning_rate").get<double>();
  c.epochs = j.at("epochs").get<std::size_t>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.hidden = j.at("hidden").get<std::size_t>();
  c.beta1 = j.at("beta1").get<double>();
  c.beta2 = j.at("beta2").get<double>();
  c.epsilon = j.at("epsilon").get<double>();
  return c;
}

}  // namespace

void save_model(std::ostream& out, const ModelArtifact& a) {
  const auto& m = a.model;
  json j;
  j["format"] = "ddhqa-model";
  j["version"] = kModelFormatVersion;
  j["tool_version"] = kToolVersion;
  j["seed"] = a.config.seed;
  j["config"] = config_to_json(a.config);
  j["dims"] = {{"d_s", m.dims.spatial}, {"d_t", m.dims.temporal}};
  j["clip_target"] = m.clip_target;
  j["standardizer"] = {{"mean", m.standardizer.mean}, {"scale", m.standardizer.scale}};
  j["head"] = {{"input_dim", m.head.input_dim()},
               {"hidden", m.head.hidden_dim()},
               {"parameters", std::vector<double>(m.head.parameters().begin(),
                                                  m.head.parameters().end())}};
  j["initial_loss"] = a.initial_loss;
  j["loss_curve"] = a.loss_curve;
  out << j.dump() << '\n';
}

ModelArtifact load_model(std::istream& in) {
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("model artifact is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || j.value("format", "") != "ddhqa-model") {
    throw Error(ErrorKind::Version, "not a ddhqa model artifact");
  }
  if (!j.contains("version") || !j["version"].is_number_integer() ||
      j["version"].get<int>() != kModelFormatVersion) {
    throw Error(ErrorKind::Version, "unsupported model artifact version " +
                                        (j.contains("version") ? j["version"].dump() : "<none>") +
                                        " (expected " + std::to_string(kModelFormatVersion) + ")");
  }
  try {
    ModelArtifact a;
    a.config = config_from_json(j.at("config"));
    a.model.dims.spatial = j.at("dims").at("d_s").get<std::size_t>();
    a.model.dims.temporal = j.at("dims").at("d_t").get<std::size_t>();
    a.model.clip_target = j.at("clip_target").get<std::size_t>();
    a.model.standardizer.mean = j.at("standardizer").at("mean").get<std::vector<double>>();
    a.model.standardizer.scale = j.at("standardizer").at("scale").get<std::vector<double>>();
    const auto& head = j.at("head");
    a.model.head = RegressionHead::from_parameters(
        head.at("input_dim").get<std::size_t>(), head.at("hidden").get<std::size_t>(),
        head.at("parameters").get<std::vector<double>>());
    a.initial_loss = j.at("initial_loss").get<double>();
    a.loss_curve = j.at("loss_curve").get<std::vector<double>>();
    const std::size_t width = a.model.dims.fused();
    if (a.model.head.input_dim() != width || a.model.standardizer.mean.size() != width ||
        a.model.standardizer.scale.size() != width) {
      throw Error(ErrorKind::DimensionMismatch, "model artifact widths are inconsistent");
    }
    return a;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("malformed model artifact: ") + e.what());
  }
}

}  // namespace ddhqa
