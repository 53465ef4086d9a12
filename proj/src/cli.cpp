#include "ddhqa/cli.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "ddhqa/error.hpp"
#include "ddhqa/evaluation.hpp"
#include "ddhqa/io.hpp"
#include "json.hpp"

namespace ddhqa::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::vector<fs::path> meshes;
  fs::path mesh_dir;
  fs::path gf;
  fs::path clip_features;
  fs::path mos;
  fs::path manifest;
  fs::path head;
  fs::path output;
  fs::path log;
  AreaMode area_mode = AreaMode::MixedVoronoi;
  fs::path dump_histogram;
  std::size_t jobs = 1;
  TrainingConfig training;
  bool logistic_remap = false;
  std::size_t clip_target = kDefaultClipTarget;
  bool generalized_folds = false;
  std::uint64_t seed = 0;
};

AreaMode parse_area_mode(const std::string& s) {
  if (s == "mixed") return AreaMode::MixedVoronoi;
  if (s == "barycentric") return AreaMode::Barycentric;
  throw UsageError("area mode must be 'mixed' or 'barycentric', got '" + s + "'");
}

std::string area_mode_name(AreaMode m) {
  return m == AreaMode::MixedVoronoi ? "mixed" : "barycentric";
}

// Flag values as parsed; applied over the config file only when given.
struct Flags {
  std::string config;
  std::vector<std::string> meshes;
  std::string mesh_dir, gf, clip_features, mos, manifest, head, output, log;
  std::string area_mode, dump_histogram;
  std::size_t jobs = 1;
  double learning_rate = 0.0;
  std::size_t epochs = 0, batch_size = 0, hidden = 0, clip_target = 0;
  bool logistic_remap = false, generalized_folds = false;
  std::uint64_t seed = 0;
};

void apply_config_file(const fs::path& path, RunConfig& rc) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw UsageError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw UsageError("config file must hold a JSON object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "meshes") {
        rc.meshes.clear();
        for (const auto& m : v) rc.meshes.emplace_back(m.get<std::string>());
      } else if (key == "mesh_dir") rc.mesh_dir = v.get<std::string>();
      else if (key == "gf") rc.gf = v.get<std::string>();
      else if (key == "clip_features") rc.clip_features = v.get<std::string>();
      else if (key == "mos") rc.mos = v.get<std::string>();
      else if (key == "manifest") rc.manifest = v.get<std::string>();
      else if (key == "head") rc.head = v.get<std::string>();
      else if (key == "output") rc.output = v.get<std::string>();
      else if (key == "log") rc.log = v.get<std::string>();
      else if (key == "area_mode") rc.area_mode = parse_area_mode(v.get<std::string>());
      else if (key == "dump_histogram") rc.dump_histogram = v.get<std::string>();
      else if (key == "jobs") rc.jobs = v.get<std::size_t>();
      else if (key == "learning_rate") rc.training.learning_rate = v.get<double>();
      else if (key == "epochs") rc.training.epochs = v.get<std::size_t>();
      else if (key == "batch_size") rc.training.batch_size = v.get<std::size_t>();
      else if (key == "hidden") rc.training.hidden = v.get<std::size_t>();
      else if (key == "beta1") rc.training.beta1 = v.get<double>();
      else if (key == "beta2") rc.training.beta2 = v.get<double>();
      else if (key == "epsilon") rc.training.epsilon = v.get<double>();
      else if (key == "logistic_remap") rc.logistic_remap = v.get<bool>();
      else if (key == "clip_target") rc.clip_target = v.get<std::size_t>();
      else if (key == "generalized_folds") rc.generalized_folds = v.get<bool>();
      else if (key == "seed") rc.seed = v.get<std::uint64_t>();
      else throw UsageError("unknown config key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw UsageError("bad value in config file: " + std::string(e.what()));
  }
}

// Machine-readable sidecar log, one JSON object per line.
class RunLog {
 public:
  RunLog(const fs::path& path, std::string command, std::ostream& err)
      : command_(std::move(command)), err_(err) {
    if (!path.empty()) {
      if (path.has_parent_path()) fs::create_directories(path.parent_path());
      file_.open(path);
    }
  }

  void write(const std::string& level, const std::string& subject, const std::string& message) {
    json j{{"level", level}, {"command", command_}, {"subject", subject}, {"message", message}};
    if (file_) file_ << j.dump() << '\n';
    if (level != "info") err_ << level << ": " << subject << ": " << message << '\n';
  }

 private:
  std::string command_;
  std::ostream& err_;
  std::ofstream file_;
};

json config_json(const RunConfig& rc, const std::string& command) {
  json j{{"command", command},
         {"seed", rc.seed},
         {"area_mode", area_mode_name(rc.area_mode)},
         {"clip_target", rc.clip_target},
         {"logistic_remap", rc.logistic_remap},
         {"generalized_folds", rc.generalized_folds},
         {"learning_rate", rc.training.learning_rate},
         {"epochs", rc.training.epochs},
         {"batch_size", rc.training.batch_size},
         {"hidden", rc.training.hidden},
         {"beta1", rc.training.beta1},
         {"beta2", rc.training.beta2},
         {"epsilon", rc.training.epsilon}};
  return j;
}

std::string metadata_comment(const RunConfig& rc, const std::string& command) {
  json j{{"tool", "ddhqa"}, {"tool_version", kToolVersion}, {"seed", rc.seed},
         {"config", config_json(rc, command)}};
  return "# " + j.dump() + "\n";
}

void require_path(const fs::path& p, const char* what) {
  if (p.empty()) throw UsageError(std::string("missing required input: ") + what);
  if (!fs::exists(p)) throw UsageError(std::string(what) + " does not exist: " + p.string());
}

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  return out;
}

std::string format_double(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

// ---------------------------------------------------------------------------

struct MeshOutcome {
  std::optional<GeometryFeatures> features;
  std::string error;
};

int cmd_extract_geometry(const RunConfig& rc, std::ostream& out, std::ostream& err) {
  std::vector<fs::path> inputs = rc.meshes;
  if (!rc.mesh_dir.empty()) {
    if (!fs::is_directory(rc.mesh_dir)) throw UsageError("mesh dir not found: " + rc.mesh_dir.string());
    std::vector<fs::path> found;
    for (const auto& entry : fs::directory_iterator(rc.mesh_dir)) {
      auto ext = entry.path().extension().string();
      std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
      if (entry.is_regular_file() && (ext == ".obj" || ext == ".ply")) found.push_back(entry.path());
    }
    std::sort(found.begin(), found.end());
    inputs.insert(inputs.end(), found.begin(), found.end());
  }
  if (inputs.empty()) throw UsageError("extract-geometry needs at least one mesh");
  if (rc.output.empty()) throw UsageError("missing required output path (-o)");

  RunLog log(rc.log.empty() ? fs::path(rc.output.string() + ".log.jsonl") : rc.log,
             "extract-geometry", err);

  std::vector<MeshOutcome> outcomes(inputs.size());
  const GeometryFeatureOptions options{rc.area_mode};
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < inputs.size(); i = next++) {
      try {
        const auto mesh = parse_mesh(inputs[i]);
        outcomes[i].features = extract_geometry_features(mesh, options);
      } catch (const std::exception& e) {
        outcomes[i].error = e.what();
      }
    }
  };
  const std::size_t n_workers = std::clamp<std::size_t>(rc.jobs, 1, inputs.size());
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 1; w < n_workers; ++w) pool.emplace_back(worker);
    worker();
  }

  auto file = open_output(rc.output);
  json header{{"format", "ddhqa-gf"},      {"version", 1},
              {"tool_version", kToolVersion}, {"seed", rc.seed},
              {"config", config_json(rc, "extract-geometry")},
              {"slots", feature_names()}};
  file << header.dump() << '\n';

  std::size_t ok = 0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const auto& path = inputs[i];
    const auto& outcome = outcomes[i];
    if (!outcome.features) {
      log.write("error", path.string(), outcome.error);
      continue;
    }
    const auto& features = *outcome.features;
    const std::string model_id = path.stem().string();
    file << gf_record_line({model_id, features.values}) << '\n';
    for (const auto& w : features.warnings) {
      log.write("warning", path.string(),
                std::string(to_string(w.field)) + " " + w.fit + " fit: " + w.message);
    }
    if (!rc.dump_histogram.empty()) {
      auto hist = open_output(rc.dump_histogram / (model_id + ".histogram.csv"));
      write_histogram_csv(hist, features.dihedral);
      write_histogram_csv(hist, features.curvature, kHistogramBins, false);
    }
    log.write("info", path.string(), "ok");
    ++ok;
  }
  out << "extracted " << ok << " of " << inputs.size() << " meshes -> " << rc.output.string()
      << '\n';
  return ok > 0 ? kOk : kDataError;
}

struct LoadedData {
  FeatureDims dims;
  std::vector<VideoSample> videos;
};

LoadedData load_dataset(const RunConfig& rc, bool need_mos) {
  require_path(rc.gf, "geometry feature file (--gf)");
  require_path(rc.clip_features, "clip feature file (--clip-features)");
  if (need_mos) require_path(rc.mos, "MOS file (--mos)");
  if (!rc.manifest.empty()) require_path(rc.manifest, "manifest (--manifest)");

  const auto clips = read_clip_features(rc.clip_features);
  const auto gf = read_gf_records(rc.gf);
  std::vector<MosEntry> mos;
  if (need_mos) mos = read_mos_csv(rc.mos);
  std::map<std::string, std::string> manifest;
  if (!rc.manifest.empty()) manifest = read_manifest(rc.manifest);
  return {clips.dims, join_dataset(clips, gf, need_mos ? &mos : nullptr,
                                   rc.manifest.empty() ? nullptr : &manifest)};
}

TrainingConfig effective_training(const RunConfig& rc) {
  TrainingConfig tc = rc.training;
  tc.seed = rc.seed;
  tc.validate();
  if (tc.epochs < 1) throw UsageError("epochs must be >= 1");
  if (rc.clip_target < 1) throw UsageError("clip target must be >= 1");
  return tc;
}

int cmd_train(const RunConfig& rc, std::ostream& out, std::ostream& err) {
  if (rc.output.empty()) throw UsageError("missing required output directory (-o)");
  TrainingConfig tc;
  try {
    tc = effective_training(rc);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  RunLog log(rc.log.empty() ? rc.output / "ddhqa.log.jsonl" : rc.log, "train", err);
  const auto data = load_dataset(rc, true);
  log.write("info", rc.clip_features.string(),
            "joined " + std::to_string(data.videos.size()) + " videos");

  auto fit = fit_quality_model(data.videos, data.dims, tc, rc.clip_target);
  ModelArtifact artifact{fit.model, tc, fit.training.epoch_loss, fit.training.initial_loss};
  {
    auto head_file = open_output(rc.output / "head.json");
    save_model(head_file, artifact);
  }
  {
    auto curve = open_output(rc.output / "loss_curve.csv");
    curve << metadata_comment(rc, "train") << "epoch,loss\n";
    for (std::size_t e = 0; e < fit.training.epoch_loss.size(); ++e) {
      curve << e + 1 << ',' << format_double(fit.training.epoch_loss[e]) << '\n';
    }
  }
  log.write("info", (rc.output / "head.json").string(), "model written");
  out << "trained on " << data.videos.size() << " videos, final loss "
      << fit.training.epoch_loss.back() << " -> " << (rc.output / "head.json").string() << '\n';
  return kOk;
}

void write_report(const RunConfig& rc, const EvaluationReport& report) {
  json folds = json::array();
  for (const auto& f : report.folds) {
    folds.push_back({{"fold_id", f.fold.fold_id},
                     {"test_groups", f.fold.test_groups},
                     {"train_groups", f.fold.train_groups},
                     {"n", f.n},
                     {"srcc", f.srcc},
                     {"plcc", f.plcc},
                     {"krcc", f.krcc},
                     {"rmse", f.rmse}});
  }
  json j{{"format", "ddhqa-report"},
         {"version", 1},
         {"tool_version", kToolVersion},
         {"seed", rc.seed},
         {"config", config_json(rc, "evaluate")},
         {"score_scale", report.score_scale},
         {"logistic_remap", report.logistic_remap},
         {"n", report.n},
         {"mean", {{"srcc", report.srcc}, {"plcc", report.plcc}, {"krcc", report.krcc},
                   {"rmse", report.rmse}}},
         {"folds", folds}};
  {
    auto file = open_output(rc.output / "report.json");
    file << j.dump(2) << '\n';
  }
  auto csv = open_output(rc.output / "report.csv");
  csv << metadata_comment(rc, "evaluate") << "fold,n,SRCC,PLCC,KRCC,RMSE\n";
  for (const auto& f : report.folds) {
    csv << f.fold.fold_id << ',' << f.n << ',' << format_double(f.srcc) << ','
        << format_double(f.plcc) << ',' << format_double(f.krcc) << ','
        << format_double(f.rmse) << '\n';
  }
  csv << "mean," << report.n << ',' << format_double(report.srcc) << ','
      << format_double(report.plcc) << ',' << format_double(report.krcc) << ','
      << format_double(report.rmse) << '\n';
}

int cmd_evaluate(const RunConfig& rc, std::ostream& out, std::ostream& err) {
  if (rc.output.empty()) throw UsageError("missing required output directory (-o)");
  CrossValidationConfig cv;
  try {
    cv.training = effective_training(rc);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  RunLog log(rc.log.empty() ? rc.output / "ddhqa.log.jsonl" : rc.log, "evaluate", err);
  const auto data = load_dataset(rc, true);
  cv.dims = data.dims;
  cv.clip_target = rc.clip_target;
  cv.seed = rc.seed;
  cv.logistic_remap = rc.logistic_remap;
  cv.generalized_folds = rc.generalized_folds;
  const auto report = run_cross_validation(data.videos, cv);
  write_report(rc, report);
  log.write("info", (rc.output / "report.json").string(), "report written");
  out << std::fixed << std::setprecision(4) << "SRCC " << report.srcc << "  PLCC " << report.plcc
      << "  KRCC " << report.krcc << "  RMSE " << report.rmse << "  (n=" << report.n << ", "
      << report.folds.size() << " folds)\n";
  return kOk;
}

int cmd_predict(const RunConfig& rc, std::ostream& out, std::ostream& err) {
  require_path(rc.head, "trained head (--head)");
  if (rc.output.empty()) throw UsageError("missing required output path (-o)");
  RunLog log(rc.log.empty() ? fs::path(rc.output.string() + ".log.jsonl") : rc.log, "predict",
             err);
  std::ifstream head_in(rc.head);
  if (!head_in) throw Error(ErrorKind::Io, "cannot open " + rc.head.string());
  const auto artifact = load_model(head_in);
  const auto data = load_dataset(rc, false);
  if (!(data.dims == artifact.model.dims)) {
    throw Error(ErrorKind::DimensionMismatch, "clip feature widths differ from the trained head");
  }
  auto file = open_output(rc.output);
  file << "# " << json{{"tool", "ddhqa"}, {"tool_version", kToolVersion},
                       {"seed", artifact.config.seed}, {"head", rc.head.filename().string()}}
                      .dump()
       << "\nvideo_id,score\n";
  for (const auto& video : data.videos) {
    file << video.video_id << ',' << format_double(artifact.model.predict(video)) << '\n';
  }
  log.write("info", rc.output.string(), std::to_string(data.videos.size()) + " scores written");
  out << "scored " << data.videos.size() << " videos -> " << rc.output.string() << '\n';
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Geometry-aware no-reference quality assessment for dynamic digital humans",
               "ddhqa"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  Flags flags;
  std::vector<CLI::Option*> opts;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", flags.config, "JSON config file; flags override its values");
    sub->add_option("--log", flags.log, "sidecar log (JSON lines)");
    sub->add_option("--seed", flags.seed, "random seed");
  };
  auto add_data = [&](CLI::App* sub, bool with_mos) {
    sub->add_option("--gf", flags.gf, "geometry feature records (JSON lines)");
    sub->add_option("--clip-features", flags.clip_features, "clip feature file (JSON lines)");
    if (with_mos) sub->add_option("--mos", flags.mos, "CSV video_id,mos,group_id");
    sub->add_option("--manifest", flags.manifest, "CSV model_id,video_id");
  };
  auto add_training = [&](CLI::App* sub) {
    sub->add_option("--learning-rate", flags.learning_rate);
    sub->add_option("--epochs", flags.epochs);
    sub->add_option("--batch-size", flags.batch_size);
    sub->add_option("--hidden", flags.hidden, "hidden layer width");
    sub->add_option("--clip-target", flags.clip_target, "clips sampled per video");
  };

  auto* extract = app.add_subcommand("extract-geometry", "22 geometry statistics per mesh");
  add_common(extract);
  extract->add_option("meshes", flags.meshes, "mesh files (.obj, .ply)");
  extract->add_option("--mesh-dir", flags.mesh_dir, "directory scanned for .obj/.ply files");
  extract->add_option("-o,--output", flags.output, "output GF records file");
  extract->add_option("--area-mode", flags.area_mode, "mixed | barycentric");
  extract->add_option("--dump-histogram", flags.dump_histogram,
                      "directory for per-mesh 256-bin histogram CSVs");
  extract->add_option("-j,--jobs", flags.jobs, "worker threads");

  auto* train_cmd = app.add_subcommand("train", "train a regression head on all videos");
  add_common(train_cmd);
  add_data(train_cmd, true);
  add_training(train_cmd);
  train_cmd->add_option("-o,--output", flags.output, "output directory");

  auto* evaluate = app.add_subcommand("evaluate", "motion-group cross-validation");
  add_common(evaluate);
  add_data(evaluate, true);
  add_training(evaluate);
  evaluate->add_option("-o,--output", flags.output, "output directory");
  evaluate->add_flag("--logistic-remap", flags.logistic_remap,
                     "fit a 4-parameter logistic before PLCC/RMSE");
  evaluate->add_flag("--generalized-folds", flags.generalized_folds,
                     "accept any even number of motion groups");

  auto* predict = app.add_subcommand("predict", "score videos with a trained head");
  add_common(predict);
  add_data(predict, false);
  predict->add_option("--head", flags.head, "trained head artifact");
  predict->add_option("-o,--output", flags.output, "output CSV video_id,score");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();  // program name
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << kToolVersion << '\n';
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsageError;
  }

  CLI::App* sub = app.get_subcommands().front();
  auto given = [&](const std::string& name) {
    const auto* opt = sub->get_option_no_throw(name);
    return opt != nullptr && opt->count() > 0;
  };

  try {
    RunConfig rc;
    if (given("--config")) apply_config_file(flags.config, rc);
    if (given("meshes")) {
      rc.meshes.assign(flags.meshes.begin(), flags.meshes.end());
    }
    if (given("--mesh-dir")) rc.mesh_dir = flags.mesh_dir;
    if (given("--gf")) rc.gf = flags.gf;
    if (given("--clip-features")) rc.clip_features = flags.clip_features;
    if (given("--mos")) rc.mos = flags.mos;
    if (given("--manifest")) rc.manifest = flags.manifest;
    if (given("--head")) rc.head = flags.head;
    if (given("--output")) rc.output = flags.output;
    if (given("--log")) rc.log = flags.log;
    if (given("--area-mode")) rc.area_mode = parse_area_mode(flags.area_mode);
    if (given("--dump-histogram")) rc.dump_histogram = flags.dump_histogram;
    if (given("--jobs")) rc.jobs = flags.jobs;
    if (given("--learning-rate")) rc.training.learning_rate = flags.learning_rate;
    if (given("--epochs")) rc.training.epochs = flags.epochs;
    if (given("--batch-size")) rc.training.batch_size = flags.batch_size;
    if (given("--hidden")) rc.training.hidden = flags.hidden;
    if (given("--clip-target")) rc.clip_target = flags.clip_target;
    if (given("--logistic-remap")) rc.logistic_remap = flags.logistic_remap;
    if (given("--generalized-folds")) rc.generalized_folds = flags.generalized_folds;
    if (given("--seed")) rc.seed = flags.seed;

    const std::string name = sub->get_name();
    if (name == "extract-geometry") return cmd_extract_geometry(rc, out, err);
    if (name == "train") return cmd_train(rc, out, err);
    if (name == "evaluate") return cmd_evaluate(rc, out, err);
    return cmd_predict(rc, out, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsageError;
  } catch (const Error& e) {
    err << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
}

}  // namespace ddhqa::cli
