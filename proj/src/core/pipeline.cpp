#include "ugciqa/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "text_util.hpp"
#include "ugciqa/error.hpp"
#include "ugciqa/features.hpp"
#include "ugciqa/model.hpp"
#include "ugciqa/patcher.hpp"
#include "ugciqa/psych.hpp"
#include "ugciqa/qmap.hpp"
#include "ugciqa/rng.hpp"
#include "ugciqa/sampler.hpp"
#include "ugciqa/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace ugciqa {

std::string schema_comment(std::uint64_t seed) {
  return "# ugciqa schema_version=" + std::to_string(kSchemaVersion) +
         " seed=" + std::to_string(seed) + "\n";
}

// ---- manifests ----------------------------------------------------------

namespace {

std::string read_text(const fs::path& path, ErrorCode code) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(code, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorCode::kIo, "failed writing " + path.string());
}

}  // namespace

Manifest parse_manifest(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::kValidation, std::string("manifest is not valid JSON: ") + e.what());
  }
  Manifest m;
  try {
    m.schema_version = j.at("schema_version").get<int>();
    if (m.schema_version != kSchemaVersion)
      fail(ErrorCode::kVersion, "manifest schema_version " + std::to_string(m.schema_version) +
                                    " is not supported");
    m.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("report")) m.report_json = j.at("report").dump();
    std::set<std::string> ids;
    for (const auto& e : j.at("entries")) {
      ManifestEntry entry;
      entry.id = e.at("id").get<std::string>();
      entry.image_path = e.at("image_path").get<std::string>();
      if (e.contains("mos") && !e.at("mos").is_null()) entry.mos = e.at("mos").get<double>();
      if (!ids.insert(entry.id).second)
        fail(ErrorCode::kValidation, "duplicate manifest id '" + entry.id + "'");
      if (e.contains("patches")) {
        for (const auto& p : e.at("patches")) {
          ManifestPatch patch;
          patch.parent_id = p.value("parent_id", entry.id);
          patch.scale = p.value("scale", 0.0);
          patch.rect = {p.at("left").get<int>(), p.at("top").get<int>(), p.at("right").get<int>(),
                        p.at("bottom").get<int>()};
          if (!patch.rect.valid())
            fail(ErrorCode::kValidation, "invalid patch rect in entry '" + entry.id + "'");
          if (p.contains("mos") && !p.at("mos").is_null()) patch.mos = p.at("mos").get<double>();
          entry.patches.push_back(patch);
        }
      }
      m.entries.push_back(std::move(entry));
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::kValidation, std::string("malformed manifest: ") + e.what());
  }
  return m;
}

std::string manifest_to_json(const Manifest& m) {
  json entries = json::array();
  for (const auto& e : m.entries) {
    json je{{"id", e.id}, {"image_path", e.image_path}};
    if (e.mos) je["mos"] = *e.mos;
    json patches = json::array();
    for (const auto& p : e.patches) {
      json jp{{"parent_id", p.parent_id}, {"scale", p.scale},      {"left", p.rect.left},
              {"top", p.rect.top},        {"right", p.rect.right}, {"bottom", p.rect.bottom}};
      if (p.mos) jp["mos"] = *p.mos;
      patches.push_back(std::move(jp));
    }
    je["patches"] = std::move(patches);
    entries.push_back(std::move(je));
  }
  json j{{"schema_version", m.schema_version},
         {"seed", m.seed},
         {"entries", std::move(entries)},
         {"report", json::parse(m.report_json)}};
  return j.dump(2) + "\n";
}

fs::path resolve_image_path(const fs::path& manifest_path, const std::string& image_path) {
  const fs::path p(image_path);
  if (p.is_absolute()) return p;
  return manifest_path.parent_path() / p;
}

Manifest read_manifest(const fs::path& path) {
  Manifest m = parse_manifest(read_text(path, ErrorCode::kIo));
  for (const auto& e : m.entries) {
    const fs::path img = resolve_image_path(path, e.image_path);
    if (!fs::exists(img))
      fail(ErrorCode::kIo, "manifest entry '" + e.id + "' references missing file " + img.string());
  }
  return m;
}

void write_manifest(const fs::path& path, const Manifest& manifest) {
  write_text(path, manifest_to_json(manifest));
}

// ---- worker pool --------------------------------------------------------

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(jobs, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> threads;
  for (std::size_t t = 0; t < workers; ++t) {
    threads.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : threads) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

// ---- commands -----------------------------------------------------------

namespace {

// Command-specific option keys; everything else must be a settings key.
const std::map<std::string, std::set<std::string>>& command_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"features", {"image_dir", "out", "faces"}},
      {"sample", {"features", "targets", "k", "out", "image_dir"}},
      {"crop", {"manifest", "out"}},
      {"study", {"out", "ratings", "ratings_out"}},
      {"train", {"manifest", "out", "kind", "loss_out"}},
      {"eval", {"checkpoint", "manifest", "pad_side"}},
      {"map", {"checkpoint", "image", "out", "alpha", "grid", "pad_side", "csv_out"}},
  };
  return keys;
}

struct Invocation {
  std::map<std::string, std::string> args;
  Settings settings;
  int jobs = 1;
  bool model_keys_given = false;

  bool has(const std::string& key) const { return args.count(key) != 0; }
  const std::string& require(const std::string& key) const {
    const auto it = args.find(key);
    if (it == args.end() || it->second.empty())
      fail(ErrorCode::kInvalidArgument, "missing required option '" + key + "'");
    return it->second;
  }
  std::string get(const std::string& key, const std::string& fallback = {}) const {
    const auto it = args.find(key);
    return it == args.end() ? fallback : it->second;
  }
  long long get_int(const std::string& key) const {
    try {
      return detail::parse_int(require(key), key);
    } catch (const Error& e) {
      fail(ErrorCode::kInvalidArgument, e.what());
    }
  }
  double get_double(const std::string& key) const {
    try {
      return detail::parse_double(require(key), key);
    } catch (const Error& e) {
      fail(ErrorCode::kInvalidArgument, e.what());
    }
  }
};

Invocation parse_invocation(const std::string& command, const KeyValueConfig& options) {
  const auto it = command_keys().find(command);
  if (it == command_keys().end()) fail(ErrorCode::kInvalidArgument, "unknown command '" + command + "'");
  Invocation inv;
  KeyValueConfig direct;
  for (const auto& [key, value] : options.values()) {
    if (it->second.count(key)) {
      inv.args[key] = value;
    } else if (key == "jobs") {
      const long long jobs = detail::parse_int(value, "jobs");
      if (jobs < 1 || jobs > 1024) fail(ErrorCode::kInvalidArgument, "jobs must be in [1, 1024]");
      inv.jobs = static_cast<int>(jobs);
    } else if (key != "config") {
      direct.set(key, value);
    }
  }
  if (options.has("config")) {
    const auto file = KeyValueConfig::load(options.values().at("config"));
    apply_config(file, inv.settings);
    for (const auto& [key, value] : file.values())
      if (key.rfind("model.", 0) == 0) inv.model_keys_given = true;
  }
  apply_config(direct, inv.settings);
  for (const auto& [key, value] : direct.values())
    if (key.rfind("model.", 0) == 0) inv.model_keys_given = true;
  validate_settings(inv.settings);
  return inv;
}

json error_json(const std::string& item, const Error& e) {
  return json{{"item", item}, {"code", error_code_name(e.code())}, {"message", e.what()}};
}

json base_report(const std::string& command, std::uint64_t seed) {
  return json{{"command", command}, {"schema_version", kSchemaVersion}, {"seed", seed}};
}

CommandResult finish(json report, bool partial, std::string summary) {
  CommandResult r;
  r.exit_code = partial ? kExitPartial : kExitOk;
  report["exit_code"] = r.exit_code;
  r.report_json = report.dump(2);
  r.summary = std::move(summary);
  return r;
}

ImageBuf as_rgb(const ImageBuf& img) {
  if (img.channels() == 3) return img;
  std::vector<double> s;
  s.reserve(img.pixel_count() * 3);
  for (int c = 0; c < 3; ++c) s.insert(s.end(), img.samples().begin(), img.samples().end());
  return ImageBuf(img.width(), img.height(), 3, std::move(s));
}

bool is_image_file(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

std::map<std::string, int> read_faces_csv(const fs::path& path) {
  std::istringstream in(read_text(path, ErrorCode::kIo));
  std::map<std::string, int> faces;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    const auto t = detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto cols = detail::split(t, ',');
    if (header) {
      header = false;
      if (cols.size() == 2 && detail::trim(cols[1]) == "face_count") continue;
    }
    if (cols.size() != 2) fail(ErrorCode::kValidation, "faces CSV rows need id,face_count");
    faces[std::string(detail::trim(cols[0]))] =
        static_cast<int>(detail::parse_int(cols[1], "face_count"));
  }
  return faces;
}

CommandResult cmd_features(const Invocation& inv) {
  const fs::path dir = inv.require("image_dir");
  const fs::path out = inv.require("out");
  if (!fs::is_directory(dir)) fail(ErrorCode::kIo, "not a directory: " + dir.string());
  json report = base_report("features", inv.settings.seed);
  json warnings = json::array();

  std::map<std::string, int> faces;
  if (!inv.has("faces")) {
    warnings.push_back("no faces file given; face_count set to 0");
  } else if (!fs::exists(inv.get("faces"))) {
    warnings.push_back("faces file " + inv.get("faces") + " not found; face_count set to 0");
  } else {
    faces = read_faces_csv(inv.get("faces"));
  }

  std::vector<std::string> ids;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file() && is_image_file(e.path()))
      ids.push_back(e.path().lexically_relative(dir).generic_string());
  std::sort(ids.begin(), ids.end());

  std::vector<std::optional<FeatureRow>> rows(ids.size());
  std::vector<std::optional<Error>> errors(ids.size());
  parallel_for(ids.size(), inv.jobs, [&](std::size_t i) {
    try {
      const auto f = faces.find(ids[i]);
      const ImageBuf img = as_rgb(load_image(dir / ids[i]));
      rows[i] = FeatureRow{ids[i], feature_vector(img, f == faces.end() ? 0 : f->second)};
    } catch (const Error& e) {
      errors[i] = e;
    }
  });

  std::vector<FeatureRow> ok;
  json failed = json::array();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (rows[i]) ok.push_back(*rows[i]);
    if (errors[i]) failed.push_back(error_json(ids[i], *errors[i]));
  }
  std::ostringstream csv;
  csv << schema_comment(inv.settings.seed);
  write_feature_csv(csv, ok);
  write_text(out, csv.str());

  report["rows"] = ok.size();
  report["failed"] = failed;
  report["warnings"] = warnings;
  report["out"] = out.string();
  return finish(report, !failed.empty(),
                std::to_string(ok.size()) + " rows written, " + std::to_string(failed.size()) +
                    " failed");
}

std::string relative_to(const fs::path& target, const fs::path& base_dir) {
  const fs::path abs_target = fs::weakly_canonical(fs::absolute(target));
  const fs::path abs_base = fs::weakly_canonical(fs::absolute(base_dir.empty() ? "." : base_dir));
  const fs::path rel = abs_target.lexically_relative(abs_base);
  return rel.empty() ? abs_target.generic_string() : rel.generic_string();
}

CommandResult cmd_sample(const Invocation& inv) {
  const fs::path features_path = inv.require("features");
  const fs::path out = inv.require("out");
  const long long k = inv.get_int("k");
  if (k < 1) fail(ErrorCode::kInvalidArgument, "k must be >= 1");
  const fs::path image_dir = inv.has("image_dir") ? fs::path(inv.get("image_dir"))
                                                  : features_path.parent_path();

  std::istringstream csv(read_text(features_path, ErrorCode::kIo));
  const auto rows = read_feature_csv(csv);
  SamplingProblem problem;
  problem.targets = parse_targets_json(read_text(inv.require("targets"), ErrorCode::kIo));
  for (const auto& r : rows) problem.candidates.push_back(r.features);
  problem.k = static_cast<std::size_t>(k);

  const auto selection = greedy_sample(problem, inv.settings.seed);
  const double objective = sampling_objective(problem, selection);
  const auto distances = sampling_distances(problem, selection);

  Manifest m;
  m.seed = inv.settings.seed;
  for (std::size_t idx : selection) {
    ManifestEntry e;
    e.id = rows[idx].id;
    e.image_path = relative_to(image_dir / rows[idx].id, out.parent_path());
    m.entries.push_back(std::move(e));
  }
  json dist;
  for (std::size_t f = 0; f < distances.size(); ++f) dist[std::string(kFeatureNames[f])] = distances[f];
  m.report_json = json{{"k", k}, {"candidates", rows.size()}, {"objective", objective},
                       {"distances", dist}}
                      .dump();
  write_manifest(out, m);

  json report = base_report("sample", inv.settings.seed);
  report["selected"] = selection.size();
  report["objective"] = objective;
  report["distances"] = dist;
  report["out"] = out.string();
  return finish(report, false,
                "selected " + std::to_string(selection.size()) + " of " +
                    std::to_string(rows.size()) + ", J = " + detail::format_double(objective));
}

CommandResult cmd_crop(const Invocation& inv) {
  const fs::path in_path = inv.require("manifest");
  const fs::path out = inv.require("out");
  Manifest m = read_manifest(in_path);
  const std::uint64_t seed = inv.settings.seed;
  std::vector<std::optional<Error>> errors(m.entries.size());
  parallel_for(m.entries.size(), inv.jobs, [&](std::size_t i) {
    auto& e = m.entries[i];
    try {
      const ImageBuf img = load_image(resolve_image_path(in_path, e.image_path));
      const auto patches = propose_patches(img.width(), img.height(), derive_seed(seed, i), e.id);
      const auto violations = validate_patchset(img.width(), img.height(), patches);
      if (!violations.empty())
        fail(ErrorCode::kValidation, "patch validation failed: " + violations.front().message);
      e.patches.clear();
      for (const auto& p : patches) e.patches.push_back({p.parent_id, p.scale, p.rect, std::nullopt});
    } catch (const Error& err) {
      e.patches.clear();
      errors[i] = err;
    }
  });

  json failed = json::array();
  for (std::size_t i = 0; i < m.entries.size(); ++i)
    if (errors[i]) failed.push_back(error_json(m.entries[i].id, *errors[i]));
  // Image paths stay valid when the output lives in another directory.
  for (auto& e : m.entries)
    e.image_path = relative_to(resolve_image_path(in_path, e.image_path), out.parent_path());
  m.seed = seed;
  m.report_json = json{{"cropped", m.entries.size() - failed.size()}, {"failed", failed}}.dump();
  write_manifest(out, m);

  json report = base_report("crop", seed);
  report["entries"] = m.entries.size();
  report["failed"] = failed;
  report["out"] = out.string();
  return finish(report, !failed.empty(),
                std::to_string(m.entries.size() - failed.size()) + " entries cropped, " +
                    std::to_string(failed.size()) + " failed");
}

CommandResult cmd_study(const Invocation& inv) {
  const auto& s = inv.settings;
  const fs::path out = inv.require("out");
  json report = base_report("study", s.seed);
  std::vector<SubjectSession> sessions;
  MosTable truth;
  if (inv.has("ratings")) {
    std::istringstream in(read_text(inv.get("ratings"), ErrorCode::kIo));
    sessions = group_sessions(read_ratings_csv(in));
    report["source"] = "ratings";
  } else {
    const auto& sim = s.simulation;
    Rng truth_rng(derive_seed(s.seed, 1));
    for (int c = 0; c < sim.contents; ++c) {
      char id[32];
      std::snprintf(id, sizeof(id), "c-%04d", c);
      truth[id].mos = truth_rng.uniform(sim.truth_min, sim.truth_max);
    }
    Rng rater_rng(derive_seed(s.seed, 2));
    std::vector<RaterModel> models;
    for (int r = 0; r < sim.raters; ++r) {
      RaterModel m;
      m.gain = rater_rng.uniform(sim.gain_min, sim.gain_max);
      m.bias = rater_rng.uniform(sim.bias_min, sim.bias_max);
      m.noise_sigma = sim.noise_sigma;
      models.push_back(m);
    }
    for (int r = 0; r < sim.spam_raters; ++r) {
      RaterModel m;
      m.spam_mode = SpamMode::kConstant;
      m.spam_constant = sim.spam_constant;
      models.push_back(m);
    }
    sessions = simulate_raters(truth, models, s.hit_size, derive_seed(s.seed, 3));
    report["source"] = "simulation";
  }
  const auto records = flatten(sessions);
  if (inv.has("ratings_out")) {
    std::ostringstream csv;
    csv << schema_comment(s.seed);
    write_ratings_csv(csv, records);
    write_text(inv.get("ratings_out"), csv.str());
  }

  const auto decisions = evaluate_subjects(sessions, s.policy);
  std::set<std::string> accepted;
  json rejected = json::array();
  for (const auto& d : decisions) {
    if (d.accepted) {
      accepted.insert(d.subject_id);
    } else {
      rejected.push_back({{"subject", d.subject_id}, {"reasons", d.reasons}});
    }
  }
  bool partial = false;
  MosTable mos;
  try {
    mos = compute_mos(records, accepted);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kCoverage) throw;
    mos = compute_mos_partial(records, accepted);
    report["coverage_error"] = e.what();
    partial = true;
  }
  std::ostringstream csv;
  csv << schema_comment(s.seed);
  write_mos_csv(csv, mos);
  write_text(out, csv.str());

  report["subjects"] = decisions.size();
  report["accepted"] = accepted.size();
  report["rejected"] = rejected;
  report["contents"] = mos.size();
  std::string summary = "accepted " + std::to_string(accepted.size()) + ", rejected " +
                        std::to_string(rejected.size());
  try {
    const double c = inter_subject_consistency(records, accepted, s.consistency_splits, s.seed);
    report["consistency_lcc"] = c;
    summary += ", mean split LCC " + detail::format_double(c);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kSplit) throw;
    report["consistency_lcc"] = nullptr;
    report["consistency_error"] = e.what();
    summary += ", split consistency undefined";
  }
  if (!truth.empty()) {
    std::vector<double> t, m;
    for (const auto& [id, entry] : mos) {
      const auto it = truth.find(id);
      if (it == truth.end()) continue;
      t.push_back(it->second.mos);
      m.push_back(entry.mos);
    }
    try {
      const double r = srcc(t, m);
      report["recovery_srcc"] = r;
      summary += ", recovery SRCC " + detail::format_double(r);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kMetric) throw;
      report["recovery_srcc"] = nullptr;
    }
  }
  report["out"] = out.string();
  return finish(report, partial, summary);
}

std::vector<Rect> patch_rects(const ManifestEntry& e) {
  std::vector<Rect> rects;
  for (const auto& p : e.patches) rects.push_back(p.rect);
  return rects;
}

CommandResult cmd_train(const Invocation& inv) {
  Settings s = inv.settings;
  if (inv.has("kind")) s.model.kind = nn::parse_model_kind(inv.get("kind"));
  s.train.seed = s.seed;
  const fs::path in_path = inv.require("manifest");
  const fs::path out = inv.require("out");
  const Manifest m = read_manifest(in_path);
  const bool patches = s.model.kind != nn::ModelKind::kBaseline;

  std::vector<nn::TrainSample> data(m.entries.size());
  parallel_for(m.entries.size(), inv.jobs, [&](std::size_t i) {
    const auto& e = m.entries[i];
    if (!e.mos) fail(ErrorCode::kConfig, "manifest entry '" + e.id + "' has no mos");
    std::vector<Rect> rects;
    std::vector<double> patch_mos;
    if (patches) {
      if (e.patches.empty()) fail(ErrorCode::kConfig, "manifest entry '" + e.id + "' has no patches");
      for (const auto& p : e.patches) {
        if (!p.mos) fail(ErrorCode::kConfig, "a patch of '" + e.id + "' has no mos");
        rects.push_back(p.rect);
        patch_mos.push_back(*p.mos);
      }
    }
    ImageBuf img = load_image(resolve_image_path(in_path, e.image_path));
    if (s.model.backbone.in_channels == 3) img = as_rgb(img);
    data[i] = nn::prepare_sample(img, rects, *e.mos, patch_mos, s.train.pad_side);
  });

  nn::QualityModel model(s.model, s.seed);
  model.set_pad_side(s.train.pad_side);
  const auto result = nn::train(model, data, s.train);
  model.save(out.string());
  if (inv.has("loss_out")) nn::write_loss_csv(inv.get("loss_out"), result.loss_curve, s.seed);

  json report = base_report("train", s.seed);
  report["kind"] = nn::model_kind_name(s.model.kind);
  report["items"] = data.size();
  report["steps"] = result.steps;
  report["parameters"] = model.parameter_count();
  report["final_loss"] = result.loss_curve.empty() ? json(nullptr) : json(result.loss_curve.back());
  report["out"] = out.string();
  std::string summary = "trained " + nn::model_kind_name(s.model.kind) + " for " +
                        std::to_string(result.steps) + " steps";
  if (!result.loss_curve.empty())
    summary += ", final loss " + detail::format_double(result.loss_curve.back());
  return finish(report, false, summary);
}

bool same_architecture(const nn::ModelConfig& a, const nn::ModelConfig& b) {
  return a.kind == b.kind && a.backbone.in_channels == b.backbone.in_channels &&
         a.backbone.widths == b.backbone.widths && a.backbone.strides == b.backbone.strides &&
         a.backbone.blocks_per_stage == b.backbone.blocks_per_stage &&
         a.backbone.out_channels == b.backbone.out_channels && a.head.hidden == b.head.hidden &&
         a.head.score_offset == b.head.score_offset && a.head.score_scale == b.head.score_scale;
}

nn::QualityModel load_checkpoint(const Invocation& inv) {
  nn::QualityModel model = nn::QualityModel::load(inv.require("checkpoint"));
  if (inv.model_keys_given && !same_architecture(model.config(), inv.settings.model))
    fail(ErrorCode::kVersion, "checkpoint model does not match the configured model settings");
  return model;
}

int inference_side(const Invocation& inv, const nn::QualityModel& model) {
  if (inv.has("pad_side")) {
    const long long side = inv.get_int("pad_side");
    if (side < 1) fail(ErrorCode::kInvalidArgument, "pad_side must be positive");
    return static_cast<int>(side);
  }
  return model.pad_side() > 0 ? model.pad_side() : inv.settings.train.pad_side;
}

std::string format_metric(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

CommandResult cmd_eval(const Invocation& inv) {
  const nn::QualityModel model = load_checkpoint(inv);
  const int side = inference_side(inv, model);
  const fs::path in_path = inv.require("manifest");
  const Manifest m = read_manifest(in_path);
  for (const auto& e : m.entries)
    if (!e.mos) fail(ErrorCode::kConfig, "manifest entry '" + e.id + "' has no mos");

  std::vector<std::optional<double>> preds(m.entries.size());
  std::vector<std::optional<Error>> errors(m.entries.size());
  parallel_for(m.entries.size(), inv.jobs, [&](std::size_t i) {
    const auto& e = m.entries[i];
    try {
      const ImageBuf img = load_image(resolve_image_path(in_path, e.image_path));
      const auto rects = patch_rects(e);
      const bool use_patches =
          model.config().kind == nn::ModelKind::kFeedback && rects.size() == nn::kFeedbackPatches;
      preds[i] = model.predict(img, side, use_patches ? std::span<const Rect>(rects)
                                                      : std::span<const Rect>{});
    } catch (const Error& err) {
      errors[i] = err;
    }
  });

  std::vector<double> p, t;
  json failed = json::array();
  json predictions = json::array();
  for (std::size_t i = 0; i < m.entries.size(); ++i) {
    if (errors[i]) failed.push_back(error_json(m.entries[i].id, *errors[i]));
    if (!preds[i]) continue;
    p.push_back(*preds[i]);
    t.push_back(*m.entries[i].mos);
    predictions.push_back({{"id", m.entries[i].id}, {"prediction", *preds[i]}, {"mos", t.back()}});
  }
  json report = base_report("eval", inv.settings.seed);
  report["items"] = p.size();
  report["failed"] = failed;
  report["predictions"] = predictions;
  report["pad_side"] = side;
  std::string summary;
  if (p.size() < 3) fail(ErrorCode::kMetric, "at least 3 evaluated items are needed");
  try {
    const double rs = srcc(p, t);
    const double rl = lcc(p, t);
    report["srcc"] = rs;
    report["lcc"] = rl;
    summary = "SRCC " + format_metric(rs) + "  LCC " + format_metric(rl);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kMetric) throw;
    report["srcc"] = nullptr;
    report["lcc"] = nullptr;
    report["metric_error"] = e.what();
    summary = std::string("SRCC undefined  LCC undefined (") + e.what() + ")";
  }
  return finish(report, !failed.empty(), summary);
}

CommandResult cmd_map(const Invocation& inv) {
  const nn::QualityModel model = load_checkpoint(inv);
  const int side = inference_side(inv, model);
  const double alpha = inv.has("alpha") ? inv.get_double("alpha") : inv.settings.map_alpha;
  const long long grid = inv.has("grid") ? inv.get_int("grid") : inv.settings.map_grid;
  if (!(alpha >= 0.0 && alpha <= 1.0)) fail(ErrorCode::kInvalidArgument, "alpha must lie in [0, 1]");
  if (grid < 1) fail(ErrorCode::kInvalidArgument, "grid must be >= 1");
  const fs::path out = inv.require("out");
  const ImageBuf img = load_image(inv.require("image"));
  const QualityMap map = predict_map(model, img, static_cast<int>(grid), side);
  const ImageBuf rendered = render_map(img, map, alpha);
  const std::uint64_t seed = inv.settings.seed;
  save_png(rendered, out,
           {{"ugciqa:schema_version", std::to_string(kSchemaVersion)},
            {"ugciqa:seed", std::to_string(seed)},
            {"ugciqa:alpha", detail::format_double(alpha)},
            {"ugciqa:grid", std::to_string(grid)}});
  if (inv.has("csv_out")) write_map_csv(inv.get("csv_out"), map, seed);

  double lo = 100.0, hi = 0.0, sum = 0.0;
  for (double v : map.scores) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    sum += v;
  }
  json report = base_report("map", seed);
  report["grid"] = grid;
  report["alpha"] = alpha;
  report["min_score"] = lo;
  report["max_score"] = hi;
  report["mean_score"] = sum / static_cast<double>(map.scores.size());
  report["out"] = out.string();
  return finish(report, false,
                "rendered " + std::to_string(grid) + "x" + std::to_string(grid) +
                    " map, mean block score " + format_metric(sum / map.scores.size()));
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"features", "sample", "crop", "study",
                                                 "train",    "eval",   "map"};
  return names;
}

CommandResult run_command(const std::string& command, const KeyValueConfig& options) {
  const Invocation inv = parse_invocation(command, options);
  if (command == "features") return cmd_features(inv);
  if (command == "sample") return cmd_sample(inv);
  if (command == "crop") return cmd_crop(inv);
  if (command == "study") return cmd_study(inv);
  if (command == "train") return cmd_train(inv);
  if (command == "eval") return cmd_eval(inv);
  return cmd_map(inv);
}

}  // namespace ugciqa
