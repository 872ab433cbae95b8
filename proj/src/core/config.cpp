#include "ugciqa/config.hpp"

#include <fstream>
#include <functional>
#include <sstream>

#include "text_util.hpp"
#include "ugciqa/error.hpp"

namespace ugciqa {

KeyValueConfig KeyValueConfig::parse(const std::string& text) {
  KeyValueConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos)
      fail(ErrorCode::kConfig, "config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key(detail::trim(t.substr(0, eq)));
    if (key.empty()) fail(ErrorCode::kConfig, "config line " + std::to_string(lineno) + ": empty key");
    cfg.values_[key] = std::string(detail::trim(t.substr(eq + 1)));
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kConfig, "cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

namespace {

std::string join_ints(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

std::vector<int> parse_int_list(std::string_view s, std::string_view what) {
  std::vector<int> out;
  for (auto part : detail::split(s, ',')) out.push_back(static_cast<int>(detail::parse_int(part, what)));
  return out;
}

struct Field {
  std::string key;
  std::function<std::string(const Settings&)> get;
  std::function<void(Settings&, std::string_view)> set;
};

Field int_ref(std::string key, std::function<int&(Settings&)> ref) {
  return {key, [ref](const Settings& s) { return std::to_string(ref(const_cast<Settings&>(s))); },
          [ref, key](Settings& s, std::string_view v) {
            ref(s) = static_cast<int>(detail::parse_int(v, key));
          }};
}

Field double_ref(std::string key, std::function<double&(Settings&)> ref) {
  return {key,
          [ref](const Settings& s) { return detail::format_double(ref(const_cast<Settings&>(s))); },
          [ref, key](Settings& s, std::string_view v) { ref(s) = detail::parse_double(v, key); }};
}

// Keys that echo fixed constants: accepted only with their fixed value.
Field fixed_field(std::string key, long long value) {
  return {key, [value](const Settings&) { return std::to_string(value); },
          [value, key](Settings&, std::string_view v) {
            if (detail::parse_int(v, key) != value)
              fail(ErrorCode::kConfig, key + " is fixed at " + std::to_string(value));
          }};
}

Field fixed_double_field(std::string key, double value) {
  return {key, [value](const Settings&) { return detail::format_double(value); },
          [value, key](Settings&, std::string_view v) {
            if (detail::parse_double(v, key) != value)
              fail(ErrorCode::kConfig, key + " is fixed at " + detail::format_double(value));
          }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back({"seed", [](const Settings& s) { return std::to_string(s.seed); },
                 [](Settings& s, std::string_view v) {
                   const long long x = detail::parse_int(v, "seed");
                   if (x < 0) fail(ErrorCode::kConfig, "seed must be >= 0");
                   s.seed = static_cast<std::uint64_t>(x);
                 }});
    f.push_back(int_ref("train.batch_size", [](Settings& s) -> int& { return s.train.batch_size; }));
    f.push_back(int_ref("train.epochs", [](Settings& s) -> int& { return s.train.epochs; }));
    f.push_back(double_ref("train.beta1", [](Settings& s) -> double& { return s.train.beta1; }));
    f.push_back(double_ref("train.beta2", [](Settings& s) -> double& { return s.train.beta2; }));
    f.push_back(double_ref("train.adam_eps", [](Settings& s) -> double& { return s.train.adam_eps; }));
    f.push_back(double_ref("train.weight_decay",
                           [](Settings& s) -> double& { return s.train.weight_decay; }));
    f.push_back(double_ref("train.lr_backbone",
                           [](Settings& s) -> double& { return s.train.lr_backbone; }));
    f.push_back(double_ref("train.lr_head", [](Settings& s) -> double& { return s.train.lr_head; }));
    f.push_back(int_ref("train.pad_side", [](Settings& s) -> int& { return s.train.pad_side; }));
    f.push_back(int_ref("train.max_steps", [](Settings& s) -> int& { return s.train.max_steps; }));

    f.push_back({"model.kind", [](const Settings& s) { return nn::model_kind_name(s.model.kind); },
                 [](Settings& s, std::string_view v) {
                   s.model.kind = nn::parse_model_kind(std::string(v));
                 }});
    f.push_back(int_ref("model.in_channels",
                        [](Settings& s) -> int& { return s.model.backbone.in_channels; }));
    f.push_back({"model.widths", [](const Settings& s) { return join_ints(s.model.backbone.widths); },
                 [](Settings& s, std::string_view v) {
                   s.model.backbone.widths = parse_int_list(v, "model.widths");
                 }});
    f.push_back({"model.strides",
                 [](const Settings& s) { return join_ints(s.model.backbone.strides); },
                 [](Settings& s, std::string_view v) {
                   s.model.backbone.strides = parse_int_list(v, "model.strides");
                 }});
    f.push_back(int_ref("model.blocks_per_stage",
                        [](Settings& s) -> int& { return s.model.backbone.blocks_per_stage; }));
    f.push_back(int_ref("model.out_channels",
                        [](Settings& s) -> int& { return s.model.backbone.out_channels; }));
    f.push_back(int_ref("model.head_hidden", [](Settings& s) -> int& { return s.model.head.hidden; }));
    f.push_back(double_ref("model.score_offset",
                           [](Settings& s) -> double& { return s.model.head.score_offset; }));
    f.push_back(double_ref("model.score_scale",
                           [](Settings& s) -> double& { return s.model.head.score_scale; }));
    f.push_back(fixed_field("model.roi_grid", nn::kRoiGrid));

    f.push_back(int_ref("study.hit_size", [](Settings& s) -> int& { return s.hit_size; }));
    f.push_back(fixed_field("study.hit_size_initial", kHitSizeInitial));
    f.push_back(fixed_field("study.hit_size_extended", kHitSizeExtended));
    f.push_back(fixed_field("study.repeats_per_hit", kRepeatsPerHit));
    f.push_back(fixed_field("study.golds_per_hit", kGoldsPerHit));
    f.push_back(double_ref("study.min_acceptance_rate",
                           [](Settings& s) -> double& { return s.policy.min_acceptance_rate; }));
    f.push_back(double_ref("study.repeat_threshold",
                           [](Settings& s) -> double& { return s.policy.repeat_threshold; }));
    f.push_back(double_ref("study.max_identical_fraction",
                           [](Settings& s) -> double& { return s.policy.max_identical_fraction; }));
    f.push_back(int_ref("study.consistency_splits",
                        [](Settings& s) -> int& { return s.consistency_splits; }));

    f.push_back(int_ref("sim.contents", [](Settings& s) -> int& { return s.simulation.contents; }));
    f.push_back(int_ref("sim.raters", [](Settings& s) -> int& { return s.simulation.raters; }));
    f.push_back(int_ref("sim.spam_raters", [](Settings& s) -> int& { return s.simulation.spam_raters; }));
    f.push_back(double_ref("sim.noise_sigma",
                           [](Settings& s) -> double& { return s.simulation.noise_sigma; }));
    f.push_back(double_ref("sim.gain_min", [](Settings& s) -> double& { return s.simulation.gain_min; }));
    f.push_back(double_ref("sim.gain_max", [](Settings& s) -> double& { return s.simulation.gain_max; }));
    f.push_back(double_ref("sim.bias_min", [](Settings& s) -> double& { return s.simulation.bias_min; }));
    f.push_back(double_ref("sim.bias_max", [](Settings& s) -> double& { return s.simulation.bias_max; }));
    f.push_back(double_ref("sim.truth_min", [](Settings& s) -> double& { return s.simulation.truth_min; }));
    f.push_back(double_ref("sim.truth_max", [](Settings& s) -> double& { return s.simulation.truth_max; }));
    f.push_back(double_ref("sim.spam_constant",
                           [](Settings& s) -> double& { return s.simulation.spam_constant; }));

    f.push_back(int_ref("map.grid", [](Settings& s) -> int& { return s.map_grid; }));
    f.push_back(double_ref("map.alpha", [](Settings& s) -> double& { return s.map_alpha; }));
    f.push_back(fixed_double_field("patch.max_overlap", 0.25));
    return f;
  }();
  return table;
}

}  // namespace

void apply_config(const KeyValueConfig& cfg, Settings& settings) {
  for (const auto& [key, value] : cfg.values()) {
    const Field* field = nullptr;
    for (const auto& f : fields())
      if (f.key == key) field = &f;
    if (!field) fail(ErrorCode::kConfig, "unknown config key '" + key + "'");
    try {
      field->set(settings, value);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kConfig) throw;
      fail(ErrorCode::kConfig, e.what());
    }
  }
}

std::string settings_to_text(const Settings& settings) {
  std::string out;
  for (const auto& f : fields()) out += f.key + " = " + f.get(settings) + "\n";
  return out;
}

void validate_settings(const Settings& s) {
  s.train.validate();
  s.model.validate();
  if (s.hit_size <= kRepeatsPerHit + kGoldsPerHit)
    fail(ErrorCode::kConfig, "study.hit_size must exceed repeats + golds");
  if (s.consistency_splits < 1) fail(ErrorCode::kConfig, "study.consistency_splits must be >= 1");
  if (!(s.policy.min_acceptance_rate >= 0.0 && s.policy.min_acceptance_rate <= 1.0))
    fail(ErrorCode::kConfig, "study.min_acceptance_rate must lie in [0, 1]");
  if (!(s.policy.max_identical_fraction >= 0.0 && s.policy.max_identical_fraction <= 1.0))
    fail(ErrorCode::kConfig, "study.max_identical_fraction must lie in [0, 1]");
  if (!(s.policy.repeat_threshold > 0.0)) fail(ErrorCode::kConfig, "study.repeat_threshold must be > 0");
  const auto& sim = s.simulation;
  if (sim.contents < 1 || sim.raters < 0 || sim.spam_raters < 0)
    fail(ErrorCode::kConfig, "simulation counts must be non-negative");
  if (sim.gain_min > sim.gain_max || sim.bias_min > sim.bias_max || sim.truth_min > sim.truth_max)
    fail(ErrorCode::kConfig, "simulation ranges must have min <= max");
  if (!(sim.noise_sigma >= 0.0)) fail(ErrorCode::kConfig, "sim.noise_sigma must be >= 0");
  if (s.map_grid < 1) fail(ErrorCode::kConfig, "map.grid must be >= 1");
  if (!(s.map_alpha >= 0.0 && s.map_alpha <= 1.0)) fail(ErrorCode::kConfig, "map.alpha must lie in [0, 1]");
}

}  // namespace ugciqa
