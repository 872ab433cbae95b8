// Command-line driver over the ugciqa C API.

#include <cstdio>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ugciqa/ugciqa.h"

namespace {

struct Options {
  std::map<std::string, std::string> values;
  std::vector<std::string> overrides;  // key=value settings
  std::string report_path;
  bool print_json = false;
};

void option(CLI::App* cmd, Options& opts, const std::string& flag, const std::string& key,
            const std::string& help, bool required = false) {
  auto* o = cmd->add_option_function<std::string>(
      flag, [&opts, key](const std::string& v) { opts.values[key] = v; }, help);
  if (required) o->required();
}

int run(const std::string& command, const Options& opts) {
  ugciqa_config_t* cfg = nullptr;
  if (ugciqa_config_create(&cfg) != UGCIQA_OK) return 2;
  int status = UGCIQA_OK;
  for (const auto& [k, v] : opts.values)
    if (status == UGCIQA_OK) status = ugciqa_config_set(cfg, k.c_str(), v.c_str());
  for (const auto& kv : opts.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) {
      std::fprintf(stderr, "error: --set expects key=value, got '%s'\n", kv.c_str());
      ugciqa_config_free(cfg);
      return 2;
    }
    if (status == UGCIQA_OK)
      status = ugciqa_config_set(cfg, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str());
  }
  char* report = nullptr;
  char* summary = nullptr;
  if (status == UGCIQA_OK) status = ugciqa_run_command(command.c_str(), cfg, &report, &summary);
  ugciqa_config_free(cfg);
  if (status != UGCIQA_OK && status != UGCIQA_PARTIAL) {
    std::fprintf(stderr, "error [%s]: %s\n", ugciqa_status_name(status), ugciqa_last_error());
    return 2;
  }
  std::printf("%s\n", summary);
  if (opts.print_json) std::printf("%s\n", report);
  int exit_code = status == UGCIQA_PARTIAL ? 1 : 0;
  if (!opts.report_path.empty()) {
    std::ofstream out(opts.report_path, std::ios::binary);
    out << report << '\n';
    if (!out) {
      std::fprintf(stderr, "error: cannot write report %s\n", opts.report_path.c_str());
      exit_code = 2;
    }
  }
  ugciqa_string_free(report);
  ugciqa_string_free(summary);
  return exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"No-reference image quality pipeline: dataset sampling, patch cropping, "
               "subjective study aggregation, model training and quality maps."};
  app.require_subcommand(0, 1);
  Options opts;
  bool show_defaults = false;
  app.add_flag("--show-defaults", show_defaults, "Print every settings key with its default");

  auto common = [&](CLI::App* cmd) {
    option(cmd, opts, "--seed", "seed", "Random seed recorded in every output");
    option(cmd, opts, "--config", "config", "Flat key = value settings file");
    option(cmd, opts, "--jobs", "jobs", "Worker threads for per-image work");
    cmd->add_option("--set", opts.overrides, "Settings override key=value (repeatable)");
    cmd->add_option("--report", opts.report_path, "Write the JSON report to this file");
    cmd->add_flag("--json", opts.print_json, "Print the JSON report");
  };

  auto* features = app.add_subcommand("features", "Compute the UGC feature table of a directory");
  option(features, opts, "--image-dir", "image_dir", "Directory of PNG/JPEG images", true);
  option(features, opts, "--faces", "faces", "CSV of id,face_count");
  option(features, opts, "--out", "out", "Output CSV", true);
  common(features);

  auto* sample = app.add_subcommand("sample", "Select k images matching target histograms");
  option(sample, opts, "--features", "features", "Feature CSV", true);
  option(sample, opts, "--targets", "targets", "Target histogram JSON", true);
  option(sample, opts, "-k,--k", "k", "Number of images to select", true);
  option(sample, opts, "--image-dir", "image_dir", "Directory the feature ids refer to");
  option(sample, opts, "--out", "out", "Output manifest", true);
  common(sample);

  auto* crop = app.add_subcommand("crop", "Add three patches to every manifest entry");
  option(crop, opts, "--manifest", "manifest", "Input manifest", true);
  option(crop, opts, "--out", "out", "Output manifest", true);
  common(crop);

  auto* study = app.add_subcommand("study", "Aggregate (or simulate) ratings into MOS");
  option(study, opts, "--ratings", "ratings", "Ratings CSV; simulate when omitted");
  option(study, opts, "--ratings-out", "ratings_out", "Write the (simulated) ratings here");
  option(study, opts, "--out", "out", "Output MOS CSV", true);
  common(study);

  auto* train = app.add_subcommand("train", "Train a quality model on a manifest");
  option(train, opts, "--manifest", "manifest", "Training manifest with MOS", true);
  option(train, opts, "--kind", "kind", "baseline | roipool | feedback");
  option(train, opts, "--out", "out", "Output checkpoint", true);
  option(train, opts, "--loss-out", "loss_out", "Loss curve CSV");
  common(train);

  auto* eval = app.add_subcommand("eval", "Report SRCC/LCC of a checkpoint on a manifest");
  option(eval, opts, "--checkpoint", "checkpoint", "Model checkpoint", true);
  option(eval, opts, "--manifest", "manifest", "Manifest with MOS", true);
  option(eval, opts, "--pad-side", "pad_side", "Override the padding side");
  common(eval);

  auto* map = app.add_subcommand("map", "Render a block quality map over an image");
  option(map, opts, "--checkpoint", "checkpoint", "RoIPool or Feedback checkpoint", true);
  option(map, opts, "--image", "image", "Input image", true);
  option(map, opts, "--out", "out", "Output PNG", true);
  option(map, opts, "--alpha", "alpha", "Blend weight of the colormap");
  option(map, opts, "--grid", "grid", "Blocks per side");
  option(map, opts, "--pad-side", "pad_side", "Override the padding side");
  option(map, opts, "--csv-out", "csv_out", "Write the block scores as CSV");
  common(map);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (show_defaults) {
    char* text = nullptr;
    if (ugciqa_default_settings(&text) != UGCIQA_OK) return 2;
    std::printf("%s", text);
    ugciqa_string_free(text);
    return 0;
  }
  for (auto* sub : app.get_subcommands()) return run(sub->get_name(), opts);
  std::fprintf(stderr, "%s", app.help().c_str());
  return 2;
}
