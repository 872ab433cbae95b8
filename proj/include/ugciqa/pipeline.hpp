#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ugciqa/config.hpp"
#include "ugciqa/image.hpp"

namespace ugciqa {

inline constexpr int kSchemaVersion = 1;

/// "# ugciqa schema_version=1 seed=<seed>": first line of every CSV we write.
std::string schema_comment(std::uint64_t seed);

struct ManifestPatch {
  std::string parent_id;
  double scale = 0.0;
  Rect rect;
  std::optional<double> mos;
};

struct ManifestEntry {
  std::string id;
  std::string image_path;  // relative paths are resolved against the manifest directory
  std::optional<double> mos;
  std::vector<ManifestPatch> patches;
};

struct Manifest {
  int schema_version = kSchemaVersion;
  std::uint64_t seed = 0;
  std::vector<ManifestEntry> entries;
  std::string report_json = "{}";  // command-specific summary object
};

/// Parses and validates (unique ids, schema version, rect sanity). Image
/// existence is checked by read_manifest, relative to base_dir.
Manifest parse_manifest(const std::string& text);
std::string manifest_to_json(const Manifest& manifest);
/// Reads a manifest and checks that every referenced image exists.
Manifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const Manifest& manifest);
std::filesystem::path resolve_image_path(const std::filesystem::path& manifest_path,
                                         const std::string& image_path);

/// Runs fn(i) for i in [0, n) on up to `jobs` threads (jobs <= 1 runs inline).
/// Indices are claimed in order; the first exception is rethrown after all
/// workers finish.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

enum ExitCode : int { kExitOk = 0, kExitPartial = 1, kExitInvalid = 2 };

struct CommandResult {
  int exit_code = kExitOk;
  std::string report_json;  // summary object, always contains schema_version and seed
  std::string summary;      // short human-readable lines
};

/// Command options: command-specific keys (paths, k, kind, ...) plus "seed",
/// "jobs", "config" (path of a key-value settings file) and any settings key
/// accepted by apply_config. Settings keys given directly override the file.
///
///   features: image_dir, out, [faces]
///   sample:   features, targets, k, out, [image_dir]
///   crop:     manifest, out
///   study:    out, [ratings], [ratings_out]
///   train:    manifest, out, [kind], [loss_out]
///   eval:     checkpoint, manifest, [pad_side]
///   map:      checkpoint, image, out, [alpha], [grid], [pad_side], [csv_out]
///
/// Invalid invocations (unknown command or option, missing or malformed
/// values) throw ugciqa::Error; per-item failures are reported with exit code 1.
CommandResult run_command(const std::string& command, const KeyValueConfig& options);

/// Names accepted by run_command.
const std::vector<std::string>& command_names();

}  // namespace ugciqa
