#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sparq/tensor.hpp"

namespace sparq {

enum class TensorRole : std::uint8_t { Activation, Weight };

/// One tensor file listed in a manifest.
///
/// JSON fields: name, path, role ("activation" | "weight"), layer (string or
/// integer), shape, and optionally max_abs (calibrated activation maximum),
/// scale (number for activations, per-kernel array for weights), exempt
/// (layer runs the exact INT8 path), stride and padding (convolution
/// lowering, weight entries).
struct ManifestEntry {
  std::string name;
  std::filesystem::path path;  // as written; relative paths resolve against the manifest
  TensorRole role = TensorRole::Activation;
  std::string layer;
  bool layer_is_integer = false;
  Shape shape;
  std::optional<double> max_abs;
  std::vector<double> scale;
  bool exempt = false;
  std::optional<int> stride;
  std::optional<int> padding;
};

struct Manifest {
  std::string model;
  std::vector<ManifestEntry> entries;
  std::filesystem::path base_dir;

  /// Parses and validates (unique names, known roles, well-formed fields).
  /// Throws std::invalid_argument.
  static Manifest from_json(const nlohmann::json& j, std::filesystem::path base_dir = {});

  /// Reads the file, validates it, and checks every referenced file exists.
  static Manifest load(const std::filesystem::path& file);

  nlohmann::json to_json() const;
  void save(const std::filesystem::path& file) const;

  std::filesystem::path resolve(const ManifestEntry& e) const;
  const ManifestEntry* find(std::string_view name) const;
  /// The activation and weight entries of `layer`; throws if either is missing.
  std::pair<const ManifestEntry*, const ManifestEntry*> layer_pair(std::string_view layer) const;
  std::vector<std::string> layers() const;
};

const char* role_name(TensorRole r) noexcept;

}  // namespace sparq
