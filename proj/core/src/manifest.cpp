#include "sparq/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <stdexcept>

namespace sparq {
namespace {

[[noreturn]] void bad(const std::string& what) {
  throw std::invalid_argument("manifest: " + what);
}

ManifestEntry parse_entry(const nlohmann::json& j) {
  if (!j.is_object()) bad("entries must be objects");
  ManifestEntry e;
  for (const char* key : {"name", "path", "role", "layer", "shape"}) {
    if (!j.contains(key)) bad(std::string("entry lacks required field '") + key + "'");
  }
  e.name = j.at("name").get<std::string>();
  e.path = j.at("path").get<std::string>();
  const auto role = j.at("role").get<std::string>();
  if (role == "activation") {
    e.role = TensorRole::Activation;
  } else if (role == "weight") {
    e.role = TensorRole::Weight;
  } else {
    bad("entry '" + e.name + "' has unknown role '" + role + "'");
  }
  const auto& layer = j.at("layer");
  if (layer.is_number_integer()) {
    e.layer = std::to_string(layer.get<long long>());
    e.layer_is_integer = true;
  } else if (layer.is_string()) {
    e.layer = layer.get<std::string>();
  } else {
    bad("entry '" + e.name + "' has a non-string, non-integer layer");
  }
  e.shape = j.at("shape").get<Shape>();
  if (j.contains("max_abs") && !j.at("max_abs").is_null()) {
    e.max_abs = j.at("max_abs").get<double>();
  }
  if (j.contains("scale") && !j.at("scale").is_null()) {
    const auto& s = j.at("scale");
    e.scale = s.is_array() ? s.get<std::vector<double>>() : std::vector<double>{s.get<double>()};
  }
  if (j.contains("exempt")) e.exempt = j.at("exempt").get<bool>();
  if (j.contains("stride")) e.stride = j.at("stride").get<int>();
  if (j.contains("padding")) e.padding = j.at("padding").get<int>();
  return e;
}

}  // namespace

const char* role_name(TensorRole r) noexcept {
  return r == TensorRole::Weight ? "weight" : "activation";
}

Manifest Manifest::from_json(const nlohmann::json& j, std::filesystem::path base_dir) {
  if (!j.is_object() || !j.contains("entries") || !j.at("entries").is_array()) {
    bad("expected an object with an 'entries' array");
  }
  Manifest m;
  m.base_dir = std::move(base_dir);
  if (j.contains("model")) m.model = j.at("model").get<std::string>();
  std::set<std::string> names;
  try {
    for (const auto& item : j.at("entries")) {
      auto e = parse_entry(item);
      if (!names.insert(e.name).second) bad("duplicate entry name '" + e.name + "'");
      m.entries.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& ex) {
    bad(ex.what());
  }
  return m;
}

Manifest Manifest::load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::invalid_argument("manifest: cannot open " + file.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& ex) {
    bad(file.string() + ": " + ex.what());
  }
  auto m = from_json(j, file.parent_path());
  for (const auto& e : m.entries) {
    if (!std::filesystem::exists(m.resolve(e))) {
      bad("entry '" + e.name + "' references missing file " + m.resolve(e).string());
    }
  }
  return m;
}

nlohmann::json Manifest::to_json() const {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : this->entries) {
    nlohmann::json j{{"name", e.name},
                     {"path", e.path.generic_string()},
                     {"role", role_name(e.role)},
                     {"shape", e.shape}};
    if (e.layer_is_integer) {
      j["layer"] = std::stoll(e.layer);
    } else {
      j["layer"] = e.layer;
    }
    if (e.max_abs) j["max_abs"] = *e.max_abs;
    if (!e.scale.empty()) {
      if (e.role == TensorRole::Activation && e.scale.size() == 1) {
        j["scale"] = e.scale.front();
      } else {
        j["scale"] = e.scale;
      }
    }
    if (e.exempt) j["exempt"] = true;
    if (e.stride) j["stride"] = *e.stride;
    if (e.padding) j["padding"] = *e.padding;
    entries.push_back(std::move(j));
  }
  return {{"model", model}, {"entries", std::move(entries)}};
}

void Manifest::save(const std::filesystem::path& file) const {
  std::ofstream out(file, std::ios::trunc);
  if (!out) throw std::runtime_error("manifest: cannot write " + file.string());
  out << to_json().dump(2) << '\n';
}

std::filesystem::path Manifest::resolve(const ManifestEntry& e) const {
  return e.path.is_absolute() ? e.path : base_dir / e.path;
}

const ManifestEntry* Manifest::find(std::string_view name) const {
  for (const auto& e : entries) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

std::pair<const ManifestEntry*, const ManifestEntry*> Manifest::layer_pair(
    std::string_view layer) const {
  const ManifestEntry* act = nullptr;
  const ManifestEntry* wgt = nullptr;
  for (const auto& e : entries) {
    if (e.layer != layer) continue;
    auto& slot = e.role == TensorRole::Activation ? act : wgt;
    if (slot) bad("layer '" + std::string(layer) + "' has more than one " + role_name(e.role));
    slot = &e;
  }
  if (!act || !wgt) {
    bad("layer '" + std::string(layer) + "' needs one activation and one weight entry");
  }
  return {act, wgt};
}

std::vector<std::string> Manifest::layers() const {
  std::vector<std::string> out;
  for (const auto& e : entries) {
    if (std::find(out.begin(), out.end(), e.layer) == out.end()) out.push_back(e.layer);
  }
  return out;
}

}  // namespace sparq
