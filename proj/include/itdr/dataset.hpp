#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "itdr/image.hpp"
#include "itdr/randomization.hpp"
#include "itdr/render.hpp"
#include "itdr/rng.hpp"
#include "itdr/sample.hpp"

namespace itdr {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

struct DatasetConfig {
  Scenario scenario = Scenario::Reference;
  int count = 1;
  std::uint64_t master_seed = 0;
  int image_size = 64;
  RandomizationConfig randomization;
  bool overwrite = false;

  void validate() const {
    if (count < 1) throw std::invalid_argument("dataset: count must be >= 1");
    if (image_size < 8) throw std::invalid_argument("dataset: image_size must be >= 8");
    randomization.validate();
  }
};

inline DatasetConfig dataset_config_from_json(const nlohmann::json& j) {
  DatasetConfig cfg;
  if (j.contains("scenario")) cfg.scenario = scenario_from_string(j.at("scenario").get<std::string>());
  if (j.contains("count")) cfg.count = j.at("count").get<int>();
  if (j.contains("master_seed")) cfg.master_seed = j.at("master_seed").get<std::uint64_t>();
  if (j.contains("image_size")) cfg.image_size = j.at("image_size").get<int>();
  if (j.contains("randomization")) from_json_into(j.at("randomization"), cfg.randomization);
  if (j.contains("overwrite")) cfg.overwrite = j.at("overwrite").get<bool>();
  cfg.validate();
  return cfg;
}

inline nlohmann::json to_json(const DatasetConfig& cfg) {
  return {{"scenario", to_string(cfg.scenario)}, {"count", cfg.count},
          {"master_seed", cfg.master_seed},     {"image_size", cfg.image_size},
          {"randomization", to_json(cfg.randomization)}, {"overwrite", cfg.overwrite}};
}

struct DatasetItem {
  int index = 0;
  std::string image_path;  // relative to the dataset root
  Scenario scenario = Scenario::Reference;
  Pose2 pose;              // ground-truth label
  std::uint64_t seed = 0;  // per-item seed, derived from the master seed
};

struct Dataset {
  std::filesystem::path root;
  std::vector<DatasetItem> items;

  Image load_image(const DatasetItem& item) const { return read_ppm(root / item.image_path); }
};

inline constexpr const char* kManifestHeader = "index,image_path,scenario,x_m,y_m,theta_rad,mask,seed";

inline void write_manifest(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_manifest: cannot open '" + path.string() + "'");
  out << kManifestHeader << "\n";
  for (const DatasetItem& it : ds.items) {
    out << it.index << ',' << it.image_path << ',' << to_string(it.scenario) << ','
        << format_double(it.pose.x) << ',' << format_double(it.pose.y) << ','
        << format_double(it.pose.theta) << ',' << it.pose.mask.encode() << ',' << it.seed << "\n";
  }
  if (!out) throw std::runtime_error("write_manifest: write failed for '" + path.string() + "'");
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(field);
  return fields;
}

/// Reads manifest.csv under `dir` and checks that every image file exists.
inline Dataset load_dataset(const std::filesystem::path& dir) {
  const std::filesystem::path manifest = dir / "manifest.csv";
  std::ifstream in(manifest);
  if (!in) throw std::runtime_error("load_dataset: cannot open '" + manifest.string() + "'");
  Dataset ds;
  ds.root = dir;
  std::string line;
  if (!std::getline(in, line) || line != kManifestHeader)
    throw std::runtime_error("load_dataset: bad manifest header in '" + manifest.string() + "'");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 8)
      throw std::runtime_error("load_dataset: malformed row '" + line + "'");
    DatasetItem it;
    it.index = std::stoi(f[0]);
    it.image_path = f[1];
    it.scenario = scenario_from_string(f[2]);
    it.pose = Pose2(std::stod(f[3]), std::stod(f[4]), std::stod(f[5]), PoseMask::decode(f[6]));
    it.seed = std::stoull(f[7]);
    if (!std::filesystem::exists(ds.root / it.image_path))
      throw std::runtime_error("load_dataset: missing image '" + (ds.root / it.image_path).string() + "'");
    ds.items.push_back(std::move(it));
  }
  return ds;
}

/// Renders `count` randomized scenes to PPM files plus a CSV manifest.
/// Reproducible from the master seed: per-item seeds are counter-derived, so
/// the result is independent of render order and worker count.
inline Dataset generate_dataset(const DatasetConfig& cfg, const std::filesystem::path& out_dir) {
  cfg.validate();
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path manifest = out_dir / "manifest.csv";
  if (std::filesystem::exists(manifest) && !cfg.overwrite)
    throw std::runtime_error("generate_dataset: '" + manifest.string() +
                             "' already exists (set overwrite to replace it)");

  Dataset ds;
  ds.root = out_dir;
  ds.items.resize(cfg.count);
  parallel_for(static_cast<std::size_t>(cfg.count), [&](std::size_t i) {
    const std::uint64_t item_seed = derive_seed(cfg.master_seed, i);
    const Scene scene = sample_scene(cfg.scenario, derive_seed(item_seed, 1));
    const RandomizationParams params =
        sample_randomization(derive_seed(item_seed, 2), cfg.randomization);
    const Image img = render(scene, params, cfg.image_size);
    char name[32];
    std::snprintf(name, sizeof(name), "img_%06zu.ppm", i);
    write_ppm(img, out_dir / name);
    DatasetItem& it = ds.items[i];
    it.index = static_cast<int>(i);
    it.image_path = name;
    it.scenario = cfg.scenario;
    it.pose = scene_label(scene);
    it.seed = item_seed;
  });
  write_manifest(ds, manifest);
  return ds;
}

}  // namespace itdr
