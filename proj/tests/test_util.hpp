#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "itdr/geometry.hpp"
#include "itdr/rng.hpp"

namespace itdr::test {

/// Unique scratch directory, removed when the guard dies.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("itdr_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline RigidTransform2 random_transform(Rng& rng, double max_translation = 2.0) {
  return {rng.uniform(-kPi, kPi), rng.uniform(-max_translation, max_translation),
          rng.uniform(-max_translation, max_translation)};
}

inline Pose2 random_pose(Rng& rng, double span = 2.0) {
  return {rng.uniform(-span, span), rng.uniform(-span, span), rng.uniform(-kPi, kPi)};
}

}  // namespace itdr::test
