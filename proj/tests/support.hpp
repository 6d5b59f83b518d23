#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>
#include <string>

#include "t2iopt/gateway.hpp"
#include "t2iopt/scripted.hpp"

namespace t2iopt::testing {

inline Gateway::Endpoint endpoint(std::shared_ptr<LanguageModel> model, int retries = 0) {
  RetryPolicy r;
  r.max_retries = retries;
  r.initial_backoff = std::chrono::milliseconds(0);
  return {std::move(model), r};
}

struct World {
  std::shared_ptr<ScriptedBackend> backend;
  Gateway gateway;

  explicit World(ScriptedWorldSpec spec, int retries = 0)
      : backend(std::make_shared<ScriptedBackend>(std::move(spec))) {
    RetryPolicy r;
    r.max_retries = retries;
    r.initial_backoff = std::chrono::milliseconds(0);
    gateway = Gateway({backend, r}, {backend, r}, {backend, r});
  }
};

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::filesystem::path fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::path(T2IOPT_TEST_TMP) / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline ImageArtifact feature_image(std::string id, const std::set<std::string>& features,
                                   std::string prompt_ref = "q") {
  ImageArtifact img;
  img.id = std::move(id);
  img.format = ImageFormat::FeatureSet;
  img.bytes = ScriptedWorld::serialize(features);
  img.prompt_ref = std::move(prompt_ref);
  return img;
}

}  // namespace t2iopt::testing
