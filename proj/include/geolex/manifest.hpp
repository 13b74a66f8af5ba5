// Copyright 2026 The Geolex Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <string>

#include <nlohmann/json.hpp>

#include "geolex/error.hpp"
#include "geolex/hash.hpp"
#include "geolex/version.hpp"

namespace geolex {

// Reproducibility record for one pipeline stage. Contains only inputs that
// are stable across identical runs; wall-clock timing goes to a sidecar file
// so manifests from identical runs compare byte for byte.
struct RunManifest {
  std::string stage;
  std::string tool_version = kVersion;
  nlohmann::json config = nlohmann::json::object();
  std::map<std::string, std::string> inputs;   // path as configured -> sha256
  std::map<std::string, std::string> outputs;  // basename -> sha256

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["stage"] = stage;
    j["tool_version"] = tool_version;
    j["config"] = config;
    j["inputs"] = inputs;
    j["outputs"] = outputs;
    return j;
  }

  static RunManifest from_json(const nlohmann::json& j) {
    RunManifest m;
    try {
      m.stage = j.at("stage").get<std::string>();
      m.tool_version = j.at("tool_version").get<std::string>();
      m.config = j.at("config");
      for (const auto& [k, v] : j.at("inputs").items())
        m.inputs[k] = v.get<std::string>();
      for (const auto& [k, v] : j.at("outputs").items())
        m.outputs[k] = v.get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw InputError(std::string("bad manifest: ") + e.what());
    }
    return m;
  }
};

inline std::string manifest_filename(const std::string& stage) {
  return "manifest_" + stage + ".json";
}

inline void write_manifest(const std::string& dir, const RunManifest& m) {
  const auto path = std::filesystem::path(dir) / manifest_filename(m.stage);
  std::ofstream os(path);
  if (!os) throw InputError("cannot write manifest: " + path.string());
  os << m.to_json().dump(2) << "\n";
}

inline RunManifest read_manifest(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot open manifest: " + path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InputError("cannot parse manifest " + path + ": " + e.what());
  }
  return RunManifest::from_json(j);
}

// Checks an artifact against the manifest of the stage that produced it, when
// that manifest exists next to the artifact. A silently edited artifact
// fails; a missing manifest passes (the file did not come from a stage).
inline void verify_against_manifests(const std::string& artifact_path) {
  namespace fs = std::filesystem;
  const fs::path artifact(artifact_path);
  const fs::path dir = artifact.has_parent_path() ? artifact.parent_path() : fs::path(".");
  const std::string base = artifact.filename().string();
  if (!fs::exists(dir)) return;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("manifest_", 0) != 0 || name.find(".json") == std::string::npos)
      continue;
    RunManifest m;
    try {
      m = read_manifest(entry.path().string());
    } catch (const Error&) {
      continue;  // unrelated json file
    }
    auto it = m.outputs.find(base);
    if (it == m.outputs.end()) continue;
    const std::string actual = sha256_file(artifact_path);
    if (actual != it->second)
      throw InputError("artifact " + artifact_path + " does not match the digest in " +
                       entry.path().string() + " (stage " + m.stage +
                       "); refusing modified input");
  }
}

// Timing sidecar, intentionally outside the manifest.
inline void write_timing_sidecar(const std::string& dir, const std::string& stage,
                                 int64_t wall_ms) {
  nlohmann::json j;
  j["stage"] = stage;
  j["wall_ms"] = wall_ms;
  const auto path = std::filesystem::path(dir) / ("timings_" + stage + ".json");
  std::ofstream os(path);
  if (!os) throw InputError("cannot write timing sidecar: " + path.string());
  os << j.dump(2) << "\n";
}

}  // namespace geolex
