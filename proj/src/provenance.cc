// Copyright 2026 The Authors.
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

#include "consel/provenance.h"

#include <filesystem>

#include "consel/digest.h"
#include "consel/wire_format.h"

namespace consel {
namespace {

nlohmann::ordered_json Digests(const std::vector<std::string>& paths) {
  nlohmann::ordered_json list = nlohmann::ordered_json::array();
  for (const std::string& p : paths) {
    list.push_back({{"name", std::filesystem::path(p).filename().string()},
                    {"sha256", FileSha256(p)}});
  }
  return list;
}

}  // namespace

std::string ConfigHash(const nlohmann::ordered_json& config) {
  return Sha256Hex(config.dump());
}

nlohmann::ordered_json MakeProvenance(const std::string& stage,
                                      const nlohmann::ordered_json& config,
                                      const std::vector<std::string>& inputs,
                                      const std::vector<std::string>& outputs) {
  nlohmann::ordered_json doc;
  doc["tool"] = kToolName;
  doc["version"] = kToolVersion;
  doc["stage"] = stage;
  doc["config"] = config;
  doc["config_hash"] = ConfigHash(config);
  doc["inputs"] = Digests(inputs);
  doc["outputs"] = Digests(outputs);
  return doc;
}

void WriteProvenance(const std::string& sidecar_path, const std::string& stage,
                     const nlohmann::ordered_json& config,
                     const std::vector<std::string>& inputs,
                     const std::vector<std::string>& outputs,
                     const nlohmann::ordered_json& stats) {
  nlohmann::ordered_json doc = MakeProvenance(stage, config, inputs, outputs);
  if (!stats.is_null()) doc["stats"] = stats;
  WriteFileBytes(sidecar_path, doc.dump(2) + "\n");
}

}  // namespace consel
