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

#ifndef CONSEL_PROVENANCE_H_
#define CONSEL_PROVENANCE_H_

// Provenance sidecars: every stage output <out> gets <out>.prov.json with the
// tool version, the canonical stage configuration and its hash, and SHA-256
// digests of every input and output file. Files are referenced by basename
// and nothing time- or host-dependent is recorded, so identical runs give
// identical sidecars.

#include <json.hpp>
#include <string>
#include <vector>

namespace consel {

inline constexpr const char* kToolName = "consel";
inline constexpr const char* kToolVersion = "1.0.0";

// SHA-256 of the compact dump of `config` (keys in insertion order).
std::string ConfigHash(const nlohmann::ordered_json& config);

nlohmann::ordered_json MakeProvenance(
    const std::string& stage, const nlohmann::ordered_json& config,
    const std::vector<std::string>& inputs,
    const std::vector<std::string>& outputs);

// Writes MakeProvenance(...) plus optional `stats` to `sidecar_path`.
void WriteProvenance(const std::string& sidecar_path, const std::string& stage,
                     const nlohmann::ordered_json& config,
                     const std::vector<std::string>& inputs,
                     const std::vector<std::string>& outputs,
                     const nlohmann::ordered_json& stats = {});

}  // namespace consel

#endif  // CONSEL_PROVENANCE_H_
