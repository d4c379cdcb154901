// Copyright 2026 The nextpoi Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "nextpoi/common.hpp"
#include "nextpoi/model.hpp"
#include "nextpoi/pretrain.hpp"

namespace nextpoi {

// Shortest decimal form that parses back to the same double.
std::string format_double(double value);

// Text table: a "<count> <dim>" header line, then "<id> <v1> ... <vd>" per row.
void write_embedding_table(std::ostream& out, const EmbeddingTable& table,
                           std::span<const std::string> ids);
EmbeddingTable read_embedding_table(std::istream& in, std::vector<std::string>* ids = nullptr);

void save_embedding_table(const std::filesystem::path& path, const EmbeddingTable& table,
                          std::span<const std::string> ids);
EmbeddingTable load_embedding_table(const std::filesystem::path& path,
                                    std::vector<std::string>* ids = nullptr);

// One walk per line, original POI ids separated by single spaces.
void save_walks(const std::filesystem::path& path, const std::vector<Walk>& walks,
                std::span<const std::string> poi_ids);

// Single-file model archive: a key=value manifest section followed by every
// named tensor in the embedding-table format and the meta-data memberships.
void write_model(std::ostream& out, const Model& model);
Model read_model(std::istream& in);

void save_model(const std::filesystem::path& path, const Model& model);
Model load_model(const std::filesystem::path& path);

}  // namespace nextpoi
