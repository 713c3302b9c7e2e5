// SPDX-License-Identifier: Apache-2.0
//
// rispos - RIS-aided fingerprint positioning toolkit
// Copyright (C) 2026 The rispos authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef RISPOS_CONFIG_HPP
#define RISPOS_CONFIG_HPP

#include "rispos/dataset.hpp"
#include "rispos/geometry.hpp"
#include "rispos/keyvalue.hpp"
#include "rispos/network.hpp"
#include "rispos/train.hpp"

#include <filesystem>

namespace rispos
{

// Readers override only the keys present, leaving other fields untouched.
void write_scene(KeyValues &kv, const SceneConfig &scene);
void read_scene(KeyValues &kv, SceneConfig &scene);
void write_grid(KeyValues &kv, const GridArgs &grid);
void read_grid(KeyValues &kv, GridArgs &grid);
void read_network(KeyValues &kv, NetworkSpec &spec);
void read_train(KeyValues &kv, TrainConfig &train);

struct SplitArgs
{
    double fraction = 0.8;
    std::uint64_t seed = 0;
};

struct ProjectConfig
{
    SceneConfig scene;
    GridArgs grid;
    SplitArgs split;
    NetworkSpec network;
    TrainConfig train;
};

// Unknown keys are errors.
ProjectConfig parse_config(std::string_view text, const std::string &origin = "<config>");
ProjectConfig load_config(const std::filesystem::path &path);

std::string read_text_file(const std::filesystem::path &path);

} // namespace rispos

#endif
