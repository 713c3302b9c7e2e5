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

#include "rispos/config.hpp"

#include <fstream>
#include <limits>
#include <sstream>

namespace rispos
{

std::string read_text_file(const std::filesystem::path &path)
{
    std::ifstream is(path);
    if (!is)
        throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

namespace
{

std::string axis_name(Axis a)
{
    switch (a)
    {
    case Axis::X:
        return "X";
    case Axis::Y:
        return "Y";
    case Axis::Z:
        return "Z";
    }
    return "?";
}

Axis parse_axis(const std::string &s, const std::string &key)
{
    if (s == "X" || s == "x")
        return Axis::X;
    if (s == "Y" || s == "y")
        return Axis::Y;
    if (s == "Z" || s == "z")
        return Axis::Z;
    throw ConfigError("key '" + key + "': axis must be X, Y or Z, got '" + s + "'");
}

std::string position_string(const Position3D &p)
{
    return format_double(p.x) + " " + format_double(p.y) + " " + format_double(p.z);
}

void read_position(KeyValues &kv, const std::string &key, Position3D &p)
{
    if (!kv.has(key))
        return;
    const auto v = kv.get_doubles(key, 3);
    p = {v[0], v[1], v[2]};
}

template <typename F>
void maybe(KeyValues &kv, const std::string &key, F &&apply)
{
    if (kv.has(key))
        apply(key);
}

int checked_int(std::int64_t v, const std::string &key)
{
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
        throw ConfigError("key '" + key + "': value out of range");
    return static_cast<int>(v);
}

void write_array(KeyValues &kv, const std::string &prefix, const UpaConfig &a)
{
    kv.set(prefix + ".count_a", std::to_string(a.count_a));
    kv.set(prefix + ".count_b", std::to_string(a.count_b));
    kv.set(prefix + ".spacing", format_double(a.spacing));
    kv.set(prefix + ".center", position_string(a.center));
    kv.set(prefix + ".axis_a", axis_name(a.axis_a));
    kv.set(prefix + ".axis_b", axis_name(a.axis_b));
}

void read_array(KeyValues &kv, const std::string &prefix, UpaConfig &a)
{
    maybe(kv, prefix + ".count_a", [&](const std::string &k) { a.count_a = checked_int(kv.get_int(k), k); });
    maybe(kv, prefix + ".count_b", [&](const std::string &k) { a.count_b = checked_int(kv.get_int(k), k); });
    maybe(kv, prefix + ".spacing", [&](const std::string &k) { a.spacing = kv.get_double(k); });
    read_position(kv, prefix + ".center", a.center);
    maybe(kv, prefix + ".axis_a", [&](const std::string &k) { a.axis_a = parse_axis(kv.raw(k), k); });
    maybe(kv, prefix + ".axis_b", [&](const std::string &k) { a.axis_b = parse_axis(kv.raw(k), k); });
}

} // namespace

void write_scene(KeyValues &kv, const SceneConfig &s)
{
    kv.set("wavelength", format_double(s.wavelength));
    write_array(kv, "ap", s.ap);
    write_array(kv, "ris", s.ris);
    kv.set("n_paths_mu_ris", std::to_string(s.n_paths_mu_ris));
    kv.set("n_paths_ris_ap", std::to_string(s.n_paths_ris_ap));
    kv.set("scatter.lo", position_string(s.scatter_bounds.lo));
    kv.set("scatter.hi", position_string(s.scatter_bounds.hi));
    kv.set("tx_power_dbm", format_double(s.tx_power_dbm));
    kv.set("noise_power_dbm", format_double(s.noise_power_dbm));
    kv.set("pilot_length", std::to_string(s.pilot_length));
    kv.set("rng_seed", std::to_string(s.rng_seed));
}

void read_scene(KeyValues &kv, SceneConfig &s)
{
    maybe(kv, "wavelength", [&](const std::string &k) { s.wavelength = kv.get_double(k); });
    read_array(kv, "ap", s.ap);
    read_array(kv, "ris", s.ris);
    maybe(kv, "n_paths_mu_ris", [&](const std::string &k) { s.n_paths_mu_ris = checked_int(kv.get_int(k), k); });
    maybe(kv, "n_paths_ris_ap", [&](const std::string &k) { s.n_paths_ris_ap = checked_int(kv.get_int(k), k); });
    read_position(kv, "scatter.lo", s.scatter_bounds.lo);
    read_position(kv, "scatter.hi", s.scatter_bounds.hi);
    maybe(kv, "tx_power_dbm", [&](const std::string &k) { s.tx_power_dbm = kv.get_double(k); });
    maybe(kv, "noise_power_dbm", [&](const std::string &k) { s.noise_power_dbm = kv.get_double(k); });
    maybe(kv, "pilot_length", [&](const std::string &k) { s.pilot_length = checked_int(kv.get_int(k), k); });
    maybe(kv, "rng_seed", [&](const std::string &k) { s.rng_seed = kv.get_uint(k); });
    s.validate();
}

void write_grid(KeyValues &kv, const GridArgs &g)
{
    kv.set("grid.length", format_double(g.length));
    kv.set("grid.width", format_double(g.width));
    kv.set("grid.spacing", format_double(g.spacing));
    std::string heights;
    for (std::size_t i = 0; i < g.heights.size(); ++i)
        heights += (i ? " " : "") + format_double(g.heights[i]);
    kv.set("grid.heights", heights);
    kv.set("grid.origin", position_string(g.origin));
}

void read_grid(KeyValues &kv, GridArgs &g)
{
    maybe(kv, "grid.length", [&](const std::string &k) { g.length = kv.get_double(k); });
    maybe(kv, "grid.width", [&](const std::string &k) { g.width = kv.get_double(k); });
    maybe(kv, "grid.spacing", [&](const std::string &k) { g.spacing = kv.get_double(k); });
    maybe(kv, "grid.heights", [&](const std::string &k) { g.heights = kv.get_doubles(k); });
    read_position(kv, "grid.origin", g.origin);
    if (!(g.spacing > 0.0) || g.length < 0.0 || g.width < 0.0 || g.heights.empty())
        throw ConfigError("grid: spacing must be > 0, extents >= 0 and at least one height given");
}

void read_network(KeyValues &kv, NetworkSpec &n)
{
    maybe(kv, "network.variant", [&](const std::string &k) { n.variant = parse_variant(kv.raw(k)); });
    maybe(kv, "network.blocks", [&](const std::string &k) { n.block_count = checked_int(kv.get_int(k), k); });
    maybe(kv, "network.base_channels",
          [&](const std::string &k) { n.base_channels = checked_int(kv.get_int(k), k); });
    maybe(kv, "network.multipliers", [&](const std::string &k) {
        n.multipliers.clear();
        for (auto v : kv.get_ints(k))
            n.multipliers.push_back(checked_int(v, k));
    });
}

void read_train(KeyValues &kv, TrainConfig &t)
{
    maybe(kv, "train.epochs", [&](const std::string &k) { t.epochs = checked_int(kv.get_int(k), k); });
    maybe(kv, "train.batch_size", [&](const std::string &k) { t.batch_size = checked_int(kv.get_int(k), k); });
    maybe(kv, "train.learning_rate", [&](const std::string &k) { t.adam.learning_rate = kv.get_double(k); });
    maybe(kv, "train.beta1", [&](const std::string &k) { t.adam.beta1 = kv.get_double(k); });
    maybe(kv, "train.beta2", [&](const std::string &k) { t.adam.beta2 = kv.get_double(k); });
    maybe(kv, "train.epsilon", [&](const std::string &k) { t.adam.epsilon = kv.get_double(k); });
    maybe(kv, "train.seed", [&](const std::string &k) { t.seed = kv.get_uint(k); });
    maybe(kv, "train.eval_every", [&](const std::string &k) { t.eval_every = checked_int(kv.get_int(k), k); });
    t.validate();
}

ProjectConfig parse_config(std::string_view text, const std::string &origin)
{
    KeyValues kv = KeyValues::parse(text, origin);
    ProjectConfig cfg;
    read_scene(kv, cfg.scene);
    read_grid(kv, cfg.grid);
    if (kv.has("split.fraction"))
        cfg.split.fraction = kv.get_double("split.fraction");
    if (kv.has("split.seed"))
        cfg.split.seed = kv.get_uint("split.seed");
    read_network(kv, cfg.network);
    read_train(kv, cfg.train);
    kv.require_all_consumed();
    return cfg;
}

ProjectConfig load_config(const std::filesystem::path &path)
{
    return parse_config(read_text_file(path), path.string());
}

} // namespace rispos
