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

// Command-line front end: generate, train, eval, gradcheck.

#include "rispos/config.hpp"
#include "rispos/gradcheck.hpp"
#include "rispos/train.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cstdio>
#include <iostream>
#include <optional>

using namespace rispos;

namespace
{

std::string fixed_decimal(double v)
{
    char buf[512];
    const auto r = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed);
    return std::string(buf, r.ptr);
}

int cmd_generate(const std::string &config_path, const std::string &out_dir)
{
    const ProjectConfig cfg = load_config(config_path);
    const auto built = build_dataset(cfg.scene, cfg.grid, cfg.split.fraction, cfg.split.seed);
    serialize(built.train, built.test, built.manifest, out_dir);
    std::cerr << "wrote " << built.manifest.sample_count << " samples (" << built.manifest.train_count << " train) to "
              << out_dir << "\n";
    return 0;
}

struct TrainArgs
{
    std::string data, spec = "rcnr", out, metrics, config;
    int blocks = 4;
    std::optional<int> epochs;
    std::optional<std::uint64_t> seed;
    bool quiet = false;
};

int cmd_train(const TrainArgs &a)
{
    ProjectConfig cfg;
    if (!a.config.empty())
        cfg = load_config(a.config);
    if (a.epochs)
        cfg.train.epochs = *a.epochs;
    if (a.seed)
        cfg.train.seed = *a.seed;
    cfg.train.validate();

    const LoadedDataset data = deserialize(a.data);
    NetworkSpec spec = cfg.network;
    spec.variant = parse_variant(a.spec);
    spec.block_count = a.blocks;
    spec.input_rows = data.manifest.rows;
    spec.input_cols = data.manifest.cols;

    Model<float> model(spec, cfg.train.seed);
    const auto history = train(model, data.train, data.test, data.manifest.label_map, cfg.train, [&](const MetricsRow &r) {
        if (!a.quiet)
            std::cerr << "epoch " << r.epoch << "  train " << format_double(r.train_loss) << "  test "
                      << format_double(r.test_loss) << "  rmse " << fixed_decimal(r.test_rmse_m) << " m\n";
    });
    save_checkpoint(model, a.out);
    export_metrics(history, a.metrics);
    return 0;
}

int cmd_eval(const std::string &data_dir, const std::string &ckpt)
{
    const LoadedDataset data = deserialize(data_dir);
    Model<float> model = load_checkpoint(ckpt);
    if (model.spec().input_rows != data.manifest.rows || model.spec().input_cols != data.manifest.cols)
        throw ShapeError("checkpoint expects " + std::to_string(model.spec().input_rows) + "x" +
                         std::to_string(model.spec().input_cols) + " inputs, dataset has " +
                         std::to_string(data.manifest.rows) + "x" + std::to_string(data.manifest.cols));
    std::cout << fixed_decimal(evaluate_rmse(model, data.test, data.manifest.label_map)) << "\n";
    return 0;
}

int cmd_gradcheck(std::uint64_t seed)
{
    bool ok = true;
    for (const auto &c : run_gradcheck_suite(seed))
    {
        std::printf("%-24s max_rel_error %.3e  (tol %.0e, %zu checked, %zu kink skips, worst %s: %.6e vs %.6e)  %s\n",
                    c.name.c_str(), c.result.max_rel_error, c.tolerance, c.result.checked, c.result.skipped,
                    c.result.worst.c_str(), c.result.worst_analytic, c.result.worst_numeric, c.passed() ? "ok" : "FAIL");
        ok = ok && c.passed();
    }
    if (!ok)
        std::fprintf(stderr, "gradcheck: tolerance exceeded\n");
    return ok ? 0 : 1;
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"rispos: RIS-aided fingerprint positioning"};
    app.require_subcommand(1);

    std::string gen_config, gen_out;
    auto *gen = app.add_subcommand("generate", "Synthesize a fingerprint dataset");
    gen->add_option("--config", gen_config, "Config file (key = value)")->required();
    gen->add_option("--out", gen_out, "Output dataset directory")->required();

    TrainArgs ta;
    auto *tr = app.add_subcommand("train", "Train a network on a dataset");
    tr->add_option("--data", ta.data, "Dataset directory")->required();
    tr->add_option("--spec", ta.spec, "Network variant")->check(CLI::IsMember({"rcnr", "cnn"}))->required();
    tr->add_option("--blocks", ta.blocks, "Number of RC / plain blocks")->check(CLI::Range(1, 8))->required();
    tr->add_option("--out", ta.out, "Checkpoint file")->required();
    tr->add_option("--metrics", ta.metrics, "Metrics CSV")->required();
    tr->add_option("--config", ta.config, "Config file for network.* and train.* keys");
    tr->add_option("--epochs", ta.epochs, "Override train.epochs");
    tr->add_option("--seed", ta.seed, "Override train.seed");
    tr->add_flag("--quiet", ta.quiet, "No per-epoch progress");

    std::string ev_data, ev_ckpt;
    auto *ev = app.add_subcommand("eval", "Print test RMSE in meters");
    ev->add_option("--data", ev_data, "Dataset directory")->required();
    ev->add_option("--ckpt", ev_ckpt, "Checkpoint file")->required();

    std::uint64_t gc_seed = 0;
    auto *gc = app.add_subcommand("gradcheck", "Finite-difference check of every layer and the full network");
    gc->add_option("--seed", gc_seed, "Random seed");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::CallForHelp &e)
    {
        return app.exit(e);
    }
    catch (const CLI::ParseError &e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    try
    {
        if (gen->parsed())
            return cmd_generate(gen_config, gen_out);
        if (tr->parsed())
            return cmd_train(ta);
        if (ev->parsed())
            return cmd_eval(ev_data, ev_ckpt);
        if (gc->parsed())
            return cmd_gradcheck(gc_seed);
    }
    catch (const std::exception &e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
