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

// Acceptance runner: one PASS/FAIL line per criterion on stdout, progress and
// per-seed details on stderr. Artifacts go under --workdir.

#include "oracles.hpp"
#include "rispos/config.hpp"
#include "rispos/gradcheck.hpp"
#include "rispos/train.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

using namespace rispos;
namespace fs = std::filesystem;

namespace
{

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char *f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof(buf), f, args...);
    return buf;
}

struct Outcome
{
    bool pass = false;
    std::string detail;
};

std::string slurp(const fs::path &p)
{
    std::ifstream is(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

// ---------------------------------------------------------------- 1, 2

Outcome channel_oracles()
{
    const auto t0 = Clock::now();
    Rng rng = make_rng(2024);
    const double lambda = 0.0107;
    double worst[4] = {0, 0, 0, 0};
    const int instances = 200;
    for (int i = 0; i < instances; ++i)
    {
        const UpaConfig ris = oracle::random_array(rng, 64, lambda);
        const UpaConfig ap = oracle::random_array(rng, 64, lambda);
        const auto ang = oracle::random_angles(rng);
        worst[0] = std::max(worst[0], oracle::rel_error(oracle::upa(ris, ang, lambda), upa_response(ris, ang, lambda)));

        std::vector<MuRisPath> mu(static_cast<std::size_t>(1 + i % 5));
        for (auto &p : mu)
            p = {oracle::random_gain(rng), oracle::random_angles(rng)};
        const ComplexVector g = mu_ris_channel(mu, ris, lambda);
        worst[1] = std::max(worst[1], oracle::rel_error(oracle::mu_ris(mu, ris, lambda), g));

        std::vector<RisApPath> ra(static_cast<std::size_t>(1 + i % 7));
        for (auto &p : ra)
            p = {oracle::random_gain(rng), oracle::random_angles(rng), oracle::random_angles(rng)};
        const ComplexMatrix H = ris_ap_channel(ra, ris, ap, lambda);
        worst[2] = std::max(worst[2], oracle::rel_error(oracle::ris_ap(ra, ris, ap, lambda), H.data()));

        ComplexMatrix psi;
        if (i % 2 == 0)
        {
            std::vector<double> phases(static_cast<std::size_t>(ris.size()));
            for (auto &ph : phases)
                ph = std::uniform_real_distribution<double>(0.0, 6.283185307179586)(rng);
            psi = phase_shift_matrix(phases);
        }
        else
        {
            psi = ComplexMatrix(static_cast<std::size_t>(ris.size()), static_cast<std::size_t>(ris.size()));
            for (auto &x : psi.data())
                x = oracle::random_gain(rng);
        }
        worst[3] = std::max(worst[3], oracle::rel_error(oracle::chain(H, psi, g), stcrv(H, psi, g)));
    }
    const double secs = seconds_since(t0);
    const double tol = 1e-12;
    const bool pass = std::all_of(std::begin(worst), std::end(worst), [&](double w) { return w < tol; }) && secs < 10.0;
    return {pass, fmt("%d instances, max rel error upa %.1e, mu_ris %.1e, ris_ap %.1e, stcrv %.1e (tol 1e-12), %.2f s "
                      "(limit 10 s)",
                      instances, worst[0], worst[1], worst[2], worst[3], secs)};
}

Outcome array_invariants()
{
    Rng rng = make_rng(77);
    const double lambda = 0.0107;
    double modulus = 0.0, kron = 0.0;
    for (int draw = 0; draw < 1000; ++draw)
    {
        const UpaConfig arr = oracle::random_array(rng, 64, lambda);
        const auto ang = oracle::random_angles(rng);
        const auto v = upa_response(arr, ang, lambda);
        // Kronecker factors: the first row and first column of the response.
        for (int n = 0; n < arr.count_a; ++n)
            for (int m = 0; m < arr.count_b; ++m)
            {
                const cplx x = v[static_cast<std::size_t>(n * arr.count_b + m)];
                modulus = std::max(modulus, std::abs(std::abs(x) - 1.0));
                const cplx e = v[static_cast<std::size_t>(n * arr.count_b)];
                const cplx a = v[static_cast<std::size_t>(m)];
                kron = std::max(kron, std::abs(x - e * a));
            }
    }
    const bool pass = modulus < 1e-12 && kron < 1e-12;
    return {pass, fmt("1000 angle draws, max ||v|-1| %.1e, max Kronecker residual %.1e (tol 1e-12)", modulus, kron)};
}

// ---------------------------------------------------------------- 3, 4

Outcome gradient_fidelity()
{
    const auto t0 = Clock::now();
    const auto cases = run_gradcheck_suite(0);
    const double secs = seconds_since(t0);
    double layer = 0.0, block = 0.0, full = 0.0;
    std::string worst_layer, failed;
    for (const auto &c : cases)
    {
        const double e = c.result.max_rel_error;
        if (c.name.rfind("rcnr", 0) == 0)
            full = std::max(full, e);
        else if (c.name.find("block") != std::string::npos)
            block = std::max(block, e);
        else if (e > layer)
        {
            layer = e;
            worst_layer = c.name;
        }
        if (!c.passed())
            failed += " " + c.name;
        std::cerr << fmt("  gradcheck %-24s %.3e (%zu coordinates, %zu kink skips)\n", c.name.c_str(), e,
                         c.result.checked, c.result.skipped);
    }
    const bool pass = failed.empty() && layer < 1e-5 && full < 1e-4 && secs < 60.0;
    return {pass, fmt("worst layer %.2e (%s, tol 1e-5), blocks %.2e, full RCNR-4 %.2e (tol 1e-4), %.1f s (limit 60 s)%s",
                      layer, worst_layer.c_str(), block, full, secs, failed.empty() ? "" : (" failed:" + failed).c_str())};
}

Outcome residual_identity()
{
    std::size_t compared = 0, mismatched = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed)
    {
        Rng rng = make_rng(seed, 3);
        const bool project = seed % 2 == 1;
        const int cin = 8, cout = project ? 16 : 8;
        RcBlock<double> block(cin, cout, project ? 2 : 1);
        block.conv1.init(rng);
        block.conv2.init(rng);
        if (block.shortcut)
            block.shortcut->init(rng);
        block.conv1.weight.fill(0.0);
        block.conv2.weight.fill(0.0);

        Tensor<double> x({4, cin, 6, 6});
        std::normal_distribution<double> nd;
        for (auto &v : x.vec())
            v = nd(rng);
        const auto y = block.forward(x, seed % 4 < 2 ? Mode::Train : Mode::Eval);
        const auto s = block.shortcut ? block.shortcut->forward(x) : x;
        for (std::size_t i = 0; i < s.size(); ++i, ++compared)
            if (y[i] != std::max(0.0, s[i]))
                ++mismatched;
    }
    return {mismatched == 0, fmt("20 blocks (identity and 1x1/2 shortcuts), %zu outputs, %zu differ from "
                                 "ReLU(shortcut) (exact comparison)",
                                 compared, mismatched)};
}

// ---------------------------------------------------------------- training

struct Artifacts
{
    fs::path data, ckpt, metrics;
};

struct PipelineResult
{
    Artifacts files;
    std::vector<MetricsRow> history;
    double rmse = 0.0;
};

void generate(const ProjectConfig &cfg, const fs::path &dir)
{
    const auto t0 = Clock::now();
    const auto built = build_dataset(cfg.scene, cfg.grid, cfg.split.fraction, cfg.split.seed);
    serialize(built.train, built.test, built.manifest, dir);
    std::cerr << fmt("  generated %zu samples in %.1f s -> %s\n", built.manifest.sample_count, seconds_since(t0),
                     dir.string().c_str());
}

PipelineResult train_run(const ProjectConfig &cfg, const fs::path &data_dir, Variant variant, int blocks,
                         std::uint64_t seed, const fs::path &out_dir, const std::string &tag)
{
    const auto t0 = Clock::now();
    const LoadedDataset data = deserialize(data_dir);
    NetworkSpec spec = cfg.network;
    spec.variant = variant;
    spec.block_count = blocks;
    spec.input_rows = data.manifest.rows;
    spec.input_cols = data.manifest.cols;
    TrainConfig tc = cfg.train;
    tc.seed = seed;

    Model<float> model(spec, tc.seed);
    PipelineResult r;
    r.history = train(model, data.train, data.test, data.manifest.label_map, tc);
    r.files = {data_dir, out_dir / (tag + ".ckpt"), out_dir / (tag + ".csv")};
    save_checkpoint(model, r.files.ckpt);
    export_metrics(r.history, r.files.metrics);
    Model<float> reloaded = load_checkpoint(r.files.ckpt);
    r.rmse = evaluate_rmse(reloaded, data.test, data.manifest.label_map);
    std::cerr << fmt("  %-8s seed %llu: %d epochs in %.0f s, train loss %.4f -> %.4f, test loss %.4f -> %.4f, test "
                     "RMSE %.4f m\n",
                     tag.c_str(), static_cast<unsigned long long>(seed), tc.epochs, seconds_since(t0),
                     r.history.front().train_loss, r.history.back().train_loss, r.history.front().test_loss,
                     r.history.back().test_loss, r.rmse);
    return r;
}

double median3(std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
}

// Constant prediction at the grid centroid, RMSE by direct summation over the grid.
double centroid_rmse(const GridArgs &grid)
{
    const auto pos = grid.positions();
    Position3D c{};
    for (const auto &p : pos)
    {
        c.x += p.x;
        c.y += p.y;
        c.z += p.z;
    }
    const double n = static_cast<double>(pos.size());
    c = {c.x / n, c.y / n, c.z / n};
    double sq = 0.0;
    for (const auto &p : pos)
        sq += std::pow(distance(p, c), 2);
    return std::sqrt(sq / n);
}

// ---------------------------------------------------------------- 9

template <typename Error, typename Fn>
std::string expect_kind(Fn &&fn, typename Error::Kind want, const std::string &label)
{
    try
    {
        fn();
    }
    catch (const Error &e)
    {
        return e.kind() == want ? "" : " " + label + "(wrong kind)";
    }
    catch (const std::exception &e)
    {
        return " " + label + "(unexpected: " + e.what() + ")";
    }
    return " " + label + "(no error)";
}

std::string replace_once(std::string s, const std::string &from, const std::string &to)
{
    const auto at = s.find(from);
    if (at == std::string::npos)
        throw std::runtime_error("corruption anchor '" + from + "' not found");
    return s.replace(at, from.size(), to);
}

void write_bytes(const fs::path &p, const std::string &s)
{
    std::ofstream(p, std::ios::binary | std::ios::trunc) << s;
}

Outcome serialization(const fs::path &work)
{
    const fs::path dir = work / "serialization";
    fs::remove_all(dir);
    fs::create_directories(dir);

    // dataset round-trip on a 10-sample scene
    SceneConfig scene;
    scene.ap.count_a = scene.ap.count_b = 4;
    scene.ris.count_a = scene.ris.count_b = 4;
    GridArgs grid;
    grid.length = 0.8;
    grid.width = 0.2;
    grid.heights = {1.5};
    const auto built = build_dataset(scene, grid, 0.8, 1);
    const fs::path ds = dir / "data", ds2 = dir / "data2";
    serialize(built.train, built.test, built.manifest, ds);
    const auto loaded = deserialize(ds);
    serialize(loaded.train, loaded.test, loaded.manifest, ds2);
    bool data_ok = loaded.train == built.train && loaded.test == built.test &&
                   loaded.manifest.input_norm.mean == built.manifest.input_norm.mean &&
                   loaded.manifest.input_norm.stddev == built.manifest.input_norm.stddev &&
                   loaded.manifest.label_map.scale == built.manifest.label_map.scale &&
                   loaded.manifest.label_map.offset == built.manifest.label_map.offset;
    for (const char *f : {"manifest", "inputs.bin", "labels.bin"})
        data_ok = data_ok && slurp(ds / f) == slurp(ds2 / f);

    // checkpoint round-trip
    NetworkSpec spec;
    Model<float> model(spec, 9);
    Tensor<float> x({4, 2, 16, 16});
    Rng rng = make_rng(9, 1);
    std::normal_distribution<float> nd;
    for (auto &v : x.vec())
        v = nd(rng);
    model.forward(x); // non-trivial running statistics
    const fs::path ck = dir / "model.ckpt", ck2 = dir / "model2.ckpt";
    save_checkpoint(model, ck);
    Model<float> back = load_checkpoint(ck);
    save_checkpoint(back, ck2);
    bool ckpt_ok = slurp(ck) == slurp(ck2);
    auto pa = model.params(), pb = back.params();
    ckpt_ok = ckpt_ok && pa.size() == pb.size();
    for (std::size_t i = 0; ckpt_ok && i < pa.size(); ++i)
        ckpt_ok = *pa[i].value == *pb[i].value;

    // corruption kinds
    using DK = DatasetError::Kind;
    using CK = CheckpointError::Kind;
    std::string wrong;
    const auto ds_case = [&](const std::string &label, DK kind, const std::function<void(const fs::path &)> &corrupt) {
        const fs::path c = dir / ("bad_" + label);
        fs::remove_all(c);
        fs::copy(ds, c);
        corrupt(c);
        wrong += expect_kind<DatasetError>([&] { deserialize(c); }, kind, "dataset:" + label);
    };
    const std::string manifest = slurp(ds / "manifest");
    ds_case("missing_manifest", DK::ManifestMissing, [](const fs::path &c) { fs::remove(c / "manifest"); });
    ds_case("truncated_inputs", DK::SampleCountMismatch, [](const fs::path &c) {
        fs::resize_file(c / "inputs.bin", fs::file_size(c / "inputs.bin") - 7);
    });
    ds_case("truncated_labels", DK::SampleCountMismatch, [](const fs::path &c) {
        fs::resize_file(c / "labels.bin", fs::file_size(c / "labels.bin") - 4);
    });
    ds_case("version", DK::VersionMismatch, [&](const fs::path &c) {
        write_bytes(c / "manifest", replace_once(manifest, "format_version = 1", "format_version = 9"));
    });
    ds_case("shape", DK::ShapeMismatch, [&](const fs::path &c) {
        write_bytes(c / "manifest", replace_once(manifest, "input_shape = 2 4 4", "input_shape = 4 4 4"));
    });
    ds_case("malformed", DK::MalformedManifest, [&](const fs::path &c) {
        write_bytes(c / "manifest", replace_once(manifest, "sample_count = 10", "sample_count = ten"));
    });

    const std::string ckb = slurp(ck);
    const auto ck_case = [&](const std::string &label, CK kind, const std::string &bytes) {
        const fs::path c = dir / ("bad_" + label + ".ckpt");
        write_bytes(c, bytes);
        wrong += expect_kind<CheckpointError>([&] { load_checkpoint(c); }, kind, "checkpoint:" + label);
    };
    wrong += expect_kind<CheckpointError>([&] { load_checkpoint(dir / "absent.ckpt"); }, CK::Missing,
                                          "checkpoint:missing");
    ck_case("truncated", CK::PayloadSizeMismatch, ckb.substr(0, ckb.size() - 10));
    ck_case("version", CK::VersionMismatch, replace_once(ckb, "format_version = 1", "format_version = 2"));
    ck_case("header", CK::MalformedHeader, ckb.substr(0, 100));
    ck_case("shape", CK::ShapeMismatch, replace_once(ckb, "base_channels = 16", "base_channels = 32"));

    const bool pass = data_ok && ckpt_ok && wrong.empty();
    return {pass, fmt("dataset round-trip %s, checkpoint round-trip %s, 11 corruption cases: %s",
                      data_ok ? "bit-exact" : "DIFFERS", ckpt_ok ? "bit-exact" : "DIFFERS",
                      wrong.empty() ? "all raise the expected kind" : ("mismatch:" + wrong).c_str())};
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"rispos acceptance runner"};
    std::string workdir = "acceptance_work";
    std::vector<int> only;
    app.add_option("--workdir", workdir, "Directory for generated artifacts");
    app.add_option("--only", only, "Run only these criteria (1-9)")->check(CLI::Range(1, 9));
    CLI11_PARSE(app, argc, argv);

    const std::set<int> selected = only.empty() ? std::set<int>{1, 2, 3, 4, 5, 6, 7, 8, 9}
                                                : std::set<int>(only.begin(), only.end());
    const fs::path work = workdir;
    fs::create_directories(work);

    int failures = 0;
    const auto report = [&](int id, const char *name, const Outcome &o) {
        std::cout << "criterion " << id << " " << (o.pass ? "PASS" : "FAIL") << "  " << name << ": " << o.detail
                  << std::endl;
        failures += o.pass ? 0 : 1;
    };
    const auto run = [&](int id, const char *name, const std::function<Outcome()> &fn) {
        if (!selected.count(id))
            return;
        try
        {
            report(id, name, fn());
        }
        catch (const std::exception &e)
        {
            report(id, name, {false, std::string("exception: ") + e.what()});
        }
    };

    run(1, "channel oracle equivalence", channel_oracles);
    run(2, "unit modulus and Kronecker structure", array_invariants);
    run(3, "gradient fidelity", gradient_fidelity);
    run(4, "residual identity", residual_identity);

    const bool need_training = selected.count(5) || selected.count(6) || selected.count(7) || selected.count(8);
    if (need_training)
    {
        const ProjectConfig cfg; // the default scene, grid, split, network and training settings
        const std::vector<std::uint64_t> seeds{0, 1, 2};
        std::map<std::string, std::vector<PipelineResult>> runs;
        std::string setup_error;
        try
        {
            fs::remove_all(work / "run1");
            fs::create_directories(work / "run1");
            generate(cfg, work / "run1" / "data");
            for (std::uint64_t s : seeds)
            {
                if (s > 0 && !selected.count(6) && !selected.count(7))
                    break;
                runs["rcnr4"].push_back(
                    train_run(cfg, work / "run1" / "data", Variant::Rcnr, 4, s, work / "run1", fmt("rcnr4_s%llu", static_cast<unsigned long long>(s))));
                if (!selected.count(7))
                    continue;
                runs["rcnr3"].push_back(
                    train_run(cfg, work / "run1" / "data", Variant::Rcnr, 3, s, work / "run1", fmt("rcnr3_s%llu", static_cast<unsigned long long>(s))));
                runs["cnn4"].push_back(
                    train_run(cfg, work / "run1" / "data", Variant::Cnn, 4, s, work / "run1", fmt("cnn4_s%llu", static_cast<unsigned long long>(s))));
            }
        }
        catch (const std::exception &e)
        {
            setup_error = std::string("exception: ") + e.what();
        }

        run(5, "learning sanity", [&]() -> Outcome {
            if (!setup_error.empty())
                return {false, setup_error};
            const auto &h = runs.at("rcnr4").front().history;
            const double tr = h.back().train_loss / h.front().train_loss;
            const double te = h.back().test_loss / h.front().test_loss;
            return {tr < 0.25 && te < 0.25,
                    fmt("RCNR-4 seed 0, epoch %d/epoch 1: train loss %.4f/%.4f = %.1f%%, test loss %.4f/%.4f = %.1f%% "
                        "(both must be < 25%%)",
                        h.back().epoch, h.back().train_loss, h.front().train_loss, 100 * tr, h.back().test_loss,
                        h.front().test_loss, 100 * te)};
        });

        run(6, "positioning skill", [&]() -> Outcome {
            if (!setup_error.empty())
                return {false, setup_error};
            const double centroid = centroid_rmse(cfg.grid);
            const double limit = centroid / 3.0;
            std::string per_seed;
            bool pass = true;
            for (std::size_t i = 0; i < seeds.size(); ++i)
            {
                const double r = runs.at("rcnr4").at(i).rmse;
                pass = pass && r < limit;
                per_seed += fmt("%s%.4f", i ? ", " : "", r);
            }
            return {pass, fmt("RCNR-4 test RMSE [%s] m for seeds 0,1,2; limit centroid %.4f m / 3 = %.4f m",
                              per_seed.c_str(), centroid, limit)};
        });

        run(7, "ordering RCNR-4 vs RCNR-3 and CNN-4", [&]() -> Outcome {
            if (!setup_error.empty())
                return {false, setup_error};
            std::map<std::string, std::vector<double>> rmse;
            for (const auto &[tag, list] : runs)
                for (const auto &r : list)
                    rmse[tag].push_back(r.rmse);
            for (std::size_t i = 0; i < seeds.size(); ++i)
            {
                const double a = rmse["rcnr4"][i], b = rmse["rcnr3"][i], c = rmse["cnn4"][i];
                if (a > b)
                    std::cerr << fmt("  inversion seed %zu: RCNR-4 %.4f m > RCNR-3 %.4f m\n", i, a, b);
                if (a > c)
                    std::cerr << fmt("  inversion seed %zu: RCNR-4 %.4f m > CNN-4 %.4f m\n", i, a, c);
            }
            const double m4 = median3(rmse["rcnr4"]), m3 = median3(rmse["rcnr3"]), mc = median3(rmse["cnn4"]);
            return {m4 <= m3 && m4 <= mc, fmt("median test RMSE over seeds 0,1,2: RCNR-4 %.4f m, RCNR-3 %.4f m, "
                                              "CNN-4 %.4f m (need RCNR-4 <= both)",
                                              m4, m3, mc)};
        });

        run(8, "reproducibility", [&]() -> Outcome {
            if (!setup_error.empty())
                return {false, setup_error};
            fs::remove_all(work / "run2");
            fs::create_directories(work / "run2");
            generate(cfg, work / "run2" / "data");
            const auto second = train_run(cfg, work / "run2" / "data", Variant::Rcnr, 4, 0, work / "run2", "rcnr4_s0");
            const auto &first = runs.at("rcnr4").front();
            std::string differ;
            for (const char *f : {"manifest", "inputs.bin", "labels.bin"})
                if (slurp(work / "run1" / "data" / f) != slurp(work / "run2" / "data" / f))
                    differ += std::string(" data/") + f;
            if (slurp(first.files.ckpt) != slurp(second.files.ckpt))
                differ += " checkpoint";
            if (slurp(first.files.metrics) != slurp(second.files.metrics))
                differ += " metrics";
            return {differ.empty(), differ.empty() ? "two generate+train runs (RCNR-4, seed 0, " +
                                                         std::to_string(cfg.train.epochs) +
                                                         " epochs): dataset files, checkpoint and metrics CSV "
                                                         "bit-identical"
                                                   : "files differ:" + differ};
        });
    }

    run(9, "serialization", [&] { return serialization(work); });
    return failures == 0 ? 0 : 1;
}
