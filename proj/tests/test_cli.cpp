// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the clcc project.

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "clcc/cli.hpp"
#include "clcc/io_format.hpp"
#include "clcc/training.hpp"

using namespace clcc;
namespace fs = std::filesystem;

namespace {

int run(const std::vector<std::string>& args) {
    std::vector<const char*> argv;
    argv.push_back("clcc");
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    return run_cli(static_cast<int>(argv.size()), argv.data());
}

fs::path temp_dir(const char* tag) {
    const fs::path dir = fs::temp_directory_path() / (std::string("clcc_cli_") + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

bool same_tree_bytes(const fs::path& a, const fs::path& b) {
    std::vector<fs::path> rel_a;
    for (const auto& entry : fs::recursive_directory_iterator(a)) {
        if (entry.is_regular_file()) {
            rel_a.push_back(fs::relative(entry.path(), a));
        }
    }
    for (const auto& rel : rel_a) {
        if (!fs::exists(b / rel) || slurp(a / rel) != slurp(b / rel)) {
            return false;
        }
    }
    return true;
}

} // namespace

TEST_SUITE("cli") {

TEST_CASE("synth is byte-identical across runs") {
    const fs::path a = temp_dir("synth_a");
    const fs::path b = temp_dir("synth_b");
    CHECK(run({"synth", "--scenes", "2", "--illums", "2", "--seed", "7", "--out", a.string(),
               "--patch-px", "4"}) == 0);
    CHECK(run({"synth", "--scenes", "2", "--illums", "2", "--seed", "7", "--out", b.string(),
               "--patch-px", "4"}) == 0);
    CHECK(same_tree_bytes(a, b));
    CHECK(same_tree_bytes(b, a));
}

TEST_CASE("unknown subcommands and flags exit 2") {
    CHECK(run({"frobnicate"}) == 2);
    CHECK(run({"synth", "--no-such-flag"}) == 2);
    CHECK(run({}) == 2);
}

TEST_CASE("eval gray-world on a synthetic dataset emits the metric columns") {
    const fs::path data = temp_dir("eval_data");
    CHECK(run({"synth", "--scenes", "9", "--illums", "9", "--seed", "3", "--out", data.string(),
               "--patch-px", "4"}) == 0);
    const fs::path csv = data / "metrics.csv";
    const fs::path errors = data / "errors.csv";
    CHECK(run({"eval", "--method", "gray-world", "--data", data.string(), "--folds", "3",
               "--seed", "1", "--csv", csv.string(), "--errors", errors.string()}) == 0);
    const std::string text = slurp(csv);
    CHECK(text.find("method,fold,cluster,n,Mean,Median,Tri.,Best-25%,Worst-25%") == 0);
    CHECK(text.find("gray-world,pooled,all,") != std::string::npos);
    const std::string err_text = slurp(errors);
    CHECK(err_text.find("method,index,scene_id,illuminant_id") == 0);
}

TEST_CASE("eval gray-world achieves < 0.1 degrees on a mean-neutral dataset") {
    // Scenes built so patch reflectances average to a flat spectrum: pairs of
    // random spectra and their complements about 0.5.
    const fs::path dir = temp_dir("eval_neutral");
    Dataset ds;
    for (int s = 0; s < 6; ++s) {
        SceneSpec scene;
        scene.patches_x = 8;
        scene.patches_y = 8;
        scene.patch_px = 4;
        scene.with_checker = false;
        Rng rng(100 + static_cast<std::uint64_t>(s));
        scene.patch_reflectance.resize(64);
        for (int i = 0; i < 32; ++i) {
            std::array<double, SpectralGrid::kSamples> samples{};
            for (double& v : samples) {
                v = rng.uniform(0.05, 0.95);
            }
            std::array<double, SpectralGrid::kSamples> comp{};
            for (int k = 0; k < SpectralGrid::kSamples; ++k) {
                comp[k] = 1.0 - samples[k];
            }
            scene.patch_reflectance[2 * i] = Spectrum::make(SpectrumKind::Reflectance, samples);
            scene.patch_reflectance[2 * i + 1] = Spectrum::make(SpectrumKind::Reflectance, comp);
        }
        LabeledImage img = render_scene(scene, planckian_spd(3000.0 + 900.0 * s, 0.01 * s),
                                        SensorModel::default_sensor(), 1.0);
        img.scene_id = s;
        img.illuminant_id = s;
        ds.images.push_back(std::move(img));
    }
    ds.opts.patch_px = 4;
    ds.opts.with_checker = false;
    write_dataset(dir, ds);

    const fs::path json = dir / "summary.json";
    CHECK(run({"eval", "--method", "gray-world", "--data", dir.string(), "--folds", "3", "--json",
               json.string()}) == 0);
    const std::string text = slurp(json);
    const std::size_t at = text.find("\"pooled\"");
    REQUIRE(at != std::string::npos);
    const std::size_t mean_at = text.find("\"mean\":", at);
    REQUIRE(mean_at != std::string::npos);
    const double mean = std::stod(text.substr(mean_at + 8));
    CHECK(mean < 0.1);
}

TEST_CASE("eval is byte-identical across runs") {
    const fs::path data = temp_dir("eval_det");
    CHECK(run({"synth", "--scenes", "8", "--illums", "8", "--seed", "5", "--out", data.string(),
               "--patch-px", "4"}) == 0);
    const fs::path csv_a = data / "a.csv";
    const fs::path csv_b = data / "b.csv";
    CHECK(run({"eval", "--method", "shades-of-gray", "--data", data.string(), "--csv",
               csv_a.string(), "--seed", "2"}) == 0);
    CHECK(run({"eval", "--method", "shades-of-gray", "--data", data.string(), "--csv",
               csv_b.string(), "--seed", "2"}) == 0);
    CHECK(slurp(csv_a) == slurp(csv_b));
}

TEST_CASE("train writes a loadable checkpoint and an epoch log") {
    const fs::path dir = temp_dir("train");
    const fs::path data = dir / "data";
    CHECK(run({"synth", "--scenes", "6", "--illums", "6", "--seed", "11", "--out", data.string(),
               "--patch-px", "2"}) == 0);

    const fs::path config = dir / "train.cfg";
    {
        std::ofstream out(config);
        out << "conv_channels = 4\nproj_hidden = 8\nproj_dim = 8\ncrop = 8\n"
            << "batch_size = 2\nepochs_first = 1\nepochs_second = 1\nseed = 4\n";
    }
    const fs::path ckpt = dir / "model.ckpt";
    const fs::path log = dir / "log.json";
    CHECK(run({"train", "--mode", "clcc-wb", "--data", data.string(), "--out", ckpt.string(),
               "--config", config.string(), "--log", log.string()}) == 0);
    const auto [params, cfg] = read_checkpoint(ckpt);
    CHECK(cfg.conv_channels == 4);
    CHECK(cfg.crop == 8);
    CHECK(slurp(log).find("\"epochs\"") != std::string::npos);
}

TEST_CASE("train and eval are byte-identical across runs (learned path)") {
    const fs::path dir = temp_dir("train_det");
    const fs::path data = dir / "data";
    CHECK(run({"synth", "--scenes", "6", "--illums", "6", "--seed", "13", "--out", data.string(),
               "--patch-px", "2"}) == 0);
    const fs::path config = dir / "train.cfg";
    {
        std::ofstream out(config);
        out << "conv_channels = 4\nproj_hidden = 8\nproj_dim = 8\ncrop = 8\n"
            << "batch_size = 2\nepochs_first = 1\nepochs_second = 1\nseed = 9\n";
    }
    const fs::path ckpt_a = dir / "a.ckpt";
    const fs::path ckpt_b = dir / "b.ckpt";
    CHECK(run({"train", "--mode", "baseline", "--data", data.string(), "--out", ckpt_a.string(),
               "--config", config.string()}) == 0);
    CHECK(run({"train", "--mode", "baseline", "--data", data.string(), "--out", ckpt_b.string(),
               "--config", config.string()}) == 0);
    CHECK(slurp(ckpt_a) == slurp(ckpt_b));

    const fs::path csv_a = dir / "a.csv";
    const fs::path csv_b = dir / "b.csv";
    CHECK(run({"eval", "--method", "baseline", "--data", data.string(), "--config",
               config.string(), "--csv", csv_a.string(), "--seed", "2"}) == 0);
    CHECK(run({"eval", "--method", "baseline", "--data", data.string(), "--config",
               config.string(), "--csv", csv_b.string(), "--seed", "2"}) == 0);
    CHECK(slurp(csv_a) == slurp(csv_b));
}

TEST_CASE("augment dumps quadruples with a provenance manifest") {
    const fs::path dir = temp_dir("augment");
    const fs::path data = dir / "data";
    CHECK(run({"synth", "--scenes", "6", "--illums", "6", "--seed", "17", "--out", data.string(),
               "--patch-px", "2"}) == 0);
    const fs::path out = dir / "quads";
    CHECK(run({"augment", "--data", data.string(), "--mode", "wb", "--out", out.string(),
               "--count", "3", "--seed", "5"}) == 0);
    const std::string manifest = slurp(out / "quadruples.json");
    CHECK(manifest.find("\"mode_used\"") != std::string::npos);
    CHECK(fs::exists(out / "q0000_anchor.img"));
    CHECK(fs::exists(out / "q0002_hard_neg.img"));
    // The dumped views parse as images.
    const RawImage img = read_image(out / "q0001_easy_neg.img");
    CHECK(img.width == 16);
}

TEST_CASE("report clusters an errors file") {
    const fs::path dir = temp_dir("report");
    const fs::path data = dir / "data";
    CHECK(run({"synth", "--scenes", "10", "--illums", "10", "--seed", "19", "--out", data.string(),
               "--patch-px", "4"}) == 0);
    const fs::path errors = dir / "errors.csv";
    CHECK(run({"eval", "--method", "gray-world", "--data", data.string(), "--errors",
               errors.string()}) == 0);
    const fs::path csv = dir / "clusters.csv";
    CHECK(run({"report", "--errors", errors.string(), "--clusters", "2", "--csv", csv.string(),
               "--seed", "3"}) == 0);
    const std::string text = slurp(csv);
    CHECK(text.find("method,fold,cluster,n,Mean,Median,Tri.,Best-25%,Worst-25%") == 0);
    CHECK(text.find("gray-world,pooled,0,") != std::string::npos);
    CHECK(text.find("gray-world,pooled,1,") != std::string::npos);
}

TEST_CASE("ingest prints the conversion contract") {
    CHECK(run({"ingest"}) == 0);
}

TEST_CASE("runtime failures exit 1 with a one-line error") {
    CHECK(run({"eval", "--method", "gray-world", "--data", "/nonexistent/nowhere"}) == 1);
    CHECK(run({"train", "--mode", "no-such-mode", "--data", "/tmp", "--out", "/tmp/x.ckpt"}) == 1);
}

} // TEST_SUITE
