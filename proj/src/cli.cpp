// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the clcc project.

#include "clcc/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "clcc/augment.hpp"
#include "clcc/eval.hpp"
#include "clcc/io_format.hpp"
#include "clcc/scene_synth.hpp"
#include "clcc/training.hpp"

namespace clcc {

namespace {

namespace fs = std::filesystem;

constexpr const char* kMetricColumns = "Mean,Median,Tri.,Best-25%,Worst-25%";

void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("cannot create file: " + path.string());
    }
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) {
        throw Error("short write: " + path.string());
    }
}

std::string metrics_csv_row(const MetricsReport& m) {
    std::ostringstream row;
    row << m.n << ',' << format_double(m.mean) << ',' << format_double(m.median) << ','
        << format_double(m.trimean) << ',' << format_double(m.best25_mean) << ','
        << format_double(m.worst25_mean);
    return row.str();
}

nlohmann::json metrics_json(const MetricsReport& m) {
    return {{"n", m.n},
            {"mean", m.mean},
            {"median", m.median},
            {"trimean", m.trimean},
            {"best25_mean", m.best25_mean},
            {"worst25_mean", m.worst25_mean}};
}

int cmd_synth(int scenes, int illums, std::uint64_t seed, const std::string& out, int patch_px,
              int patches_x, int patches_y, bool no_checker, double exposure, double shading) {
    SynthOptions opts;
    opts.patch_px = patch_px;
    opts.patches_x = patches_x;
    opts.patches_y = patches_y;
    opts.with_checker = !no_checker;
    opts.exposure = exposure;
    opts.shading_strength = shading;
    const Dataset ds = synth_dataset(scenes, illums, SensorModel::default_sensor(), seed, opts);
    write_dataset(out, ds);
    std::cout << "{\"written\":" << ds.images.size() << ",\"dir\":\"" << out << "\"}" << std::endl;
    return 0;
}

int cmd_train(const std::string& mode_name, const std::string& data, const std::string& out,
              const std::string& config, const std::string& log_path, double val_frac) {
    TrainConfig cfg;
    if (!config.empty()) {
        cfg = load_config_file(config);
    }
    const TrainMode mode = parse_train_mode(mode_name);
    const Dataset ds = read_dataset(data);

    // Deterministic trailing split for the validation log.
    const int n = static_cast<int>(ds.images.size());
    const int n_val = std::min(n - 1, static_cast<int>(val_frac * n));
    std::vector<const LabeledImage*> train_split, val_split;
    for (int i = 0; i < n; ++i) {
        (i < n - n_val ? train_split : val_split).push_back(&ds.images[static_cast<std::size_t>(i)]);
    }

    const TrainResult result = train(train_split, val_split, cfg, mode);
    write_checkpoint(out, result.params, cfg);

    if (!log_path.empty()) {
        nlohmann::json log = nlohmann::json::array();
        for (const EpochLog& e : result.log) {
            nlohmann::json entry = {{"epoch", e.epoch},
                                    {"lambda", e.lambda_weight},
                                    {"beta", e.beta_weight},
                                    {"illuminant_loss_rad", e.illuminant_loss_rad},
                                    {"contrastive_loss", e.contrastive_loss},
                                    {"objective", e.objective}};
            if (std::isfinite(e.val_angular_deg)) {
                entry["val_angular_deg"] = e.val_angular_deg;
            }
            log.push_back(entry);
        }
        write_text_file(log_path, nlohmann::json({{"mode", mode_name}, {"epochs", log}}).dump(2) + "\n");
    }

    const EpochLog& last = result.log.back();
    nlohmann::json summary = {{"mode", mode_name},
                              {"epochs", static_cast<int>(result.log.size())},
                              {"final_objective", last.objective},
                              {"checkpoint", out}};
    if (std::isfinite(last.val_angular_deg)) {
        summary["final_val_angular_deg"] = last.val_angular_deg;
    }
    std::cout << summary.dump() << std::endl;
    return 0;
}

int cmd_eval(const std::string& method_name, const std::string& data, int folds,
             std::uint64_t seed, const std::string& csv, const std::string& errors_path,
             const std::string& config, const std::string& json_path, double p) {
    MethodSpec method;
    method.name = method_name;
    method.minkowski_p = p;
    if (!config.empty()) {
        method.train_cfg = load_config_file(config);
    }
    const Dataset ds = read_dataset(data);
    const CvResult cv = cross_validate(ds.images, method, folds, seed);

    if (!csv.empty()) {
        std::ostringstream out;
        out << "method,fold,cluster,n," << kMetricColumns << "\n";
        for (std::size_t f = 0; f < cv.folds.size(); ++f) {
            out << method.name << ',' << f << ",all," << metrics_csv_row(cv.folds[f].metrics)
                << "\n";
        }
        out << method.name << ",pooled,all," << metrics_csv_row(cv.pooled) << "\n";
        write_text_file(csv, out.str());
    }
    if (!errors_path.empty()) {
        std::ostringstream out;
        out << "method,index,scene_id,illuminant_id,gt_r,gt_g,gt_b,error_deg\n";
        for (std::size_t i = 0; i < ds.images.size(); ++i) {
            const LabeledImage& img = ds.images[i];
            out << method.name << ',' << i << ',' << img.scene_id << ',' << img.illuminant_id
                << ',' << format_double(img.illuminant.r) << ',' << format_double(img.illuminant.g)
                << ',' << format_double(img.illuminant.b) << ','
                << format_double(cv.per_sample_errors[i]) << "\n";
        }
        write_text_file(errors_path, out.str());
    }

    nlohmann::json summary = {{"method", method.name},
                              {"folds", nlohmann::json::array()},
                              {"pooled", metrics_json(cv.pooled)}};
    for (const FoldResult& fold : cv.folds) {
        summary["folds"].push_back(metrics_json(fold.metrics));
    }
    if (!json_path.empty()) {
        write_text_file(json_path, summary.dump(2) + "\n");
    }
    std::cout << summary.dump() << std::endl;
    return 0;
}

int cmd_augment(const std::string& data, const std::string& mode_name, const std::string& out,
                int count, std::uint64_t seed) {
    AugMode mode;
    if (mode_name == "full") {
        mode = AugMode::FullAug;
    } else if (mode_name == "wb") {
        mode = AugMode::WBAug;
    } else {
        throw DomainError("unknown augmentation mode: " + mode_name + " (use full|wb)");
    }
    const Dataset ds = read_dataset(data);
    if (ds.images.size() < 2) {
        throw DomainError("need at least two images to build contrastive pairs");
    }
    fs::create_directories(out);

    const Rng root(seed);
    MixWeightConfig mix;
    PerturbConfig perturb_cfg;
    nlohmann::json records = nlohmann::json::array();
    const int n = static_cast<int>(ds.images.size());
    int built = 0;
    for (int attempt = 0; built < count && attempt < count * 64; ++attempt) {
        Rng rng = root.fork(1, static_cast<std::uint64_t>(attempt));
        const int i = rng.uniform_int(n);
        const int j = rng.uniform_int(n);
        if (i == j || ds.images[static_cast<std::size_t>(i)].scene_id ==
                          ds.images[static_cast<std::size_t>(j)].scene_id) {
            continue;
        }
        ContrastiveQuadruple quad;
        try {
            quad = build_quadruple(ds.images[static_cast<std::size_t>(i)],
                                   ds.images[static_cast<std::size_t>(j)], mode, mix, perturb_cfg,
                                   rng);
        } catch (const IlluminantsTooCloseError&) {
            continue;
        }

        char name[64];
        const char* views[5] = {"anchor", "easy_pos", "hard_pos", "easy_neg", "hard_neg"};
        const RawImage* imgs[5] = {&quad.anchor, &quad.easy_pos, &quad.hard_pos, &quad.easy_neg,
                                   &quad.hard_neg};
        nlohmann::json rec;
        for (int v = 0; v < 5; ++v) {
            std::snprintf(name, sizeof(name), "q%04d_%s.img", built, views[v]);
            write_image(fs::path(out) / name, *imgs[v]);
            rec["files"][views[v]] = name;
        }
        rec["scene_a"] = quad.scene_a;
        rec["scene_b"] = quad.scene_b;
        rec["w"] = quad.w;
        rec["mode_requested"] = quad.mode_requested == AugMode::FullAug ? "full" : "wb";
        rec["mode_used"] = quad.mode_used == AugMode::FullAug ? "full" : "wb";
        rec["anchor_illuminant"] = {quad.anchor_illuminant.r, quad.anchor_illuminant.g,
                                    quad.anchor_illuminant.b};
        rec["novel_illuminant"] = {quad.novel_illuminant.r, quad.novel_illuminant.g,
                                   quad.novel_illuminant.b};
        records.push_back(std::move(rec));
        ++built;
    }
    if (built < count) {
        throw Error("could not assemble enough valid pairs from this dataset");
    }
    write_text_file(fs::path(out) / "quadruples.json",
                    nlohmann::json({{"quadruples", records}}).dump(2) + "\n");
    std::cout << "{\"quadruples\":" << built << ",\"dir\":\"" << out << "\"}" << std::endl;
    return 0;
}

int cmd_report(const std::string& errors_path, int clusters, std::uint64_t seed,
               const std::string& csv, const std::string& json_path) {
    std::ifstream in(errors_path);
    if (!in) {
        throw Error("cannot open errors file: " + errors_path);
    }
    std::string line;
    if (!std::getline(in, line) ||
        line != "method,index,scene_id,illuminant_id,gt_r,gt_g,gt_b,error_deg") {
        throw Error("errors file has an unexpected header");
    }
    std::string method = "?";
    std::vector<std::array<double, 2>> chroma;
    std::vector<double> errors;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::istringstream row(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(row, field, ',')) {
            fields.push_back(field);
        }
        if (fields.size() != 8) {
            throw Error("errors file row has " + std::to_string(fields.size()) + " fields");
        }
        method = fields[0];
        const double gr = std::stod(fields[4]);
        const double gg = std::stod(fields[5]);
        const double gb = std::stod(fields[6]);
        if (!(gg > 0.0)) {
            throw Error("ground-truth illuminant needs positive green");
        }
        chroma.push_back({gr / gg, gb / gg});
        errors.push_back(std::stod(fields[7]));
    }
    const ClusterReport rep = cluster_robustness_points(chroma, errors, clusters, seed);

    if (!csv.empty()) {
        std::ostringstream out;
        out << "method,fold,cluster,n," << kMetricColumns << "\n";
        out << method << ",pooled,all," << metrics_csv_row(compute_metrics(errors)) << "\n";
        for (int c = 0; c < clusters; ++c) {
            out << method << ",pooled," << c << ','
                << metrics_csv_row(rep.per_cluster[static_cast<std::size_t>(c)]) << "\n";
        }
        write_text_file(csv, out.str());
    }

    nlohmann::json summary = {{"method", method}, {"clusters", nlohmann::json::array()}};
    for (int c = 0; c < clusters; ++c) {
        summary["clusters"].push_back(
            {{"count", rep.counts[static_cast<std::size_t>(c)]},
             {"centroid_rg_bg",
              {rep.centroids[static_cast<std::size_t>(c)][0], rep.centroids[static_cast<std::size_t>(c)][1]}},
             {"metrics", metrics_json(rep.per_cluster[static_cast<std::size_t>(c)])}});
    }
    if (!json_path.empty()) {
        write_text_file(json_path, summary.dump(2) + "\n");
    }
    std::cout << summary.dump() << std::endl;
    return 0;
}

int cmd_ingest() {
    std::cout <<
        R"(ingest: converting real raw captures into clcc datasets

This build ships no raw decoder. To evaluate on captured data, convert each
capture yourself and emit the dataset layout documented here:

  <dir>/manifest.json          dataset manifest (JSON)
  <dir>/images/NNNNNN.img      one file per capture

Image file layout (little-endian):
  bytes 0-7    magic "CLCCIMG1"
  bytes 8-19   width, height, channels (= 3) as uint32
  bytes 20-    row-major interleaved RGB float32, linear raw values scaled
               to roughly [0, 1]

Manifest fields per image record:
  file             relative path to the .img file
  scene_id         integer; images of the same scene share it
  illuminant_id    integer; images lit by the same source share it
  illuminant       [r, g, b] ground truth (unnormalized is fine)
  checker          24 x 3 linear raw-RGB checker colors, neutral ramp last
  checker_region   {x, y, width, height} in pixels, or null if masked out

Top-level manifest fields: format_version (1), seed, sensor {r,g,b: 35
spectral sensitivity samples over 380..720 nm at 10 nm}, grid, scene.
A synthetic dataset written by `clcc synth` is the reference for the exact
shape of every field.
)";
    return 0;
}

} // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"clcc: contrastive color constancy on synthetic raw scenes"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "generate a labeled synthetic dataset");
    int scenes = 16, illums = 16, patch_px = 8, patches_x = 8, patches_y = 8;
    std::uint64_t synth_seed = 0;
    std::string synth_out;
    bool no_checker = false;
    double exposure = 1.0, shading = 0.0;
    synth->add_option("--scenes", scenes, "number of scenes")->check(CLI::PositiveNumber);
    synth->add_option("--illums", illums, "illuminant pool size")->check(CLI::PositiveNumber);
    synth->add_option("--seed", synth_seed, "dataset seed");
    synth->add_option("--out", synth_out, "output directory")->required();
    synth->add_option("--patch-px", patch_px, "pixels per scene patch");
    synth->add_option("--patches-x", patches_x, "patch grid width");
    synth->add_option("--patches-y", patches_y, "patch grid height");
    synth->add_flag("--no-checker", no_checker, "omit the physical checker block");
    synth->add_option("--exposure", exposure, "exposure scale");
    synth->add_option("--shading", shading, "radial shading strength (0 = off)");

    // train
    auto* train_cmd = app.add_subcommand("train", "train an illuminant estimator");
    std::string train_mode = "baseline", train_data, train_out, train_config, train_log;
    double val_frac = 0.1;
    train_cmd->add_option("--mode", train_mode, "baseline | clcc-wb | clcc-full")->required();
    train_cmd->add_option("--data", train_data, "dataset directory")->required();
    train_cmd->add_option("--out", train_out, "checkpoint path")->required();
    train_cmd->add_option("--config", train_config, "flat key = value config file");
    train_cmd->add_option("--log", train_log, "write the per-epoch training log (JSON)");
    train_cmd->add_option("--val-frac", val_frac, "fraction held out for the validation log");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "cross-validate a method on a dataset");
    std::string eval_method, eval_data, eval_csv, eval_errors, eval_config, eval_json;
    int folds = 3;
    std::uint64_t eval_seed = 0;
    double minkowski_p = 6.0;
    eval_cmd->add_option("--method", eval_method,
                         "gray-world | white-patch | shades-of-gray | gray-edge | baseline | "
                         "clcc-wb | clcc-full")
        ->required();
    eval_cmd->add_option("--data", eval_data, "dataset directory")->required();
    eval_cmd->add_option("--folds", folds, "cross-validation folds");
    eval_cmd->add_option("--seed", eval_seed, "fold shuffle seed");
    eval_cmd->add_option("--csv", eval_csv, "write per-fold metrics CSV");
    eval_cmd->add_option("--errors", eval_errors, "write per-sample errors CSV");
    eval_cmd->add_option("--config", eval_config, "training config for learned methods");
    eval_cmd->add_option("--json", eval_json, "write the JSON summary to a file");
    eval_cmd->add_option("--p", minkowski_p, "Minkowski order for shades-of-gray / gray-edge");

    // augment
    auto* aug_cmd = app.add_subcommand("augment", "dump contrastive quadruples for inspection");
    std::string aug_data, aug_mode = "full", aug_out;
    int aug_count = 8;
    std::uint64_t aug_seed = 0;
    aug_cmd->add_option("--data", aug_data, "dataset directory")->required();
    aug_cmd->add_option("--mode", aug_mode, "full | wb");
    aug_cmd->add_option("--out", aug_out, "output directory")->required();
    aug_cmd->add_option("--count", aug_count, "number of quadruples")->check(CLI::PositiveNumber);
    aug_cmd->add_option("--seed", aug_seed, "sampling seed");

    // report
    auto* report_cmd = app.add_subcommand("report", "per-cluster robustness report");
    std::string rep_errors, rep_csv, rep_json;
    int clusters = 5;
    std::uint64_t rep_seed = 0;
    report_cmd->add_option("--errors", rep_errors, "per-sample errors CSV from eval")->required();
    report_cmd->add_option("--clusters", clusters, "K for K-means")->check(CLI::PositiveNumber);
    report_cmd->add_option("--seed", rep_seed, "clustering seed");
    report_cmd->add_option("--csv", rep_csv, "write per-cluster metrics CSV");
    report_cmd->add_option("--json", rep_json, "write the JSON summary to a file");

    // ingest
    app.add_subcommand("ingest", "describe how to convert real raw captures");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help() << std::flush;
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n" << app.help() << std::flush;
        return 2;
    }

    try {
        if (synth->parsed()) {
            return cmd_synth(scenes, illums, synth_seed, synth_out, patch_px, patches_x, patches_y,
                             no_checker, exposure, shading);
        }
        if (train_cmd->parsed()) {
            return cmd_train(train_mode, train_data, train_out, train_config, train_log, val_frac);
        }
        if (eval_cmd->parsed()) {
            return cmd_eval(eval_method, eval_data, folds, eval_seed, eval_csv, eval_errors,
                            eval_config, eval_json, minkowski_p);
        }
        if (aug_cmd->parsed()) {
            return cmd_augment(aug_data, aug_mode, aug_out, aug_count, aug_seed);
        }
        if (report_cmd->parsed()) {
            return cmd_report(rep_errors, clusters, rep_seed, rep_csv, rep_json);
        }
        return cmd_ingest();
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 1;
    }
}

} // namespace clcc
