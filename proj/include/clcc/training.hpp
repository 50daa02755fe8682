// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the clcc project.

#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "clcc/augment.hpp"
#include "clcc/contrastive.hpp"
#include "clcc/model.hpp"
#include "clcc/scene_synth.hpp"

namespace clcc {

/// Full training configuration; serializes to a flat key = value text file.
struct TrainConfig {
    double learning_rate = 0.0003;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    int batch_size = 16;
    double dropout = 0.5;
    double weight_decay = 0.000057;
    // Loss-weight schedule (lambda, beta): first half / second half of epochs.
    double lambda_first = 0.1, beta_first = 1.0;
    double lambda_second = 1.0, beta_second = 0.1;
    int epochs_first = 30, epochs_second = 30;
    int crop = 64;
    std::uint64_t seed = 0;
    int conv_channels = 16;
    int proj_hidden = 64;
    int proj_dim = 64;
    NceConfig nce;
    PerturbConfig perturb;
    MixWeightConfig mix;

    int total_epochs() const { return epochs_first + epochs_second; }
    NetConfig net() const;
    void validate() const;
};

enum class TrainMode { Baseline, ClccWB, ClccFull };

TrainMode parse_train_mode(const std::string& name); // baseline | clcc-wb | clcc-full
std::string train_mode_name(TrainMode mode);

struct EpochLog {
    int epoch = 0;
    double lambda_weight = 0.0, beta_weight = 0.0;
    double illuminant_loss_rad = 0.0; // mean over steps
    double contrastive_loss = 0.0;    // mean over steps (0 in baseline mode)
    double objective = 0.0;           // lambda*illum + beta*contrastive + decay penalty
    double val_angular_deg = 0.0;     // NaN when no validation set was given
};

struct TrainResult {
    ModelParams<float> params;
    std::vector<EpochLog> log;
};

/// Trains on train_set; val_set (possibly empty) is only used for the
/// per-epoch validation line in the log. Baseline mode optimizes the angular
/// loss alone and never touches the augment module; the clcc modes add the
/// four-term contrastive objective on quadruple projections. Deterministic
/// given cfg.seed (single-threaded).
TrainResult train(const std::vector<const LabeledImage*>& train_set,
                  const std::vector<const LabeledImage*>& val_set, const TrainConfig& cfg,
                  TrainMode mode);
TrainResult train(const std::vector<LabeledImage>& train_set,
                  const std::vector<LabeledImage>& val_set, const TrainConfig& cfg, TrainMode mode);

/// Deterministic inference: center crop (avoiding the checker region when
/// possible), eval-mode forward.
IlluminantRGB estimate_illuminant(const ModelParams<float>& params, const TrainConfig& cfg,
                                  const LabeledImage& img);

/// Crop placement. Prefers a position whose crop rectangle avoids the
/// checker region entirely (the strip below, then the strip to the right);
/// when the crop cannot avoid it, the overlap is zero-masked at extraction.
/// rng == nullptr picks the deterministic center of the feasible range.
PixelRect pick_crop(const LabeledImage& img, int crop, Rng* rng);

/// Crop as a double image, zero-masking any checker overlap.
RawImage crop_image(const LabeledImage& img, const PixelRect& rect);

/// CHW float tensor of an image (the network's input layout).
std::vector<float> image_to_chw(const RawImage& img);

/// Network input preprocessing: CHW layout, normalized by the crop's mean
/// intensity. The estimate is a direction, so the scale carries no label
/// information, and normalizing keeps strongly relit views in the same
/// dynamic range as ordinary ones.
std::vector<float> network_input(const RawImage& crop);

/// Checkpoint file: magic "CLCCCKPT", version, config echo, then every
/// tensor as name + shape + little-endian f32 data.
void write_checkpoint(const std::filesystem::path& path, const ModelParams<float>& params,
                      const TrainConfig& cfg);
std::pair<ModelParams<float>, TrainConfig> read_checkpoint(const std::filesystem::path& path);

/// Flat key = value config text ('#' starts a comment). Unknown keys are
/// rejected; missing keys keep their defaults.
std::string config_to_text(const TrainConfig& cfg);
TrainConfig config_from_text(const std::string& text);
TrainConfig load_config_file(const std::filesystem::path& path);

} // namespace clcc
