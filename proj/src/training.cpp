// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the clcc project.

#include "clcc/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "clcc/io_format.hpp"

namespace clcc {

NetConfig TrainConfig::net() const {
    NetConfig net;
    net.conv_channels = conv_channels;
    net.proj_hidden = proj_hidden;
    net.proj_dim = proj_dim;
    net.crop = crop;
    net.dropout = dropout;
    return net;
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0) || !(adam_beta1 > 0.0 && adam_beta1 < 1.0) ||
        !(adam_beta2 > 0.0 && adam_beta2 < 1.0) || !(adam_eps > 0.0)) {
        throw DomainError("optimizer rates must be positive (betas in (0,1))");
    }
    if (batch_size < 1) {
        throw DomainError("batch size must be positive");
    }
    if (weight_decay < 0.0) {
        throw DomainError("weight decay must be nonnegative");
    }
    if (epochs_first < 0 || epochs_second < 0 || total_epochs() < 1) {
        throw DomainError("need at least one epoch");
    }
    net().validate();
    nce.validate();
    perturb.validate();
    mix.validate();
}

TrainMode parse_train_mode(const std::string& name) {
    if (name == "baseline") {
        return TrainMode::Baseline;
    }
    if (name == "clcc-wb") {
        return TrainMode::ClccWB;
    }
    if (name == "clcc-full") {
        return TrainMode::ClccFull;
    }
    throw DomainError("unknown training mode: " + name);
}

std::string train_mode_name(TrainMode mode) {
    switch (mode) {
    case TrainMode::Baseline:
        return "baseline";
    case TrainMode::ClccWB:
        return "clcc-wb";
    case TrainMode::ClccFull:
        return "clcc-full";
    }
    return "?";
}

PixelRect pick_crop(const LabeledImage& img, int crop, Rng* rng) {
    const int w = img.image.width;
    const int h = img.image.height;
    if (crop < 1 || crop > w || crop > h) {
        throw DomainError("crop size does not fit the image");
    }

    int x_lo = 0, x_hi = w - crop;
    int y_lo = 0, y_hi = h - crop;
    if (img.checker_region) {
        const PixelRect& ch = *img.checker_region;
        const int below = h - (ch.y + ch.height);
        const int right = w - (ch.x + ch.width);
        if (crop <= below) {
            y_lo = ch.y + ch.height;
        } else if (crop <= right) {
            x_lo = ch.x + ch.width;
        }
        // Otherwise the crop cannot avoid the checker; extraction masks it.
    }

    PixelRect rect;
    rect.width = rect.height = crop;
    if (rng != nullptr) {
        rect.x = x_lo + rng->uniform_int(x_hi - x_lo + 1);
        rect.y = y_lo + rng->uniform_int(y_hi - y_lo + 1);
    } else {
        rect.x = x_lo + (x_hi - x_lo) / 2;
        rect.y = y_lo + (y_hi - y_lo) / 2;
    }
    return rect;
}

RawImage crop_image(const LabeledImage& img, const PixelRect& rect) {
    RawImage out = RawImage::zeros(rect.width, rect.height);
    for (int y = 0; y < rect.height; ++y) {
        for (int x = 0; x < rect.width; ++x) {
            const int sx = rect.x + x;
            const int sy = rect.y + y;
            bool masked = false;
            if (img.checker_region) {
                const PixelRect& ch = *img.checker_region;
                masked = sx >= ch.x && sx < ch.x + ch.width && sy >= ch.y && sy < ch.y + ch.height;
            }
            if (!masked) {
                const double* src = img.image.pixel(sx, sy);
                double* dst = out.pixel(x, y);
                dst[0] = src[0];
                dst[1] = src[1];
                dst[2] = src[2];
            }
        }
    }
    return out;
}

std::vector<float> image_to_chw(const RawImage& img) {
    const int w = img.width, h = img.height;
    std::vector<float> out(static_cast<std::size_t>(3) * w * h);
    for (int c = 0; c < 3; ++c) {
        float* plane = out.data() + static_cast<std::size_t>(c) * w * h;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                plane[static_cast<std::size_t>(y) * w + x] = static_cast<float>(img.pixel(x, y)[c]);
            }
        }
    }
    return out;
}

std::vector<float> network_input(const RawImage& crop) {
    std::vector<float> x = image_to_chw(crop);
    double mean = 0.0;
    for (float v : x) {
        mean += v;
    }
    mean = mean / static_cast<double>(x.size()) + 1e-6;
    const float inv = static_cast<float>(1.0 / mean);
    for (float& v : x) {
        v *= inv;
    }
    return x;
}

IlluminantRGB estimate_illuminant(const ModelParams<float>& params, const TrainConfig& cfg,
                                  const LabeledImage& img) {
    // Average the unit estimates of a deterministic crop grid: the center
    // plus the corners of the feasible placement range.
    const PixelRect center = pick_crop(img, cfg.crop, nullptr);
    std::vector<PixelRect> rects = {center};
    {
        Rng probe(0);
        PixelRect lo = pick_crop(img, cfg.crop, &probe); // any valid sample shares the range
        (void)lo;
        // Reconstruct the feasible range the same way pick_crop does.
        const int w = img.image.width;
        const int h = img.image.height;
        int x_lo = 0, x_hi = w - cfg.crop;
        int y_lo = 0, y_hi = h - cfg.crop;
        if (img.checker_region) {
            const PixelRect& ch = *img.checker_region;
            const int below = h - (ch.y + ch.height);
            const int right = w - (ch.x + ch.width);
            if (cfg.crop <= below) {
                y_lo = ch.y + ch.height;
            } else if (cfg.crop <= right) {
                x_lo = ch.x + ch.width;
            }
        }
        rects.push_back({x_lo, y_lo, cfg.crop, cfg.crop});
        rects.push_back({x_hi, y_lo, cfg.crop, cfg.crop});
        rects.push_back({x_lo, y_hi, cfg.crop, cfg.crop});
        rects.push_back({x_hi, y_hi, cfg.crop, cfg.crop});
    }
    double acc[3] = {0.0, 0.0, 0.0};
    for (const PixelRect& rect : rects) {
        const std::vector<float> x = network_input(crop_image(img, rect));
        const ForwardCache<float> cache =
            forward(params, cfg.net(), x, /*train_mode=*/false, nullptr);
        for (int c = 0; c < 3; ++c) {
            acc[c] += cache.est[static_cast<std::size_t>(c)];
        }
    }
    return IlluminantRGB(acc[0], acc[1], acc[2]).normalized();
}

namespace {

LabeledImage cropped_view(const LabeledImage& img, const PixelRect& rect) {
    LabeledImage out;
    out.image = crop_image(img, rect);
    out.illuminant = img.illuminant;
    out.checker = img.checker;
    out.scene_id = img.scene_id;
    out.illuminant_id = img.illuminant_id;
    out.checker_region = std::nullopt; // the crop avoids or masks it
    return out;
}

double mean_val_error_deg(const ModelParams<float>& params, const TrainConfig& cfg,
                          const std::vector<const LabeledImage*>& val_set) {
    if (val_set.empty()) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    double acc = 0.0;
    for (const LabeledImage* img : val_set) {
        acc += angular_error_degrees(estimate_illuminant(params, cfg, *img), img->illuminant);
    }
    return acc / static_cast<double>(val_set.size());
}

} // namespace

TrainResult train(const std::vector<const LabeledImage*>& train_set,
                  const std::vector<const LabeledImage*>& val_set, const TrainConfig& cfg,
                  TrainMode mode) {
    cfg.validate();
    if (train_set.empty()) {
        throw DomainError("training set is empty");
    }
    const NetConfig net = cfg.net();
    const int n = static_cast<int>(train_set.size());
    const int batch = std::min(cfg.batch_size, n);
    const int steps_per_epoch = std::max(1, n / batch);
    const bool contrastive_on = mode != TrainMode::Baseline;
    const AugMode aug_mode = (mode == TrainMode::ClccFull) ? AugMode::FullAug : AugMode::WBAug;

    const Rng root(cfg.seed);
    ModelParams<float> params = ModelParams<float>::init(net, root.fork(0));
    AdamState<float> adam = AdamState<float>::init(params);
    const AdamConfig adam_cfg{cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps};

    TrainResult result;
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        order[static_cast<std::size_t>(i)] = i;
    }

    for (int epoch = 0; epoch < cfg.total_epochs(); ++epoch) {
        const bool first_half = epoch < cfg.epochs_first;
        const double lambda = first_half ? cfg.lambda_first : cfg.lambda_second;
        const double beta = first_half ? cfg.beta_first : cfg.beta_second;

        Rng shuffle_rng = root.fork(1, static_cast<std::uint64_t>(epoch));
        shuffle_rng.shuffle(order.begin(), order.end());

        double epoch_illum = 0.0;
        double epoch_contr = 0.0;

        for (int step = 0; step < steps_per_epoch; ++step) {
            ModelParams<float> grads = ModelParams<float>::zeros(net);
            double step_illum = 0.0;
            double step_contr = 0.0;

            struct AnchorState {
                LabeledImage crop;
                ForwardCache<float> illum_cache;
            };
            std::vector<AnchorState> anchors(static_cast<std::size_t>(batch));

            // Illuminant head on the anchors' original (unperturbed) crops.
            for (int b = 0; b < batch; ++b) {
                const std::uint64_t item = static_cast<std::uint64_t>(step) * batch + b;
                const LabeledImage& img = *train_set[static_cast<std::size_t>(
                    order[static_cast<std::size_t>(step * batch + b)])];
                Rng crop_rng = root.fork(2, static_cast<std::uint64_t>(epoch), item);
                const PixelRect rect = pick_crop(img, cfg.crop, &crop_rng);
                anchors[static_cast<std::size_t>(b)].crop = cropped_view(img, rect);

                Rng drop_rng = root.fork(3, static_cast<std::uint64_t>(epoch), item);
                anchors[static_cast<std::size_t>(b)].illum_cache =
                    forward(params, net, network_input(anchors[static_cast<std::size_t>(b)].crop.image),
                            /*train_mode=*/true, &drop_rng);

                const auto& est = anchors[static_cast<std::size_t>(b)].illum_cache.est;
                const AngularLossResult loss = illuminant_loss(
                    {static_cast<double>(est[0]), static_cast<double>(est[1]),
                     static_cast<double>(est[2])},
                    img.illuminant);
                step_illum += loss.radians;
                std::array<double, 3> d_est{};
                for (int i = 0; i < 3; ++i) {
                    d_est[static_cast<std::size_t>(i)] =
                        loss.d_est[static_cast<std::size_t>(i)] * lambda / batch;
                }
                backward(params, net, anchors[static_cast<std::size_t>(b)].illum_cache, d_est, {},
                         grads);
            }

            if (contrastive_on) {
                // Build quadruples and run the five contrastive views.
                constexpr int kViews = 5; // anchor, easy_pos, hard_pos, easy_neg, hard_neg
                std::vector<ForwardCache<float>> view_caches(
                    static_cast<std::size_t>(batch) * kViews);
                std::vector<Projection> view_proj(static_cast<std::size_t>(batch) * kViews);
                std::vector<std::vector<double>> view_dz(
                    static_cast<std::size_t>(batch) * kViews,
                    std::vector<double>(static_cast<std::size_t>(cfg.proj_dim), 0.0));

                for (int b = 0; b < batch; ++b) {
                    const std::uint64_t item = static_cast<std::uint64_t>(step) * batch + b;
                    const LabeledImage& anchor_crop = anchors[static_cast<std::size_t>(b)].crop;

                    Rng pair_rng = root.fork(4, static_cast<std::uint64_t>(epoch), item);
                    Rng quad_rng = root.fork(5, static_cast<std::uint64_t>(epoch), item);
                    ContrastiveQuadruple quad;
                    bool built = false;
                    for (int attempt = 0; attempt < 64 && !built; ++attempt) {
                        const int j = pair_rng.uniform_int(n);
                        const LabeledImage& partner = *train_set[static_cast<std::size_t>(j)];
                        if (partner.scene_id == anchor_crop.scene_id) {
                            continue;
                        }
                        Rng partner_crop_rng = root.fork(6, static_cast<std::uint64_t>(epoch),
                                                         item * 64 + static_cast<std::uint64_t>(attempt));
                        const PixelRect rect = pick_crop(partner, cfg.crop, &partner_crop_rng);
                        try {
                            quad = build_quadruple(anchor_crop, cropped_view(partner, rect), aug_mode,
                                                   cfg.mix, cfg.perturb, quad_rng);
                            built = true;
                        } catch (const IlluminantsTooCloseError&) {
                            continue;
                        }
                    }
                    if (!built) {
                        throw Error("training set lacks contrastive partners (all illuminants "
                                    "angularly too close)");
                    }

                    const RawImage* views[kViews] = {&quad.anchor, &quad.easy_pos, &quad.hard_pos,
                                                     &quad.easy_neg, &quad.hard_neg};
                    for (int v = 0; v < kViews; ++v) {
                        const std::size_t slot = static_cast<std::size_t>(b) * kViews + v;
                        view_caches[slot] =
                            forward(params, net, network_input(*views[v]), /*train_mode=*/false,
                                    nullptr);
                        // Projections are renormalized in double so the loss
                        // sees exactly unit-norm vectors.
                        std::vector<double> z(view_caches[slot].proj.begin(),
                                              view_caches[slot].proj.end());
                        double n2 = 0.0;
                        for (double zv : z) {
                            n2 += zv * zv;
                        }
                        const double inv = 1.0 / std::sqrt(n2);
                        for (double& zv : z) {
                            zv *= inv;
                        }
                        view_proj[slot].z = std::move(z);
                    }
                }

                // Per-anchor four-term loss; extra negatives come from the
                // other quadruples in the batch (anchor, hard_neg, easy_neg,
                // round-robin) up to N-1.
                for (int b = 0; b < batch; ++b) {
                    const std::size_t base = static_cast<std::size_t>(b) * kViews;
                    std::vector<Projection> extras;
                    std::vector<std::size_t> extra_slots;
                    const int want = cfg.nce.n_negatives - 1;
                    for (int offset = 1; offset < batch && static_cast<int>(extras.size()) < want;
                         ++offset) {
                        const int j = (b + offset) % batch;
                        const std::size_t jb = static_cast<std::size_t>(j) * kViews;
                        const std::size_t candidates[3] = {jb + 0, jb + 4, jb + 3};
                        for (std::size_t slot : candidates) {
                            if (static_cast<int>(extras.size()) >= want) {
                                break;
                            }
                            extras.push_back(view_proj[slot]);
                            extra_slots.push_back(slot);
                        }
                    }

                    const ClccResult res =
                        clcc_loss(view_proj[base + 0], view_proj[base + 1], view_proj[base + 2],
                                  view_proj[base + 4], view_proj[base + 3], extras, cfg.nce);
                    step_contr += res.loss;

                    const double scale = beta / batch;
                    auto accumulate = [&](std::size_t slot, const std::vector<double>& g) {
                        std::vector<double>& dst = view_dz[slot];
                        for (std::size_t i = 0; i < dst.size(); ++i) {
                            dst[i] += scale * g[i];
                        }
                    };
                    accumulate(base + 0, res.grads.d_xa);
                    accumulate(base + 1, res.grads.d_xa_pos);
                    accumulate(base + 2, res.grads.d_ya_pos);
                    accumulate(base + 4, res.grads.d_xc_neg);
                    accumulate(base + 3, res.grads.d_yc_neg);
                    for (std::size_t e = 0; e < extra_slots.size(); ++e) {
                        accumulate(extra_slots[e], res.grads.d_extra[e]);
                    }
                }

                for (std::size_t slot = 0; slot < view_caches.size(); ++slot) {
                    std::vector<float> dz(view_dz[slot].begin(), view_dz[slot].end());
                    backward(params, net, view_caches[slot], {0.0, 0.0, 0.0}, dz, grads);
                }
            }

            add_weight_decay(params, cfg.weight_decay, grads);
            adam_step(params, grads, adam, adam_cfg);

            step_illum /= batch;
            step_contr /= batch;
            if (!std::isfinite(step_illum) || !std::isfinite(step_contr)) {
                throw Error("training diverged (non-finite loss) at epoch " +
                            std::to_string(epoch) + " step " + std::to_string(step));
            }
            epoch_illum += step_illum;
            epoch_contr += step_contr;
        }

        EpochLog log;
        log.epoch = epoch;
        log.lambda_weight = lambda;
        log.beta_weight = beta;
        log.illuminant_loss_rad = epoch_illum / steps_per_epoch;
        log.contrastive_loss = epoch_contr / steps_per_epoch;
        log.objective = lambda * log.illuminant_loss_rad + beta * log.contrastive_loss +
                        weight_decay_penalty(params, cfg.weight_decay);
        log.val_angular_deg = mean_val_error_deg(params, cfg, val_set);
        result.log.push_back(log);
    }

    result.params = std::move(params);
    return result;
}

TrainResult train(const std::vector<LabeledImage>& train_set,
                  const std::vector<LabeledImage>& val_set, const TrainConfig& cfg,
                  TrainMode mode) {
    std::vector<const LabeledImage*> tr, va;
    tr.reserve(train_set.size());
    va.reserve(val_set.size());
    for (const auto& img : train_set) {
        tr.push_back(&img);
    }
    for (const auto& img : val_set) {
        va.push_back(&img);
    }
    return train(tr, va, cfg, mode);
}

// ---------------------------------------------------------------------------
// Config text format
// ---------------------------------------------------------------------------

std::string config_to_text(const TrainConfig& cfg) {
    std::ostringstream out;
    out << "learning_rate = " << format_double(cfg.learning_rate) << "\n";
    out << "adam_beta1 = " << format_double(cfg.adam_beta1) << "\n";
    out << "adam_beta2 = " << format_double(cfg.adam_beta2) << "\n";
    out << "adam_eps = " << format_double(cfg.adam_eps) << "\n";
    out << "batch_size = " << cfg.batch_size << "\n";
    out << "dropout = " << format_double(cfg.dropout) << "\n";
    out << "weight_decay = " << format_double(cfg.weight_decay) << "\n";
    out << "lambda_first = " << format_double(cfg.lambda_first) << "\n";
    out << "beta_first = " << format_double(cfg.beta_first) << "\n";
    out << "lambda_second = " << format_double(cfg.lambda_second) << "\n";
    out << "beta_second = " << format_double(cfg.beta_second) << "\n";
    out << "epochs_first = " << cfg.epochs_first << "\n";
    out << "epochs_second = " << cfg.epochs_second << "\n";
    out << "crop = " << cfg.crop << "\n";
    out << "seed = " << cfg.seed << "\n";
    out << "conv_channels = " << cfg.conv_channels << "\n";
    out << "proj_hidden = " << cfg.proj_hidden << "\n";
    out << "proj_dim = " << cfg.proj_dim << "\n";
    out << "temperature = " << format_double(cfg.nce.temperature) << "\n";
    out << "n_negatives = " << cfg.nce.n_negatives << "\n";
    out << "gain_min = " << format_double(cfg.perturb.gain_min) << "\n";
    out << "gain_max = " << format_double(cfg.perturb.gain_max) << "\n";
    out << "gauss_std_min = " << format_double(cfg.perturb.gauss_std_min) << "\n";
    out << "gauss_std_max = " << format_double(cfg.perturb.gauss_std_max) << "\n";
    out << "shot_std_min = " << format_double(cfg.perturb.shot_std_min) << "\n";
    out << "shot_std_max = " << format_double(cfg.perturb.shot_std_max) << "\n";
    out << "w_neg_min = " << format_double(cfg.mix.neg_min) << "\n";
    out << "w_neg_max = " << format_double(cfg.mix.neg_max) << "\n";
    out << "w_pos_min = " << format_double(cfg.mix.pos_min) << "\n";
    out << "w_pos_max = " << format_double(cfg.mix.pos_max) << "\n";
    return out.str();
}

TrainConfig config_from_text(const std::string& text) {
    TrainConfig cfg;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) {
            line.erase(hash);
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            bool blank = true;
            for (char c : line) {
                blank = blank && std::isspace(static_cast<unsigned char>(c));
            }
            if (blank) {
                continue;
            }
            throw Error("config line " + std::to_string(line_no) + ": expected key = value");
        }
        auto trim = [](std::string s) {
            const auto begin = s.find_first_not_of(" \t\r");
            const auto end = s.find_last_not_of(" \t\r");
            if (begin == std::string::npos) {
                return std::string();
            }
            return s.substr(begin, end - begin + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) {
            throw Error("config line " + std::to_string(line_no) + ": empty key or value");
        }
        auto as_double = [&]() { return std::stod(value); };
        auto as_int = [&]() { return std::stoi(value); };

        if (key == "learning_rate") cfg.learning_rate = as_double();
        else if (key == "adam_beta1") cfg.adam_beta1 = as_double();
        else if (key == "adam_beta2") cfg.adam_beta2 = as_double();
        else if (key == "adam_eps") cfg.adam_eps = as_double();
        else if (key == "batch_size") cfg.batch_size = as_int();
        else if (key == "dropout") cfg.dropout = as_double();
        else if (key == "weight_decay") cfg.weight_decay = as_double();
        else if (key == "lambda_first") cfg.lambda_first = as_double();
        else if (key == "beta_first") cfg.beta_first = as_double();
        else if (key == "lambda_second") cfg.lambda_second = as_double();
        else if (key == "beta_second") cfg.beta_second = as_double();
        else if (key == "epochs_first") cfg.epochs_first = as_int();
        else if (key == "epochs_second") cfg.epochs_second = as_int();
        else if (key == "crop") cfg.crop = as_int();
        else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(std::stoull(value));
        else if (key == "conv_channels") cfg.conv_channels = as_int();
        else if (key == "proj_hidden") cfg.proj_hidden = as_int();
        else if (key == "proj_dim") cfg.proj_dim = as_int();
        else if (key == "temperature") cfg.nce.temperature = as_double();
        else if (key == "n_negatives") cfg.nce.n_negatives = as_int();
        else if (key == "gain_min") cfg.perturb.gain_min = as_double();
        else if (key == "gain_max") cfg.perturb.gain_max = as_double();
        else if (key == "gauss_std_min") cfg.perturb.gauss_std_min = as_double();
        else if (key == "gauss_std_max") cfg.perturb.gauss_std_max = as_double();
        else if (key == "shot_std_min") cfg.perturb.shot_std_min = as_double();
        else if (key == "shot_std_max") cfg.perturb.shot_std_max = as_double();
        else if (key == "w_neg_min") cfg.mix.neg_min = as_double();
        else if (key == "w_neg_max") cfg.mix.neg_max = as_double();
        else if (key == "w_pos_min") cfg.mix.pos_min = as_double();
        else if (key == "w_pos_max") cfg.mix.pos_max = as_double();
        else {
            throw Error("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
        }
    }
    return cfg;
}

TrainConfig load_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open config file: " + path.string());
    }
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return config_from_text(text);
}

// ---------------------------------------------------------------------------
// Checkpoint format
// ---------------------------------------------------------------------------

namespace {

constexpr char kCkptMagic[8] = {'C', 'L', 'C', 'C', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kCkptVersion = 1;

void put_u32(std::string& buf, std::uint32_t v) {
    char b[4];
    std::memcpy(b, &v, 4);
    buf.append(b, 4);
}

void put_u64(std::string& buf, std::uint64_t v) {
    char b[8];
    std::memcpy(b, &v, 8);
    buf.append(b, 8);
}

std::uint32_t take_u32(const std::string& buf, std::size_t& off) {
    if (off + 4 > buf.size()) {
        throw FormatError("truncated checkpoint", off);
    }
    std::uint32_t v;
    std::memcpy(&v, buf.data() + off, 4);
    off += 4;
    return v;
}

std::uint64_t take_u64(const std::string& buf, std::size_t& off) {
    if (off + 8 > buf.size()) {
        throw FormatError("truncated checkpoint", off);
    }
    std::uint64_t v;
    std::memcpy(&v, buf.data() + off, 8);
    off += 8;
    return v;
}

} // namespace

void write_checkpoint(const std::filesystem::path& path, const ModelParams<float>& params,
                      const TrainConfig& cfg) {
    std::string buf;
    buf.append(kCkptMagic, 8);
    put_u32(buf, kCkptVersion);
    const std::string config_text = config_to_text(cfg);
    put_u64(buf, config_text.size());
    buf.append(config_text);

    const auto tensors = params.tensors();
    const auto& names = ModelParams<float>::tensor_names();
    put_u32(buf, static_cast<std::uint32_t>(tensors.size()));
    for (std::size_t t = 0; t < tensors.size(); ++t) {
        put_u32(buf, static_cast<std::uint32_t>(names[t].size()));
        buf.append(names[t]);
        put_u32(buf, static_cast<std::uint32_t>(tensors[t]->shape.size()));
        for (int d : tensors[t]->shape) {
            put_u32(buf, static_cast<std::uint32_t>(d));
        }
        const std::size_t bytes = tensors[t]->v.size() * 4;
        const std::size_t at = buf.size();
        buf.resize(at + bytes);
        std::memcpy(buf.data() + at, tensors[t]->v.data(), bytes);
    }

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("cannot create checkpoint: " + path.string());
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) {
        throw Error("short write: " + path.string());
    }
}

std::pair<ModelParams<float>, TrainConfig> read_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open checkpoint: " + path.string());
    }
    const std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (buf.size() < 12 || std::memcmp(buf.data(), kCkptMagic, 8) != 0) {
        throw FormatError("bad magic, not a clcc checkpoint", 0);
    }
    std::size_t off = 8;
    const std::uint32_t version = take_u32(buf, off);
    if (version != kCkptVersion) {
        throw UnsupportedVersionError("unsupported checkpoint version", 8);
    }
    const std::uint64_t config_len = take_u64(buf, off);
    if (off + config_len > buf.size()) {
        throw FormatError("truncated checkpoint config", off);
    }
    const TrainConfig cfg = config_from_text(buf.substr(off, config_len));
    off += config_len;

    ModelParams<float> params = ModelParams<float>::zeros(cfg.net());
    const auto tensors = params.tensors();
    const auto& names = ModelParams<float>::tensor_names();
    const std::uint32_t count = take_u32(buf, off);
    if (count != tensors.size()) {
        throw FormatError("unexpected tensor count", off - 4);
    }
    for (std::size_t t = 0; t < tensors.size(); ++t) {
        const std::uint32_t name_len = take_u32(buf, off);
        if (off + name_len > buf.size()) {
            throw FormatError("truncated tensor name", off);
        }
        const std::string name = buf.substr(off, name_len);
        off += name_len;
        if (name != names[t]) {
            throw FormatError("unexpected tensor '" + name + "'", off);
        }
        const std::uint32_t ndim = take_u32(buf, off);
        if (ndim != tensors[t]->shape.size()) {
            throw FormatError("tensor rank mismatch for " + name, off - 4);
        }
        std::size_t numel = 1;
        for (std::uint32_t d = 0; d < ndim; ++d) {
            const std::uint32_t dim = take_u32(buf, off);
            if (static_cast<int>(dim) != tensors[t]->shape[d]) {
                throw FormatError("tensor shape mismatch for " + name +
                                      " (does the config echo match?)",
                                  off - 4);
            }
            numel *= dim;
        }
        if (off + numel * 4 > buf.size()) {
            throw FormatError("truncated tensor data for " + name, off);
        }
        std::memcpy(tensors[t]->v.data(), buf.data() + off, numel * 4);
        off += numel * 4;
    }
    if (off != buf.size()) {
        throw FormatError("trailing bytes after checkpoint payload", off);
    }
    return {std::move(params), cfg};
}

} // namespace clcc
