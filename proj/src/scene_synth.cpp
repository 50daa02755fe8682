// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the clcc project.

#include "clcc/scene_synth.hpp"

#include <algorithm>
#include <cmath>

namespace clcc {

namespace {

constexpr int kN = SpectralGrid::kSamples;

double gaussian(double x, double mu, double sigma) {
    const double d = (x - mu) / sigma;
    return std::exp(-0.5 * d * d);
}

// Smooth bump-on-pedestal reflectance, clipped into [0, cap].
std::array<double, kN> bump_reflectance(double pedestal, double amplitude, double center,
                                        double width, double cap) {
    std::array<double, kN> s{};
    for (int i = 0; i < kN; ++i) {
        const double v = pedestal + amplitude * gaussian(SpectralGrid::wavelength(i), center, width);
        s[static_cast<std::size_t>(i)] = std::clamp(v, 0.0, cap);
    }
    return s;
}

} // namespace

Spectrum Spectrum::make(SpectrumKind kind, const std::array<double, kN>& samples) {
    for (double v : samples) {
        if (!std::isfinite(v) || v < 0.0) {
            throw DomainError("spectrum samples must be finite and nonnegative");
        }
        if (kind == SpectrumKind::Reflectance && v > 1.0) {
            throw DomainError("reflectance samples must not exceed 1");
        }
    }
    Spectrum s;
    s.kind = kind;
    s.samples = samples;
    return s;
}

SensorModel SensorModel::gaussian(const std::array<double, 3>& centers_nm,
                                  const std::array<double, 3>& widths_nm) {
    SensorModel sensor;
    Spectrum* channels[3] = {&sensor.r, &sensor.g, &sensor.b};
    for (int c = 0; c < 3; ++c) {
        std::array<double, kN> s{};
        double integral = 0.0;
        for (int i = 0; i < kN; ++i) {
            s[static_cast<std::size_t>(i)] = clcc::gaussian(
                SpectralGrid::wavelength(i), centers_nm[static_cast<std::size_t>(c)],
                widths_nm[static_cast<std::size_t>(c)]);
            integral += s[static_cast<std::size_t>(i)] * SpectralGrid::kStepNm;
        }
        if (!(integral > 0.0)) {
            throw DomainError("sensor channel integrates to zero");
        }
        for (double& v : s) {
            v /= integral;
        }
        *channels[c] = Spectrum::make(SpectrumKind::Sensitivity, s);
    }
    return sensor;
}

SensorModel SensorModel::default_sensor() {
    return gaussian({610.0, 540.0, 470.0}, {45.0, 45.0, 45.0});
}

Spectrum planckian_spd(double temperature_kelvin, double tint) {
    if (!(temperature_kelvin >= 2000.0 && temperature_kelvin <= 12000.0)) {
        throw DomainError("color temperature out of range [2000, 12000] K");
    }
    if (!(std::abs(tint) <= 0.2)) {
        throw DomainError("tint out of range [-0.2, 0.2]");
    }
    constexpr double h = 6.62607015e-34;  // J s
    constexpr double c = 2.99792458e8;    // m/s
    constexpr double kb = 1.380649e-23;   // J/K

    std::array<double, kN> s{};
    double mean = 0.0;
    for (int i = 0; i < kN; ++i) {
        const double lambda_m = SpectralGrid::wavelength(i) * 1e-9;
        const double x = h * c / (lambda_m * kb * temperature_kelvin);
        const double radiance = 1.0 / (std::pow(lambda_m, 5.0) * std::expm1(x));
        s[static_cast<std::size_t>(i)] = radiance;
        mean += radiance;
    }
    mean /= kN;
    for (int i = 0; i < kN; ++i) {
        const double ramp = (SpectralGrid::wavelength(i) - 550.0) / 170.0; // [-1, 1]
        s[static_cast<std::size_t>(i)] = s[static_cast<std::size_t>(i)] / mean * (1.0 + tint * ramp);
    }
    return Spectrum::make(SpectrumKind::Illuminant, s);
}

std::array<double, 3> render_color(const Spectrum& reflectance, const Spectrum& illum,
                                   const SensorModel& sensor) {
    std::array<double, 3> out{};
    for (int c = 0; c < 3; ++c) {
        const auto& sens = sensor.channel(c).samples;
        double acc = 0.0;
        for (int i = 0; i < kN; ++i) {
            acc += sens[static_cast<std::size_t>(i)] * reflectance.samples[static_cast<std::size_t>(i)] *
                   illum.samples[static_cast<std::size_t>(i)];
        }
        out[static_cast<std::size_t>(c)] = acc * SpectralGrid::kStepNm;
    }
    return out;
}

const std::array<Spectrum, 24>& checker_reflectances() {
    static const std::array<Spectrum, 24> patches = [] {
        std::array<Spectrum, 24> out;
        // 18 chromatic patches: pedestal + Gaussian bump, peaks spread over
        // the grid, amplitudes capped so the neutral 0.90 patch stays the
        // brightest reflectance anywhere in the library.
        struct Bump {
            double pedestal, amplitude, center, width;
        };
        constexpr Bump bumps[18] = {
            {0.06, 0.55, 420.0, 35.0},  {0.08, 0.60, 450.0, 40.0},  {0.05, 0.68, 480.0, 45.0},
            {0.10, 0.55, 500.0, 30.0},  {0.07, 0.65, 520.0, 50.0},  {0.12, 0.58, 540.0, 35.0},
            {0.05, 0.72, 560.0, 40.0},  {0.15, 0.50, 580.0, 55.0},  {0.08, 0.66, 600.0, 35.0},
            {0.04, 0.74, 620.0, 45.0},  {0.10, 0.62, 640.0, 60.0},  {0.06, 0.70, 660.0, 40.0},
            {0.18, 0.42, 690.0, 70.0},  {0.04, 0.50, 430.0, 90.0},  {0.09, 0.55, 505.0, 95.0},
            {0.13, 0.45, 585.0, 100.0}, {0.03, 0.62, 645.0, 110.0}, {0.20, 0.40, 470.0, 130.0},
        };
        for (int p = 0; p < 18; ++p) {
            out[static_cast<std::size_t>(p)] = Spectrum::make(
                SpectrumKind::Reflectance,
                bump_reflectance(bumps[p].pedestal, bumps[p].amplitude, bumps[p].center,
                                 bumps[p].width, 0.85));
        }
        // Neutral ramp, brightest first (patch 18 .. 23).
        constexpr double ramp[6] = {0.90, 0.59, 0.36, 0.19, 0.09, 0.031};
        for (int p = 0; p < 6; ++p) {
            std::array<double, kN> flat{};
            flat.fill(ramp[p]);
            out[static_cast<std::size_t>(18 + p)] = Spectrum::make(SpectrumKind::Reflectance, flat);
        }
        return out;
    }();
    return patches;
}

SceneSpec SceneSpec::random(int patches_x, int patches_y, int patch_px, bool with_checker, Rng rng) {
    if (patches_x <= 0 || patches_y <= 0 || patch_px <= 0) {
        throw DomainError("scene dimensions must be positive");
    }
    if (with_checker && (patches_x < kCheckerCols || patches_y < kCheckerRows)) {
        throw DomainError("scene too small to hold the 6x4 checker block");
    }
    SceneSpec spec;
    spec.patches_x = patches_x;
    spec.patches_y = patches_y;
    spec.patch_px = patch_px;
    spec.with_checker = with_checker;
    spec.seed = rng.seed();
    spec.patch_reflectance.resize(static_cast<std::size_t>(patches_x) * patches_y);
    for (int py = 0; py < patches_y; ++py) {
        for (int px = 0; px < patches_x; ++px) {
            const std::size_t idx = static_cast<std::size_t>(py) * patches_x + px;
            Rng patch_rng = rng.fork(4, static_cast<std::uint64_t>(idx));
            const double pedestal = patch_rng.uniform(0.02, 0.28);
            const double amplitude = patch_rng.uniform(0.08, 0.57);
            const double center = patch_rng.uniform(SpectralGrid::kStartNm, SpectralGrid::kEndNm);
            const double width = patch_rng.uniform(22.0, 120.0);
            spec.patch_reflectance[idx] = Spectrum::make(
                SpectrumKind::Reflectance, bump_reflectance(pedestal, amplitude, center, width, 0.85));
        }
    }
    if (with_checker) {
        const auto& checker = checker_reflectances();
        for (int row = 0; row < kCheckerRows; ++row) {
            for (int col = 0; col < kCheckerCols; ++col) {
                spec.patch_reflectance[static_cast<std::size_t>(row) * patches_x + col] =
                    checker[static_cast<std::size_t>(row * kCheckerCols + col)];
            }
        }
    }
    return spec;
}

std::optional<PixelRect> SceneSpec::checker_region() const {
    if (!with_checker) {
        return std::nullopt;
    }
    return PixelRect{0, 0, kCheckerCols * patch_px, kCheckerRows * patch_px};
}

void SceneSpec::validate() const {
    if (patches_x <= 0 || patches_y <= 0 || patch_px <= 0) {
        throw DomainError("scene dimensions must be positive");
    }
    if (patch_reflectance.size() != static_cast<std::size_t>(patches_x) * patches_y) {
        throw DomainError("scene reflectance count does not match the patch grid");
    }
    if (with_checker) {
        const auto& checker = checker_reflectances();
        for (int row = 0; row < kCheckerRows; ++row) {
            for (int col = 0; col < kCheckerCols; ++col) {
                const auto& have =
                    patch_reflectance[static_cast<std::size_t>(row) * patches_x + col].samples;
                const auto& want = checker[static_cast<std::size_t>(row * kCheckerCols + col)].samples;
                if (have != want) {
                    throw DomainError("checker region does not hold the fixed checker reflectances");
                }
            }
        }
    }
}

LabeledImage render_scene(const SceneSpec& scene, const Spectrum& illum, const SensorModel& sensor,
                          double exposure, const RenderOptions& opts) {
    if (!(exposure > 0.0)) {
        throw DomainError("exposure must be positive");
    }
    scene.validate();

    LabeledImage out;
    out.image = RawImage::zeros(scene.width_px(), scene.height_px());
    out.checker_region = scene.checker_region();

    for (int py = 0; py < scene.patches_y; ++py) {
        for (int px = 0; px < scene.patches_x; ++px) {
            const auto color = render_color(
                scene.patch_reflectance[static_cast<std::size_t>(py) * scene.patches_x + px], illum,
                sensor);
            for (int dy = 0; dy < scene.patch_px; ++dy) {
                for (int dx = 0; dx < scene.patch_px; ++dx) {
                    const int x = px * scene.patch_px + dx;
                    const int y = py * scene.patch_px + dy;
                    double shade = 1.0;
                    if (opts.shading_strength > 0.0) {
                        const double rx = (x + 0.5) / scene.width_px() - opts.shading_center_x;
                        const double ry = (y + 0.5) / scene.height_px() - opts.shading_center_y;
                        shade = 1.0 - opts.shading_strength * (rx * rx + ry * ry);
                        shade = std::max(shade, 0.05);
                    }
                    double* p = out.image.pixel(x, y);
                    for (int c = 0; c < 3; ++c) {
                        p[c] = exposure * shade * color[static_cast<std::size_t>(c)];
                    }
                }
            }
        }
    }

    std::array<double, kN> unit{};
    unit.fill(1.0);
    const auto white = render_color(Spectrum::make(SpectrumKind::Reflectance, unit), illum, sensor);
    out.illuminant =
        IlluminantRGB(exposure * white[0], exposure * white[1], exposure * white[2]);

    const auto& checker = checker_reflectances();
    for (int p = 0; p < 24; ++p) {
        const auto color = render_color(checker[static_cast<std::size_t>(p)], illum, sensor);
        for (int c = 0; c < 3; ++c) {
            out.checker.colors[static_cast<std::size_t>(p)][static_cast<std::size_t>(c)] =
                exposure * color[static_cast<std::size_t>(c)];
        }
    }
    return out;
}

Dataset synth_dataset(int n_scenes, int n_illums, const SensorModel& sensor, std::uint64_t seed,
                      const SynthOptions& opts) {
    if (n_scenes < 1 || n_illums < 1) {
        throw DomainError("need at least one scene and one illuminant");
    }
    Dataset ds;
    ds.sensor = sensor;
    ds.opts = opts;
    ds.seed = seed;
    const Rng root(seed);

    std::vector<Spectrum> illums;
    illums.reserve(static_cast<std::size_t>(n_illums));
    for (int j = 0; j < n_illums; ++j) {
        Rng rng = root.fork(1, static_cast<std::uint64_t>(j));
        const double temp = rng.uniform(opts.temp_min, opts.temp_max);
        const double tint = rng.uniform(opts.tint_min, opts.tint_max);
        illums.push_back(planckian_spd(temp, tint));
    }

    ds.images.reserve(static_cast<std::size_t>(n_scenes));
    for (int i = 0; i < n_scenes; ++i) {
        const SceneSpec scene = SceneSpec::random(opts.patches_x, opts.patches_y, opts.patch_px,
                                                  opts.with_checker,
                                                  root.fork(2, static_cast<std::uint64_t>(i)));
        RenderOptions render_opts;
        if (opts.shading_strength > 0.0) {
            Rng rng = root.fork(3, static_cast<std::uint64_t>(i));
            render_opts.shading_strength = opts.shading_strength;
            render_opts.shading_center_x = rng.uniform(0.2, 0.8);
            render_opts.shading_center_y = rng.uniform(0.2, 0.8);
        }
        const int illum_id = i % n_illums;
        LabeledImage img = render_scene(scene, illums[static_cast<std::size_t>(illum_id)], sensor,
                                        opts.exposure, render_opts);
        img.scene_id = i;
        img.illuminant_id = illum_id;
        ds.images.push_back(std::move(img));
    }
    return ds;
}

} // namespace clcc
