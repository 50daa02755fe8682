// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the clcc project.

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "clcc/color_math.hpp"
#include "clcc/rng.hpp"

namespace clcc {

/// Fixed wavelength grid: 380..720 nm inclusive at 10 nm, 35 samples.
struct SpectralGrid {
    static constexpr int kSamples = 35;
    static constexpr double kStartNm = 380.0;
    static constexpr double kEndNm = 720.0;
    static constexpr double kStepNm = 10.0;

    static double wavelength(int i) { return kStartNm + kStepNm * i; }
};

enum class SpectrumKind { Illuminant, Reflectance, Sensitivity };

/// Sampled spectral power / reflectance / sensitivity on the fixed grid.
struct Spectrum {
    SpectrumKind kind = SpectrumKind::Illuminant;
    std::array<double, SpectralGrid::kSamples> samples{};

    /// Validates: all samples finite and >= 0; reflectance samples <= 1.
    static Spectrum make(SpectrumKind kind, const std::array<double, SpectralGrid::kSamples>& samples);
};

/// Per-channel spectral sensitivities. The factory builds Gaussian channels
/// scaled so each integrates to exactly 1 over the grid, which keeps rendered
/// pixel values in a roughly [0, 1] working range.
struct SensorModel {
    Spectrum r, g, b;

    static SensorModel gaussian(const std::array<double, 3>& centers_nm,
                                const std::array<double, 3>& widths_nm);
    /// Default sensor: r/g/b Gaussians at 610/540/470 nm, width 45 nm.
    static SensorModel default_sensor();

    const Spectrum& channel(int c) const { return c == 0 ? r : (c == 1 ? g : b); }
};

/// Blackbody SPD sampled on the grid, normalized to unit mean, then shaped by
/// a linear tint ramp 1 + tint * (lambda - 550) / 170. Valid for
/// 2000 <= T <= 12000 K and |tint| <= 0.2.
Spectrum planckian_spd(double temperature_kelvin, double tint);

/// Discretized image formation: out[c] = sum_i R_c(l_i) S(l_i) L(l_i) dl.
std::array<double, 3> render_color(const Spectrum& reflectance, const Spectrum& illum,
                                   const SensorModel& sensor);

/// The library's fixed 24-patch checker reflectances: 18 smooth chromatic
/// spectra (Gaussian on a pedestal) plus a 6-step neutral ramp in patches
/// 18..23, brightest first.
const std::array<Spectrum, 24>& checker_reflectances();

struct PixelRect {
    int x = 0, y = 0, width = 0, height = 0;
};

/// Flat-patch mosaic scene. When with_checker is set, the top-left 6x4 block
/// of patches holds the fixed checker reflectances in patch order.
struct SceneSpec {
    int patches_x = 8, patches_y = 8;
    int patch_px = 8;
    bool with_checker = true;
    std::uint64_t seed = 0;
    std::vector<Spectrum> patch_reflectance; // patches_x * patches_y, row-major

    static constexpr int kCheckerCols = 6;
    static constexpr int kCheckerRows = 4;

    /// Random smooth reflectances; checker patches (if any) are overwritten
    /// with the fixed checker set.
    static SceneSpec random(int patches_x, int patches_y, int patch_px, bool with_checker, Rng rng);

    int width_px() const { return patches_x * patch_px; }
    int height_px() const { return patches_y * patch_px; }
    std::optional<PixelRect> checker_region() const;
    void validate() const;
};

struct LabeledImage {
    RawImage image;
    IlluminantRGB illuminant;  // ground truth, exposure-scaled sensor response
    CheckerColors checker;     // ground truth checker colors under this light
    int scene_id = 0;
    int illuminant_id = 0;
    std::optional<PixelRect> checker_region;
};

struct RenderOptions {
    /// Multiplicative radial shading falloff; 0 disables (the default keeps
    /// patch colors exact for oracle tests).
    double shading_strength = 0.0;
    double shading_center_x = 0.5, shading_center_y = 0.5; // relative coords
};

/// Renders every patch with its reflectance under the given illuminant.
/// The ground-truth illuminant is the exposure-scaled response to unit
/// reflectance; the ground-truth checker is rendered from the fixed checker
/// reflectances whether or not the scene places a physical checker.
LabeledImage render_scene(const SceneSpec& scene, const Spectrum& illum, const SensorModel& sensor,
                          double exposure, const RenderOptions& opts = {});

struct SynthOptions {
    int patches_x = 8, patches_y = 8;
    int patch_px = 8;
    bool with_checker = true;
    double exposure = 1.0;
    double shading_strength = 0.0;
    double temp_min = 2500.0, temp_max = 9500.0;
    double tint_min = -0.1, tint_max = 0.1;
};

struct Dataset {
    SensorModel sensor = SensorModel::default_sensor();
    SynthOptions opts;
    std::uint64_t seed = 0;
    std::vector<LabeledImage> images;
};

/// Deterministic synthetic dataset: n_illums Planckian illuminants, n_scenes
/// random scenes, scene i rendered under illuminant (i mod n_illums). All
/// randomness is derived from (seed, item index), so the result does not
/// depend on evaluation order.
Dataset synth_dataset(int n_scenes, int n_illums, const SensorModel& sensor, std::uint64_t seed,
                      const SynthOptions& opts = {});

} // namespace clcc
