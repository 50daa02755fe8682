// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the clcc project.

#include <doctest.h>

#include <cmath>
#include <set>

#include "clcc/scene_synth.hpp"

using namespace clcc;

namespace {

Spectrum unit_reflectance() {
    std::array<double, SpectralGrid::kSamples> s{};
    s.fill(1.0);
    return Spectrum::make(SpectrumKind::Reflectance, s);
}

} // namespace

TEST_SUITE("scene_synth") {

TEST_CASE("planckian peak matches Wien displacement at 6500 K") {
    const Spectrum spd = planckian_spd(6500.0, 0.0);
    int peak = 0;
    for (int i = 1; i < SpectralGrid::kSamples; ++i) {
        if (spd.samples[i] > spd.samples[peak]) {
            peak = i;
        }
    }
    const double wien_nm = 2.897771955e6 / 6500.0; // ~445.8 nm
    CHECK(std::abs(SpectralGrid::wavelength(peak) - wien_nm) <= SpectralGrid::kStepNm);
}

TEST_CASE("planckian SPD is strictly positive and unit mean at zero tint") {
    const Spectrum spd = planckian_spd(4200.0, 0.0);
    double mean = 0.0;
    for (double v : spd.samples) {
        CHECK(v > 0.0);
        mean += v;
    }
    CHECK(mean / SpectralGrid::kSamples == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("hotter blackbody renders bluer") {
    const SensorModel sensor = SensorModel::default_sensor();
    const Spectrum warm = planckian_spd(3000.0, 0.0);
    const Spectrum cool = planckian_spd(8000.0, 0.0);
    const auto lw = render_color(unit_reflectance(), warm, sensor);
    const auto lc = render_color(unit_reflectance(), cool, sensor);
    CHECK(lc[2] / lc[0] > lw[2] / lw[0]);
}

TEST_CASE("planckian rejects out-of-range inputs") {
    CHECK_THROWS_AS(planckian_spd(1500.0, 0.0), DomainError);
    CHECK_THROWS_AS(planckian_spd(13000.0, 0.0), DomainError);
    CHECK_THROWS_AS(planckian_spd(6500.0, 0.3), DomainError);
}

TEST_CASE("render_color of zero reflectance is black") {
    std::array<double, SpectralGrid::kSamples> z{};
    const auto out = render_color(Spectrum::make(SpectrumKind::Reflectance, z),
                                  planckian_spd(6500.0, 0.0), SensorModel::default_sensor());
    CHECK(out[0] == 0.0);
    CHECK(out[1] == 0.0);
    CHECK(out[2] == 0.0);
}

TEST_CASE("render_color with a delta-like sensor reduces to one term") {
    // Sensor with a single nonzero sensitivity sample at 540 nm.
    std::array<double, SpectralGrid::kSamples> s{};
    const int idx = 16; // 380 + 16*10 = 540
    s[idx] = 0.7;
    SensorModel sensor = SensorModel::default_sensor();
    sensor.g = Spectrum::make(SpectrumKind::Sensitivity, s);

    const Spectrum illum = planckian_spd(5000.0, 0.05);
    std::array<double, SpectralGrid::kSamples> refl{};
    for (int i = 0; i < SpectralGrid::kSamples; ++i) {
        refl[i] = 0.3 + 0.4 * std::abs(std::sin(i * 0.37));
    }
    const Spectrum reflectance = Spectrum::make(SpectrumKind::Reflectance, refl);
    const auto out = render_color(reflectance, illum, sensor);
    const double expected = 0.7 * refl[idx] * illum.samples[idx] * SpectralGrid::kStepNm;
    CHECK(out[1] == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("rendering is bilinear in reflectance and illuminant") {
    const SensorModel sensor = SensorModel::default_sensor();
    const Spectrum illum = planckian_spd(4500.0, -0.03);
    std::array<double, SpectralGrid::kSamples> refl{};
    for (int i = 0; i < SpectralGrid::kSamples; ++i) {
        refl[i] = 0.2 + 0.01 * i;
    }
    const Spectrum s = Spectrum::make(SpectrumKind::Reflectance, refl);

    const double alpha = 0.35, beta = 2.4;
    std::array<double, SpectralGrid::kSamples> refl_scaled{};
    std::array<double, SpectralGrid::kSamples> illum_scaled{};
    for (int i = 0; i < SpectralGrid::kSamples; ++i) {
        refl_scaled[i] = alpha * refl[i];
        illum_scaled[i] = beta * illum.samples[i];
    }
    const auto base = render_color(s, illum, sensor);
    const auto scaled = render_color(Spectrum::make(SpectrumKind::Reflectance, refl_scaled),
                                     Spectrum::make(SpectrumKind::Illuminant, illum_scaled), sensor);
    for (int c = 0; c < 3; ++c) {
        CHECK(scaled[c] == doctest::Approx(alpha * beta * base[c]).epsilon(1e-12));
    }
}

TEST_CASE("render_scene exposure scaling is exact") {
    const SensorModel sensor = SensorModel::default_sensor();
    const Spectrum illum = planckian_spd(5600.0, 0.02);
    const SceneSpec scene = SceneSpec::random(8, 8, 4, true, Rng(21));
    const LabeledImage one = render_scene(scene, illum, sensor, 1.0);
    const LabeledImage two = render_scene(scene, illum, sensor, 2.0);
    for (std::size_t i = 0; i < one.image.data.size(); ++i) {
        CHECK(two.image.data[i] == 2.0 * one.image.data[i]);
    }
    CHECK(two.illuminant.r == 2.0 * one.illuminant.r);
    CHECK(two.illuminant.b == 2.0 * one.illuminant.b);
    for (int p = 0; p < 24; ++p) {
        for (int c = 0; c < 3; ++c) {
            CHECK(two.checker.colors[p][c] == 2.0 * one.checker.colors[p][c]);
        }
    }
}

TEST_CASE("brightest neutral checker patch points at the ground-truth illuminant") {
    const SensorModel sensor = SensorModel::default_sensor();
    const Spectrum illum = planckian_spd(3400.0, -0.05);
    const SceneSpec scene = SceneSpec::random(8, 8, 4, true, Rng(22));
    const LabeledImage img = render_scene(scene, illum, sensor, 1.0);
    const auto& neutral = img.checker.colors[CheckerColors::kNeutralStart];
    const IlluminantRGB patch(neutral[0], neutral[1], neutral[2]);
    CHECK(angular_error_degrees(patch, img.illuminant) < 1e-6);
}

TEST_CASE("checker ground truth does not depend on the scene") {
    const SensorModel sensor = SensorModel::default_sensor();
    const Spectrum illum = planckian_spd(7200.0, 0.08);
    const LabeledImage a = render_scene(SceneSpec::random(8, 8, 4, true, Rng(1)), illum, sensor, 1.0);
    const LabeledImage b = render_scene(SceneSpec::random(8, 8, 4, false, Rng(2)), illum, sensor, 1.0);
    CHECK(a.checker.colors == b.checker.colors);
}

TEST_CASE("checker pixels equal the ground-truth checker colors") {
    const SensorModel sensor = SensorModel::default_sensor();
    const Spectrum illum = planckian_spd(5100.0, 0.0);
    const SceneSpec scene = SceneSpec::random(8, 8, 4, true, Rng(23));
    const LabeledImage img = render_scene(scene, illum, sensor, 1.3);
    REQUIRE(img.checker_region.has_value());
    for (int row = 0; row < SceneSpec::kCheckerRows; ++row) {
        for (int col = 0; col < SceneSpec::kCheckerCols; ++col) {
            const double* p = img.image.pixel(col * scene.patch_px, row * scene.patch_px);
            const auto& want = img.checker.colors[row * SceneSpec::kCheckerCols + col];
            for (int c = 0; c < 3; ++c) {
                CHECK(std::abs(p[c] - want[c]) < 1e-9);
            }
        }
    }
}

TEST_CASE("white balancing a render makes neutral patches achromatic") {
    const SensorModel sensor = SensorModel::default_sensor();
    const Spectrum illum = planckian_spd(2900.0, 0.04);
    const SceneSpec scene = SceneSpec::random(8, 8, 4, true, Rng(24));
    const LabeledImage img = render_scene(scene, illum, sensor, 1.0);
    const RawImage balanced = apply_color_matrix(img.image, wb_matrix(img.illuminant));
    // Neutral ramp patches live in checker row 3 (patches 18..23).
    for (int col = 0; col < SceneSpec::kCheckerCols; ++col) {
        const double* p = balanced.pixel(col * scene.patch_px + 1, 3 * scene.patch_px + 1);
        const double mean = (p[0] + p[1] + p[2]) / 3.0;
        for (int c = 0; c < 3; ++c) {
            CHECK(std::abs(p[c] - mean) / mean < 1e-6);
        }
    }
}

TEST_CASE("synth_dataset is deterministic and labels are coherent") {
    const SensorModel sensor = SensorModel::default_sensor();
    const Dataset a = synth_dataset(6, 3, sensor, 99);
    const Dataset b = synth_dataset(6, 3, sensor, 99);
    REQUIRE(a.images.size() == 6);
    for (std::size_t i = 0; i < a.images.size(); ++i) {
        CHECK(a.images[i].image.data == b.images[i].image.data);
        CHECK(a.images[i].scene_id == b.images[i].scene_id);
        CHECK(a.images[i].illuminant_id == static_cast<int>(i % 3));
    }
    // Same illuminant id implies identical ground truth.
    CHECK(angular_error_degrees(a.images[0].illuminant, a.images[3].illuminant) < 1e-12);
}

TEST_CASE("synth_dataset single image") {
    const Dataset ds = synth_dataset(1, 1, SensorModel::default_sensor(), 5);
    CHECK(ds.images.size() == 1);
}

TEST_CASE("synth_dataset illuminants are positive and pairwise distinct") {
    const Dataset ds = synth_dataset(40, 40, SensorModel::default_sensor(), 7);
    for (const auto& img : ds.images) {
        CHECK(img.illuminant.r > 0.0);
        CHECK(img.illuminant.g > 0.0);
        CHECK(img.illuminant.b > 0.0);
    }
    for (std::size_t i = 0; i < ds.images.size(); ++i) {
        for (std::size_t j = i + 1; j < ds.images.size(); ++j) {
            if (ds.images[i].illuminant_id != ds.images[j].illuminant_id) {
                CHECK(angular_error_degrees(ds.images[i].illuminant, ds.images[j].illuminant) > 0.0);
            }
        }
    }
}

TEST_CASE("exposure does not change angular error") {
    const SensorModel sensor = SensorModel::default_sensor();
    const Spectrum illum = planckian_spd(6100.0, 0.0);
    const SceneSpec scene = SceneSpec::random(8, 8, 4, true, Rng(31));
    const LabeledImage one = render_scene(scene, illum, sensor, 1.0);
    const LabeledImage big = render_scene(scene, illum, sensor, 3.7);
    const IlluminantRGB estimate(0.4, 0.8, 0.45);
    CHECK(std::abs(angular_error_degrees(estimate, one.illuminant) -
                   angular_error_degrees(estimate, big.illuminant)) < 1e-9);
}

TEST_CASE("reflectance spectra respect their bounds") {
    std::array<double, SpectralGrid::kSamples> overshoot{};
    overshoot.fill(1.2);
    CHECK_THROWS_AS(Spectrum::make(SpectrumKind::Reflectance, overshoot), DomainError);
    const auto& checker = checker_reflectances();
    for (const auto& patch : checker) {
        for (double v : patch.samples) {
            CHECK(v >= 0.0);
            CHECK(v <= 0.9);
        }
    }
}

TEST_CASE("scene validation catches a corrupted checker block") {
    SceneSpec scene = SceneSpec::random(8, 8, 4, true, Rng(40));
    scene.patch_reflectance[0] = scene.patch_reflectance[50];
    CHECK_THROWS_AS(scene.validate(), DomainError);
}

} // TEST_SUITE
