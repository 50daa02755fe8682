// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the clcc project.

#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "clcc/baselines.hpp"
#include "clcc/rng.hpp"
#include "clcc/scene_synth.hpp"

using namespace clcc;

namespace {

RawImage uniform_image(int w, int h, double r, double g, double b) {
    RawImage img = RawImage::zeros(w, h);
    for (std::size_t i = 0; i < img.data.size(); i += 3) {
        img.data[i] = r;
        img.data[i + 1] = g;
        img.data[i + 2] = b;
    }
    return img;
}

// Scene whose patch reflectances average to a flat (neutral) spectrum:
// random patches paired with their complements about 0.5.
LabeledImage mean_neutral_scene(std::uint64_t seed) {
    SceneSpec scene;
    scene.patches_x = 8;
    scene.patches_y = 8;
    scene.patch_px = 4;
    scene.with_checker = false;
    scene.seed = seed;
    Rng rng(seed);
    scene.patch_reflectance.resize(64);
    for (int i = 0; i < 32; ++i) {
        std::array<double, SpectralGrid::kSamples> s{};
        for (double& v : s) {
            v = rng.uniform(0.05, 0.95);
        }
        std::array<double, SpectralGrid::kSamples> comp{};
        for (int k = 0; k < SpectralGrid::kSamples; ++k) {
            comp[k] = 1.0 - s[k];
        }
        scene.patch_reflectance[2 * i] = Spectrum::make(SpectrumKind::Reflectance, s);
        scene.patch_reflectance[2 * i + 1] = Spectrum::make(SpectrumKind::Reflectance, comp);
    }
    return render_scene(scene, planckian_spd(4700.0, 0.04), SensorModel::default_sensor(), 1.0);
}

} // namespace

TEST_SUITE("baselines") {

TEST_CASE("gray_world of a constant image is its direction") {
    const IlluminantRGB est = gray_world(uniform_image(6, 4, 2.0, 1.0, 1.0));
    CHECK(angular_error_degrees(est, IlluminantRGB(2, 1, 1)) < 1e-9);
    CHECK(est.norm() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("gray_world recovers the illuminant on a mean-neutral scene") {
    const LabeledImage img = mean_neutral_scene(5);
    CHECK(angular_error_degrees(gray_world(img.image), img.illuminant) < 0.1);
}

TEST_CASE("gray_world is invariant to pixel shuffling") {
    Rng rng(6);
    RawImage img = RawImage::zeros(8, 8);
    for (double& v : img.data) {
        v = rng.uniform();
    }
    const IlluminantRGB before = gray_world(img);
    // Shuffle whole pixels.
    std::vector<std::array<double, 3>> pixels(64);
    for (int i = 0; i < 64; ++i) {
        pixels[i] = {img.data[3 * i], img.data[3 * i + 1], img.data[3 * i + 2]};
    }
    rng.shuffle(pixels.begin(), pixels.end());
    for (int i = 0; i < 64; ++i) {
        img.data[3 * i] = pixels[i][0];
        img.data[3 * i + 1] = pixels[i][1];
        img.data[3 * i + 2] = pixels[i][2];
    }
    CHECK(angular_error_degrees(before, gray_world(img)) < 1e-9);
}

TEST_CASE("gray_world rejects an all-black image") {
    CHECK_THROWS_AS(gray_world(uniform_image(4, 4, 0, 0, 0)), DomainError);
}

TEST_CASE("white_patch finds a bright neutral patch") {
    const Dataset ds = synth_dataset(1, 1, SensorModel::default_sensor(), 8,
                                     SynthOptions{.patch_px = 4});
    const LabeledImage& img = ds.images[0];
    // The checker's brightest neutral patch dominates every channel.
    CHECK(angular_error_degrees(white_patch(img.image), img.illuminant) < 0.1);
}

TEST_CASE("white_patch equals gray_world on a uniform image") {
    const RawImage img = uniform_image(5, 5, 0.7, 0.4, 0.9);
    CHECK(angular_error_degrees(white_patch(img), gray_world(img)) < 1e-9);
}

TEST_CASE("white_patch is scale invariant") {
    Rng rng(9);
    RawImage img = RawImage::zeros(6, 6);
    for (double& v : img.data) {
        v = rng.uniform();
    }
    RawImage doubled = img;
    for (double& v : doubled.data) {
        v *= 2.0;
    }
    CHECK(angular_error_degrees(white_patch(img), white_patch(doubled)) < 1e-12);
}

TEST_CASE("shades_of_gray at p=1 equals gray_world") {
    Rng rng(10);
    RawImage img = RawImage::zeros(9, 7);
    for (double& v : img.data) {
        v = rng.uniform(0.01, 1.0);
    }
    CHECK(angular_error_degrees(shades_of_gray(img, 1.0), gray_world(img)) < 1e-9);
}

TEST_CASE("shades_of_gray at large p approaches white_patch") {
    // High dynamic range: one hot pixel over a dim background.
    RawImage img = uniform_image(16, 16, 0.02, 0.05, 0.03);
    double* hot = img.pixel(11, 5);
    hot[0] = 0.9;
    hot[1] = 0.6;
    hot[2] = 1.2;
    CHECK(angular_error_degrees(shades_of_gray(img, 64.0), white_patch(img)) < 0.5);
}

TEST_CASE("shades_of_gray interpolates between the two monotonically") {
    RawImage img = uniform_image(16, 16, 0.1, 0.08, 0.02);
    double* hot = img.pixel(3, 9);
    hot[0] = 0.5;
    hot[1] = 0.9;
    hot[2] = 1.1;
    const IlluminantRGB wp = white_patch(img);
    double prev = angular_error_degrees(shades_of_gray(img, 1.0), wp);
    for (double p : {2.0, 4.0, 8.0, 16.0, 64.0}) {
        const double d = angular_error_degrees(shades_of_gray(img, p), wp);
        CHECK(d <= prev + 1e-9);
        prev = d;
    }
}

TEST_CASE("shades_of_gray uniform image direction for any p") {
    const RawImage img = uniform_image(4, 4, 0.3, 0.6, 0.2);
    for (double p : {1.0, 2.0, 6.0, 32.0}) {
        CHECK(angular_error_degrees(shades_of_gray(img, p), IlluminantRGB(0.3, 0.6, 0.2)) < 1e-7);
    }
}

TEST_CASE("gray_edge on a two-patch image recovers |a - b|") {
    // Left half color a, right half color b; one vertical edge.
    const double a[3] = {0.8, 0.3, 0.1};
    const double b[3] = {0.2, 0.6, 0.4};
    RawImage img = RawImage::zeros(8, 6);
    for (int y = 0; y < 6; ++y) {
        for (int x = 0; x < 8; ++x) {
            double* p = img.pixel(x, y);
            for (int c = 0; c < 3; ++c) {
                p[c] = (x < 4) ? a[c] : b[c];
            }
        }
    }
    const IlluminantRGB est = gray_edge(img, 6.0);
    const IlluminantRGB expected(std::abs(a[0] - b[0]), std::abs(a[1] - b[1]),
                                 std::abs(a[2] - b[2]));
    CHECK(angular_error_degrees(est, expected) < 1e-6);
}

TEST_CASE("gray_edge rejects flat and tiny images") {
    CHECK_THROWS_AS(gray_edge(uniform_image(8, 8, 0.4, 0.4, 0.4)), DomainError);
    CHECK_THROWS_AS(gray_edge(uniform_image(2, 2, 0.4, 0.2, 0.4)), DomainError);
}

TEST_CASE("gray_edge is invariant to global intensity scaling") {
    Rng rng(12);
    RawImage img = RawImage::zeros(10, 10);
    for (double& v : img.data) {
        v = rng.uniform();
    }
    RawImage scaled = img;
    for (double& v : scaled.data) {
        v *= 3.7;
    }
    // The arccos noise floor near zero angle is ~1e-6 degrees.
    CHECK(angular_error_degrees(gray_edge(img), gray_edge(scaled)) < 1e-5);
}

TEST_CASE("estimators return positive unit vectors on synthetic data") {
    const Dataset ds = synth_dataset(4, 4, SensorModel::default_sensor(), 13,
                                     SynthOptions{.patch_px = 4});
    for (const auto& img : ds.images) {
        for (const IlluminantRGB est :
             {gray_world(img.image), white_patch(img.image), shades_of_gray(img.image, 6.0),
              gray_edge(img.image, 6.0)}) {
            CHECK(est.norm() == doctest::Approx(1.0).epsilon(1e-9));
            CHECK(est.r >= 0.0);
            CHECK(est.g >= 0.0);
            CHECK(est.b >= 0.0);
        }
    }
}

} // TEST_SUITE
