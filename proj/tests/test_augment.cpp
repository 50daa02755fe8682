// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the clcc project.

#include <doctest.h>

#include <cmath>
#include <vector>

#include "clcc/augment.hpp"

using namespace clcc;

namespace {

RawImage uniform_image(int w, int h, double v) {
    RawImage img = RawImage::zeros(w, h);
    for (double& x : img.data) {
        x = v;
    }
    return img;
}

CheckerColors apply_to_checker(const CheckerColors& c, const ColorMatrix3& m) {
    CheckerColors out;
    for (int p = 0; p < 24; ++p) {
        for (int j = 0; j < 3; ++j) {
            out.colors[p][j] =
                c.colors[p][0] * m.at(0, j) + c.colors[p][1] * m.at(1, j) + c.colors[p][2] * m.at(2, j);
        }
    }
    return out;
}

double checker_max_abs_diff(const CheckerColors& a, const CheckerColors& b) {
    double d = 0.0;
    for (int p = 0; p < 24; ++p) {
        for (int c = 0; c < 3; ++c) {
            d = std::max(d, std::abs(a.colors[p][c] - b.colors[p][c]));
        }
    }
    return d;
}

LabeledImage render_sample(double temp_k, double tint, std::uint64_t scene_seed, int scene_id) {
    const SensorModel sensor = SensorModel::default_sensor();
    LabeledImage img = render_scene(SceneSpec::random(8, 8, 2, true, Rng(scene_seed)),
                                    planckian_spd(temp_k, tint), sensor, 1.0);
    img.scene_id = scene_id;
    img.illuminant_id = scene_id;
    return img;
}

} // namespace

TEST_SUITE("augment") {

TEST_CASE("perturb identity configuration is exact") {
    Rng rng(1);
    RawImage img = RawImage::zeros(8, 8);
    for (double& v : img.data) {
        v = rng.uniform();
    }
    Rng prng(2);
    const RawImage out = perturb(img, PerturbConfig::disabled(), prng);
    CHECK(out.data == img.data);
}

TEST_CASE("perturb expected value equals gain * image (Monte Carlo)") {
    PerturbConfig cfg;
    cfg.gain_min = cfg.gain_max = 1.1;
    cfg.gauss_std_min = cfg.gauss_std_max = 0.02;
    cfg.shot_std_min = cfg.shot_std_max = 0.03;
    const double v = 0.5;
    const RawImage img = uniform_image(16, 16, v);
    Rng rng(7);
    double sum = 0.0;
    std::size_t n = 0;
    for (int rep = 0; rep < 30; ++rep) {
        const RawImage out = perturb(img, cfg, rng);
        for (double y : out.data) {
            sum += y;
        }
        n += out.data.size();
    }
    const double mean = sum / static_cast<double>(n);
    const double value_std = std::sqrt(v * 0.03 * 0.03 + 0.02 * 0.02);
    const double se = value_std / std::sqrt(static_cast<double>(n));
    CHECK(std::abs(mean - 1.1 * v) < 3.0 * se);
}

TEST_CASE("shot noise variance is proportional to intensity (Monte Carlo)") {
    PerturbConfig cfg;
    cfg.gain_min = cfg.gain_max = 1.0;
    cfg.gauss_std_min = cfg.gauss_std_max = 0.0;
    cfg.shot_std_min = cfg.shot_std_max = 0.04;

    auto variance_at = [&](double v, std::uint64_t seed) {
        const RawImage img = uniform_image(16, 16, v);
        Rng rng(seed);
        double sum = 0.0, sum2 = 0.0;
        std::size_t n = 0;
        for (int rep = 0; rep < 20; ++rep) {
            const RawImage out = perturb(img, cfg, rng);
            for (double y : out.data) {
                sum += y;
                sum2 += y * y;
            }
            n += out.data.size();
        }
        const double mean = sum / static_cast<double>(n);
        return sum2 / static_cast<double>(n) - mean * mean;
    };

    const double ratio = variance_at(0.25, 11) / variance_at(1.0, 12);
    CHECK(ratio == doctest::Approx(0.25).epsilon(0.10));
}

TEST_CASE("perturb clamps at zero") {
    PerturbConfig cfg;
    cfg.gain_min = cfg.gain_max = 1.0;
    cfg.gauss_std_min = cfg.gauss_std_max = 0.5; // huge noise on a dim image
    cfg.shot_std_min = cfg.shot_std_max = 0.0;
    Rng rng(3);
    const RawImage out = perturb(uniform_image(16, 16, 0.05), cfg, rng);
    for (double v : out.data) {
        CHECK(v >= 0.0);
    }
}

TEST_CASE("synth_novel_checker endpoints and midpoint") {
    const LabeledImage a = render_sample(3000.0, 0.0, 1, 0);
    const LabeledImage b = render_sample(8000.0, 0.05, 2, 1);
    CHECK(checker_max_abs_diff(synth_novel_checker(a.checker, b.checker, 0.0), a.checker) == 0.0);
    CHECK(checker_max_abs_diff(synth_novel_checker(a.checker, b.checker, 1.0), b.checker) == 0.0);
    const CheckerColors mid = synth_novel_checker(a.checker, b.checker, 0.5);
    for (int p = 0; p < 24; ++p) {
        for (int c = 0; c < 3; ++c) {
            CHECK(mid.colors[p][c] ==
                  doctest::Approx(0.5 * (a.checker.colors[p][c] + b.checker.colors[p][c]))
                      .epsilon(1e-12));
        }
    }
}

TEST_CASE("interpolate_transform endpoints and midpoint") {
    ColorMatrix3 m_ab = ColorMatrix3::diagonal(3.0, 1.0, 1.0);
    CHECK(interpolate_transform(m_ab, 0.0, InterpDirection::AtoC)
              .max_abs_diff(ColorMatrix3::identity()) == 0.0);
    CHECK(interpolate_transform(m_ab, 1.0, InterpDirection::AtoC).max_abs_diff(m_ab) == 0.0);
    CHECK(interpolate_transform(m_ab, 0.5, InterpDirection::AtoC)
              .max_abs_diff(ColorMatrix3::diagonal(2.0, 1.0, 1.0)) < 1e-15);
    // B-to-C direction: w = 0 lands on M_BA (the paper's C at A's end).
    CHECK(interpolate_transform(m_ab, 0.0, InterpDirection::BtoC).max_abs_diff(m_ab) == 0.0);
    CHECK(interpolate_transform(m_ab, 1.0, InterpDirection::BtoC)
              .max_abs_diff(ColorMatrix3::identity()) == 0.0);
}

TEST_CASE("interpolated transform equals a least-squares refit (no clamping regime)") {
    Rng rng(19);
    const double ws[] = {-1.5, -0.3, 0.3, 0.5, 1.5};
    for (int trial = 0; trial < 50; ++trial) {
        CheckerColors c_a;
        for (auto& row : c_a.colors) {
            for (double& v : row) {
                v = rng.uniform(0.2, 1.0);
            }
        }
        ColorMatrix3 m;
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                m.at(i, j) = (i == j) ? rng.uniform(0.95, 1.05) : rng.uniform(-0.004, 0.004);
            }
        }
        const CheckerColors c_b = apply_to_checker(c_a, m);
        const ColorMatrix3 m_ab = fit_color_transform(c_a, c_b).m;
        for (double w : ws) {
            const CheckerColors c_c = synth_novel_checker(c_a, c_b, w);
            const ColorMatrix3 shortcut = interpolate_transform(m_ab, w, InterpDirection::AtoC);
            const ColorMatrix3 refit = fit_color_transform(c_a, c_c).m;
            CHECK(shortcut.max_abs_diff(refit) < 1e-6);
        }
    }
}

TEST_CASE("relight_full with the source checker is the identity") {
    const LabeledImage a = render_sample(5200.0, 0.0, 3, 0);
    const RelightResult res = relight_full(a.image, a.checker, a.checker);
    for (std::size_t i = 0; i < a.image.data.size(); ++i) {
        CHECK(std::abs(res.image.data[i] - a.image.data[i]) < 1e-9);
    }
    CHECK(res.fit_residual < 1e-9);
}

TEST_CASE("relight_full reproduces an exactly consistent target checker") {
    const LabeledImage a = render_sample(4300.0, -0.02, 4, 0);
    ColorMatrix3 m = ColorMatrix3::diagonal(1.25, 1.0, 0.8);
    m.at(0, 1) = 0.04;
    m.at(2, 1) = 0.03;
    const CheckerColors c_b = apply_to_checker(a.checker, m);
    const RelightResult res = relight_full(a.image, a.checker, c_b);
    CHECK(res.fit_residual < 1e-9);
    CHECK(checker_max_abs_diff(res.checker, c_b) < 1e-6);
    // The returned ground truth tracks the relit neutral ramp.
    const auto ramp = c_b.neutral_ramp_mean();
    CHECK(angular_error_degrees(res.illuminant, IlluminantRGB(ramp[0], ramp[1], ramp[2])) < 1e-9);
}

TEST_CASE("relight_full at w=0.5 is consistent with the novel checker") {
    const LabeledImage a = render_sample(3200.0, 0.02, 5, 0);
    const LabeledImage b = render_sample(7600.0, -0.04, 6, 1);
    const RelightResult res = relight_full(a.image, a.checker, b.checker, 0.5);
    const CheckerColors novel = synth_novel_checker(a.checker, b.checker, 0.5);
    const double diff = checker_max_abs_diff(res.checker, novel);
    // The shortcut differs from the novel checker by at most w * fit residual.
    CHECK(diff <= std::max(2.0 * res.fit_residual, 1e-9));
}

TEST_CASE("relight_wb identity and neutral mapping") {
    const LabeledImage a = render_sample(2900.0, 0.0, 7, 0);
    const RawImage same = relight_wb(a.image, a.illuminant, a.illuminant);
    for (std::size_t i = 0; i < a.image.data.size(); ++i) {
        CHECK(std::abs(same.data[i] - a.image.data[i]) < 1e-9);
    }

    const IlluminantRGB l_dst(0.9, 0.7, 0.4);
    RawImage neutral = uniform_image(2, 2, 0.0);
    neutral.pixel(0, 0)[0] = 0.6 * a.illuminant.r;
    neutral.pixel(0, 0)[1] = 0.6 * a.illuminant.g;
    neutral.pixel(0, 0)[2] = 0.6 * a.illuminant.b;
    const RawImage moved = relight_wb(neutral, a.illuminant, l_dst);
    const double* p = moved.pixel(0, 0);
    CHECK(angular_error_degrees(IlluminantRGB(p[0], p[1], p[2]), l_dst) < 1e-6);
}

TEST_CASE("relight_wb round trip is exact") {
    const LabeledImage a = render_sample(3600.0, 0.03, 8, 0);
    const IlluminantRGB l_b(0.5, 0.8, 1.1);
    const RawImage there = relight_wb(a.image, a.illuminant, l_b);
    const RawImage back = relight_wb(there, l_b, a.illuminant);
    for (std::size_t i = 0; i < a.image.data.size(); ++i) {
        CHECK(std::abs(back.data[i] - a.image.data[i]) < 1e-9);
    }
}

TEST_CASE("mix weight sampling never enters the dead zone") {
    MixWeightConfig mix;
    Rng rng(23);
    for (int i = 0; i < 10000; ++i) {
        const double w = mix.sample(rng);
        CHECK(std::abs(w) >= 0.3);
        CHECK(std::abs(w) <= 5.0);
    }
}

TEST_CASE("build_quadruple invariants hold over 1000 seeded draws") {
    const Dataset ds = synth_dataset(12, 12, SensorModel::default_sensor(), 41,
                                     SynthOptions{.patch_px = 2});
    MixWeightConfig mix;
    PerturbConfig pcfg;
    Rng rng(60);
    int built = 0;
    for (int draw = 0; built < 1000 && draw < 4000; ++draw) {
        const int i = rng.uniform_int(static_cast<int>(ds.images.size()));
        int j = rng.uniform_int(static_cast<int>(ds.images.size()));
        if (j == i) {
            continue;
        }
        const AugMode mode = (draw % 2 == 0) ? AugMode::FullAug : AugMode::WBAug;
        Rng qrng = rng.fork(99, static_cast<std::uint64_t>(draw));
        ContrastiveQuadruple quad;
        try {
            quad = build_quadruple(ds.images[i], ds.images[j], mode, mix, pcfg, qrng);
        } catch (const IlluminantsTooCloseError&) {
            continue;
        }
        ++built;
        // Positive family shares L_A; negative family shares a distinct L_C.
        CHECK(angular_error_degrees(quad.anchor_illuminant, ds.images[i].illuminant) < 1e-6);
        CHECK(angular_error_degrees(quad.anchor_illuminant, quad.novel_illuminant) > 0.1);
        CHECK(std::abs(quad.w) >= 0.3);
        CHECK(quad.scene_a == ds.images[i].scene_id);
        CHECK(quad.scene_b == ds.images[j].scene_id);
        for (const RawImage* view :
             {&quad.anchor, &quad.easy_pos, &quad.hard_pos, &quad.easy_neg, &quad.hard_neg}) {
            CHECK(view->width == ds.images[i].image.width);
            for (double v : view->data) {
                CHECK(v >= 0.0);
                CHECK(std::isfinite(v));
            }
        }
    }
    CHECK(built == 1000);
}

TEST_CASE("WBAug endpoint: w=1 with perturbation disabled reproduces relight_wb") {
    const LabeledImage a = render_sample(3100.0, 0.0, 9, 0);
    const LabeledImage b = render_sample(8200.0, 0.0, 10, 1);
    Rng rng(71);
    const ContrastiveQuadruple quad =
        build_quadruple(a, b, AugMode::WBAug, 1.0, PerturbConfig::disabled(), rng);
    const RawImage expected = relight_wb(a.image, a.illuminant, b.illuminant);
    CHECK(quad.hard_neg.data == expected.data);
    // And the easy positive is the untouched anchor image.
    CHECK(quad.easy_pos.data == a.image.data);
}

TEST_CASE("rank-deficient checkers fall back to the WB mapping") {
    LabeledImage a = render_sample(3500.0, 0.0, 11, 0);
    LabeledImage b = render_sample(7000.0, 0.0, 12, 1);
    for (auto& row : a.checker.colors) {
        row = {0.5, 0.4, 0.3}; // rank 1: full fit must give way to WB
    }
    Rng rng(81);
    const ContrastiveQuadruple quad =
        build_quadruple(a, b, AugMode::FullAug, 0.8, PerturbConfig::disabled(), rng);
    CHECK(quad.mode_requested == AugMode::FullAug);
    CHECK(quad.mode_used == AugMode::WBAug);
}

TEST_CASE("hard positive in WBAug carries the anchor illuminant exactly") {
    const LabeledImage a = render_sample(3300.0, 0.01, 13, 0);
    const LabeledImage b = render_sample(6800.0, -0.03, 14, 1);
    Rng rng(91);
    const ContrastiveQuadruple quad =
        build_quadruple(a, b, AugMode::WBAug, 0.7, PerturbConfig::disabled(), rng);
    // The relit neutral colors of sample B must point at L_A.
    const auto& neutral = b.checker.colors[CheckerColors::kNeutralStart];
    RawImage probe = RawImage::zeros(1, 1);
    probe.pixel(0, 0)[0] = neutral[0];
    probe.pixel(0, 0)[1] = neutral[1];
    probe.pixel(0, 0)[2] = neutral[2];
    const RawImage relit = relight_wb(probe, b.illuminant, a.illuminant);
    const double* p = relit.pixel(0, 0);
    CHECK(angular_error_degrees(IlluminantRGB(p[0], p[1], p[2]), a.illuminant) < 1e-6);
}

TEST_CASE("pair preconditions are enforced") {
    const LabeledImage a = render_sample(5000.0, 0.0, 15, 0);
    LabeledImage same_scene = render_sample(6500.0, 0.0, 16, 0);
    Rng rng(101);
    CHECK_THROWS_AS(
        build_quadruple(a, same_scene, AugMode::WBAug, 0.5, PerturbConfig::disabled(), rng),
        DomainError);

    LabeledImage near_dup = render_sample(5000.0, 0.0, 17, 1);
    CHECK_THROWS_AS(
        build_quadruple(a, near_dup, AugMode::WBAug, 0.5, PerturbConfig::disabled(), rng),
        IlluminantsTooCloseError);
}

} // TEST_SUITE
