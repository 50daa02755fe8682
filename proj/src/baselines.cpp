// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the clcc project.

#include "clcc/baselines.hpp"

#include <algorithm>
#include <cmath>

namespace clcc {

namespace {

IlluminantRGB direction_or_throw(double r, double g, double b, const char* what) {
    if (!(r > 0.0 || g > 0.0 || b > 0.0)) {
        throw DomainError(what);
    }
    return IlluminantRGB(r, g, b).normalized();
}

void check_image(const RawImage& img) {
    if (img.width <= 0 || img.height <= 0 ||
        img.data.size() != static_cast<std::size_t>(img.width) * img.height * 3) {
        throw DomainError("invalid image");
    }
}

} // namespace

IlluminantRGB gray_world(const RawImage& img) {
    check_image(img);
    double acc[3] = {0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < img.data.size(); i += 3) {
        acc[0] += img.data[i];
        acc[1] += img.data[i + 1];
        acc[2] += img.data[i + 2];
    }
    return direction_or_throw(acc[0], acc[1], acc[2], "gray_world of an all-black image");
}

IlluminantRGB white_patch(const RawImage& img) {
    check_image(img);
    double mx[3] = {0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < img.data.size(); i += 3) {
        mx[0] = std::max(mx[0], img.data[i]);
        mx[1] = std::max(mx[1], img.data[i + 1]);
        mx[2] = std::max(mx[2], img.data[i + 2]);
    }
    return direction_or_throw(mx[0], mx[1], mx[2], "white_patch of an all-black image");
}

IlluminantRGB shades_of_gray(const RawImage& img, double p) {
    check_image(img);
    if (!(p >= 1.0)) {
        throw DomainError("Minkowski norm needs p >= 1");
    }
    // Normalize by the max to keep v^p in range for large p; the direction
    // is scale invariant so the factor cancels.
    double mx = 0.0;
    for (double v : img.data) {
        mx = std::max(mx, v);
    }
    if (!(mx > 0.0)) {
        throw DomainError("shades_of_gray of an all-black image");
    }
    double acc[3] = {0.0, 0.0, 0.0};
    const std::size_t npix = img.data.size() / 3;
    for (std::size_t i = 0; i < img.data.size(); i += 3) {
        for (int c = 0; c < 3; ++c) {
            acc[c] += std::pow(img.data[i + static_cast<std::size_t>(c)] / mx, p);
        }
    }
    for (double& v : acc) {
        v = std::pow(v / static_cast<double>(npix), 1.0 / p);
    }
    return direction_or_throw(acc[0], acc[1], acc[2], "shades_of_gray of an all-black image");
}

IlluminantRGB gray_edge(const RawImage& img, double p) {
    check_image(img);
    if (img.width < 3 || img.height < 3) {
        throw DomainError("gray_edge needs at least a 3x3 image");
    }
    if (!(p >= 1.0)) {
        throw DomainError("Minkowski norm needs p >= 1");
    }
    // Gradient magnitudes over interior pixels, then the same p-mean as
    // shades_of_gray (max-normalized for large-p stability).
    const int w = img.width, h = img.height;
    std::vector<double> mag(static_cast<std::size_t>(w - 2) * (h - 2) * 3);
    double mx = 0.0;
    std::size_t k = 0;
    for (int y = 1; y < h - 1; ++y) {
        for (int x = 1; x < w - 1; ++x) {
            const double* xm = img.pixel(x - 1, y);
            const double* xp = img.pixel(x + 1, y);
            const double* ym = img.pixel(x, y - 1);
            const double* yp = img.pixel(x, y + 1);
            for (int c = 0; c < 3; ++c) {
                const double gx = 0.5 * (xp[c] - xm[c]);
                const double gy = 0.5 * (yp[c] - ym[c]);
                const double m = std::sqrt(gx * gx + gy * gy);
                mag[k++] = m;
                mx = std::max(mx, m);
            }
        }
    }
    if (!(mx > 0.0)) {
        throw DomainError("gray_edge of an edgeless image");
    }
    double acc[3] = {0.0, 0.0, 0.0};
    const std::size_t npix = mag.size() / 3;
    for (std::size_t i = 0; i < mag.size(); i += 3) {
        for (int c = 0; c < 3; ++c) {
            acc[c] += std::pow(mag[i + static_cast<std::size_t>(c)] / mx, p);
        }
    }
    for (double& v : acc) {
        v = std::pow(v / static_cast<double>(npix), 1.0 / p);
    }
    return direction_or_throw(acc[0], acc[1], acc[2], "gray_edge of an edgeless image");
}

} // namespace clcc
