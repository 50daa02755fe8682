// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the clcc project.

#include "clcc/color_math.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace clcc {

namespace {

bool finite3(double a, double b, double c) {
    return std::isfinite(a) && std::isfinite(b) && std::isfinite(c);
}

} // namespace

IlluminantRGB::IlluminantRGB(double r_, double g_, double b_) : r(r_), g(g_), b(b_) {
    if (!finite3(r, g, b)) {
        throw DomainError("illuminant has non-finite component");
    }
    if (r < 0.0 || g < 0.0 || b < 0.0) {
        throw DomainError("illuminant has negative component");
    }
    if (r <= 0.0 && g <= 0.0 && b <= 0.0) {
        throw DomainError("illuminant has no positive component");
    }
}

double IlluminantRGB::norm() const { return std::sqrt(r * r + g * g + b * b); }

IlluminantRGB IlluminantRGB::normalized() const {
    const double n = norm();
    if (n <= 0.0) {
        throw DomainError("cannot normalize zero illuminant");
    }
    return IlluminantRGB(r / n, g / n, b / n);
}

ColorMatrix3 ColorMatrix3::identity() { return diagonal(1.0, 1.0, 1.0); }

ColorMatrix3 ColorMatrix3::diagonal(double d0, double d1, double d2) {
    ColorMatrix3 out;
    out.at(0, 0) = d0;
    out.at(1, 1) = d1;
    out.at(2, 2) = d2;
    return out;
}

ColorMatrix3 ColorMatrix3::operator*(const ColorMatrix3& rhs) const {
    ColorMatrix3 out;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            double s = 0.0;
            for (int k = 0; k < 3; ++k) {
                s += at(i, k) * rhs.at(k, j);
            }
            out.at(i, j) = s;
        }
    }
    return out;
}

ColorMatrix3 ColorMatrix3::operator+(const ColorMatrix3& rhs) const {
    ColorMatrix3 out;
    for (int i = 0; i < 9; ++i) {
        out.m[static_cast<std::size_t>(i)] =
            m[static_cast<std::size_t>(i)] + rhs.m[static_cast<std::size_t>(i)];
    }
    return out;
}

ColorMatrix3 ColorMatrix3::scaled(double s) const {
    ColorMatrix3 out;
    for (int i = 0; i < 9; ++i) {
        out.m[static_cast<std::size_t>(i)] = m[static_cast<std::size_t>(i)] * s;
    }
    return out;
}

double ColorMatrix3::det() const {
    return at(0, 0) * (at(1, 1) * at(2, 2) - at(1, 2) * at(2, 1)) -
           at(0, 1) * (at(1, 0) * at(2, 2) - at(1, 2) * at(2, 0)) +
           at(0, 2) * (at(1, 0) * at(2, 1) - at(1, 1) * at(2, 0));
}

double ColorMatrix3::max_abs_diff(const ColorMatrix3& other) const {
    double d = 0.0;
    for (int i = 0; i < 9; ++i) {
        d = std::max(d, std::abs(m[static_cast<std::size_t>(i)] -
                                 other.m[static_cast<std::size_t>(i)]));
    }
    return d;
}

bool ColorMatrix3::finite() const {
    for (double v : m) {
        if (!std::isfinite(v)) {
            return false;
        }
    }
    return true;
}

void CheckerColors::validate() const {
    for (const auto& row : colors) {
        for (double v : row) {
            if (!std::isfinite(v) || v < 0.0) {
                throw DomainError("checker colors must be finite and nonnegative");
            }
        }
    }
}

std::array<double, 3> CheckerColors::neutral_ramp_mean() const {
    std::array<double, 3> mean{0.0, 0.0, 0.0};
    for (int p = kNeutralStart; p < kPatches; ++p) {
        for (int c = 0; c < 3; ++c) {
            mean[static_cast<std::size_t>(c)] += colors[static_cast<std::size_t>(p)][static_cast<std::size_t>(c)];
        }
    }
    for (double& v : mean) {
        v /= static_cast<double>(kPatches - kNeutralStart);
    }
    return mean;
}

RawImage RawImage::zeros(int width, int height) {
    if (width <= 0 || height <= 0) {
        throw DomainError("image dimensions must be positive");
    }
    RawImage img;
    img.width = width;
    img.height = height;
    img.data.assign(static_cast<std::size_t>(width) * height * 3, 0.0);
    return img;
}

void RawImage::validate() const {
    if (width <= 0 || height <= 0) {
        throw DomainError("image dimensions must be positive");
    }
    if (data.size() != static_cast<std::size_t>(width) * height * 3) {
        throw DomainError("image buffer size does not match dimensions");
    }
    for (double v : data) {
        if (!std::isfinite(v) || v < 0.0) {
            throw DomainError("image values must be finite and nonnegative");
        }
    }
}

ColorMatrix3 wb_matrix(const IlluminantRGB& l) {
    if (!(l.r > 0.0)) {
        throw DomainError("illuminant has no red response");
    }
    if (!(l.b > 0.0)) {
        throw DomainError("illuminant has no blue response");
    }
    return ColorMatrix3::diagonal(l.g / l.r, 1.0, l.g / l.b);
}

RawImage apply_color_matrix(const RawImage& img, const ColorMatrix3& m, bool clamp_negative) {
    if (img.width <= 0 || img.height <= 0 ||
        img.data.size() != static_cast<std::size_t>(img.width) * img.height * 3) {
        throw DomainError("invalid image");
    }
    if (!m.finite()) {
        throw DomainError("transform has non-finite entries");
    }
    RawImage out;
    out.width = img.width;
    out.height = img.height;
    out.data.resize(img.data.size());
    const std::size_t n = img.data.size() / 3;
    const double* src = img.data.data();
    double* dst = out.data.data();
    for (std::size_t i = 0; i < n; ++i) {
        const double r = src[0], g = src[1], b = src[2];
        for (int c = 0; c < 3; ++c) {
            double v = r * m.at(0, c) + g * m.at(1, c) + b * m.at(2, c);
            if (clamp_negative && v < 0.0) {
                v = 0.0;
            }
            dst[c] = v;
        }
        src += 3;
        dst += 3;
    }
    return out;
}

std::array<double, 3> sym3_eigenvalues(const std::array<double, 6>& a) {
    const double a00 = a[0], a11 = a[1], a22 = a[2];
    const double a01 = a[3], a02 = a[4], a12 = a[5];
    const double p1 = a01 * a01 + a02 * a02 + a12 * a12;
    const double q = (a00 + a11 + a22) / 3.0;
    const double p2 = (a00 - q) * (a00 - q) + (a11 - q) * (a11 - q) + (a22 - q) * (a22 - q) + 2.0 * p1;
    if (p2 <= 0.0) {
        return {q, q, q}; // multiple of the identity
    }
    const double p = std::sqrt(p2 / 6.0);
    // B = (A - qI) / p, r = det(B) / 2
    const double b00 = (a00 - q) / p, b11 = (a11 - q) / p, b22 = (a22 - q) / p;
    const double b01 = a01 / p, b02 = a02 / p, b12 = a12 / p;
    double r = 0.5 * (b00 * (b11 * b22 - b12 * b12) - b01 * (b01 * b22 - b12 * b02) +
                      b02 * (b01 * b12 - b11 * b02));
    r = std::clamp(r, -1.0, 1.0);
    const double phi = std::acos(r) / 3.0;
    const double e1 = q + 2.0 * p * std::cos(phi);
    const double e3 = q + 2.0 * p * std::cos(phi + 2.0 * std::numbers::pi / 3.0);
    const double e2 = 3.0 * q - e1 - e3;
    return {e1, e2, e3};
}

FitResult fit_color_transform(const CheckerColors& src, const CheckerColors& dst) {
    src.validate();
    dst.validate();

    // Normal equations: (src^T src) M = src^T dst.
    std::array<double, 9> g{}; // src^T src, row-major symmetric
    std::array<double, 9> h{}; // src^T dst
    for (int p = 0; p < CheckerColors::kPatches; ++p) {
        const auto& s = src.colors[static_cast<std::size_t>(p)];
        const auto& d = dst.colors[static_cast<std::size_t>(p)];
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                g[static_cast<std::size_t>(i * 3 + j)] += s[static_cast<std::size_t>(i)] * s[static_cast<std::size_t>(j)];
                h[static_cast<std::size_t>(i * 3 + j)] += s[static_cast<std::size_t>(i)] * d[static_cast<std::size_t>(j)];
            }
        }
    }

    const auto eig = sym3_eigenvalues({g[0], g[4], g[8], g[1], g[2], g[5]});
    if (!(eig[2] > 1e-8 * eig[0])) {
        throw RankDeficientError("source checker colors do not span RGB");
    }

    // Cholesky factorization G = L L^T (G is SPD after the eigenvalue check).
    const double l00 = std::sqrt(g[0]);
    const double l10 = g[3] / l00;
    const double l20 = g[6] / l00;
    const double l11 = std::sqrt(g[4] - l10 * l10);
    const double l21 = (g[7] - l20 * l10) / l11;
    const double l22 = std::sqrt(g[8] - l20 * l20 - l21 * l21);

    FitResult out;
    for (int col = 0; col < 3; ++col) {
        const double c0 = h[static_cast<std::size_t>(col)];
        const double c1 = h[static_cast<std::size_t>(3 + col)];
        const double c2 = h[static_cast<std::size_t>(6 + col)];
        // Forward substitution L y = c
        const double y0 = c0 / l00;
        const double y1 = (c1 - l10 * y0) / l11;
        const double y2 = (c2 - l20 * y0 - l21 * y1) / l22;
        // Back substitution L^T x = y
        const double x2 = y2 / l22;
        const double x1 = (y1 - l21 * x2) / l11;
        const double x0 = (y0 - l10 * x1 - l20 * x2) / l00;
        out.m.at(0, col) = x0;
        out.m.at(1, col) = x1;
        out.m.at(2, col) = x2;
    }

    double res2 = 0.0;
    for (int p = 0; p < CheckerColors::kPatches; ++p) {
        const auto& s = src.colors[static_cast<std::size_t>(p)];
        const auto& d = dst.colors[static_cast<std::size_t>(p)];
        for (int c = 0; c < 3; ++c) {
            const double v = s[0] * out.m.at(0, c) + s[1] * out.m.at(1, c) + s[2] * out.m.at(2, c) -
                             d[static_cast<std::size_t>(c)];
            res2 += v * v;
        }
    }
    out.residual = std::sqrt(res2);
    return out;
}

ColorMatrix3 invert(const ColorMatrix3& m) {
    const double d = m.det();
    if (!(std::abs(d) > 1e-12)) {
        throw SingularError("matrix is numerically singular");
    }
    ColorMatrix3 inv;
    inv.at(0, 0) = (m.at(1, 1) * m.at(2, 2) - m.at(1, 2) * m.at(2, 1)) / d;
    inv.at(0, 1) = (m.at(0, 2) * m.at(2, 1) - m.at(0, 1) * m.at(2, 2)) / d;
    inv.at(0, 2) = (m.at(0, 1) * m.at(1, 2) - m.at(0, 2) * m.at(1, 1)) / d;
    inv.at(1, 0) = (m.at(1, 2) * m.at(2, 0) - m.at(1, 0) * m.at(2, 2)) / d;
    inv.at(1, 1) = (m.at(0, 0) * m.at(2, 2) - m.at(0, 2) * m.at(2, 0)) / d;
    inv.at(1, 2) = (m.at(0, 2) * m.at(1, 0) - m.at(0, 0) * m.at(1, 2)) / d;
    inv.at(2, 0) = (m.at(1, 0) * m.at(2, 1) - m.at(1, 1) * m.at(2, 0)) / d;
    inv.at(2, 1) = (m.at(0, 1) * m.at(2, 0) - m.at(0, 0) * m.at(2, 1)) / d;
    inv.at(2, 2) = (m.at(0, 0) * m.at(1, 1) - m.at(0, 1) * m.at(1, 0)) / d;
    return inv;
}

double angular_error_radians(const IlluminantRGB& est, const IlluminantRGB& gt) {
    const double ne = est.norm();
    const double ng = gt.norm();
    if (!(ne > 0.0) || !(ng > 0.0)) {
        throw DomainError("angular error of zero vector");
    }
    const double dot = est.r * gt.r + est.g * gt.g + est.b * gt.b;
    const double u = std::clamp(dot / (ne * ng), -1.0, 1.0);
    return std::acos(u);
}

double angular_error_degrees(const IlluminantRGB& est, const IlluminantRGB& gt) {
    return angular_error_radians(est, gt) * 180.0 / std::numbers::pi;
}

} // namespace clcc
