// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the clcc project.

#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "clcc/errors.hpp"

namespace clcc {

/// Sensor response to the scene illuminant, stored unnormalized.
/// Comparisons are made after L2 normalization (directions only).
struct IlluminantRGB {
    double r = 0.0, g = 0.0, b = 0.0;

    IlluminantRGB() = default;
    IlluminantRGB(double r_, double g_, double b_);

    double norm() const;
    IlluminantRGB normalized() const;

    double operator[](int c) const { return c == 0 ? r : (c == 1 ? g : b); }
};

/// 3x3 linear RGB-to-RGB map.
///
/// Row-vector convention throughout the library: an image pixel is a 1x3 row
/// and the transform is applied on the right, out = pixel * M. Consequently
/// out[c] = sum_k pixel[k] * m[k][c], and composing two transforms in
/// application order is the ordinary product A * B.
struct ColorMatrix3 {
    std::array<double, 9> m{}; // row-major

    static ColorMatrix3 identity();
    static ColorMatrix3 diagonal(double d0, double d1, double d2);

    double& at(int row, int col) { return m[static_cast<std::size_t>(row * 3 + col)]; }
    double at(int row, int col) const { return m[static_cast<std::size_t>(row * 3 + col)]; }

    ColorMatrix3 operator*(const ColorMatrix3& rhs) const;
    ColorMatrix3 operator+(const ColorMatrix3& rhs) const;
    ColorMatrix3 scaled(double s) const;

    double det() const;
    double max_abs_diff(const ColorMatrix3& other) const;
    bool finite() const;
};

/// 24 linear raw-RGB checker patch colors, fixed patch ordering.
/// Patches 18..23 are the neutral ramp (brightest first).
struct CheckerColors {
    static constexpr int kPatches = 24;
    static constexpr int kNeutralStart = 18;

    std::array<std::array<double, 3>, kPatches> colors{};

    /// Throws DomainError unless all entries are finite and >= 0.
    void validate() const;

    /// Mean of the neutral-ramp rows (patches 18..23).
    std::array<double, 3> neutral_ramp_mean() const;
};

/// H x W x 3 linear raw-RGB image, row-major interleaved.
struct RawImage {
    int width = 0, height = 0;
    std::vector<double> data;

    static RawImage zeros(int width, int height);

    std::size_t value_count() const { return data.size(); }
    double* pixel(int x, int y) { return data.data() + 3 * (static_cast<std::size_t>(y) * width + x); }
    const double* pixel(int x, int y) const {
        return data.data() + 3 * (static_cast<std::size_t>(y) * width + x);
    }

    /// Throws DomainError unless dimensions are positive, the buffer has
    /// width*height*3 entries and every entry is finite and >= 0.
    void validate() const;
};

/// White-balance matrix diag(L_g/L_r, 1, L_g/L_b) for the given illuminant.
/// Applying it to any pixel proportional to l yields equal channels.
/// Throws DomainError when the red or blue response is not strictly positive.
ColorMatrix3 wb_matrix(const IlluminantRGB& l);

/// out = pixel * m for every pixel. With clamp_negative (the default) results
/// are clipped at 0, since augmentation transforms can produce small
/// negatives; pass false for linearity tests.
RawImage apply_color_matrix(const RawImage& img, const ColorMatrix3& m, bool clamp_negative = true);

struct FitResult {
    ColorMatrix3 m;
    double residual = 0.0; // Frobenius norm of src*M - dst
};

/// Least-squares M minimizing ||src*M - dst||_F via the 3x3 normal equations.
/// Throws RankDeficientError when the smallest eigenvalue of src^T src is
/// below 1e-8 times the largest, signaling the caller to fall back to the
/// diagonal (WB-only) mapping.
FitResult fit_color_transform(const CheckerColors& src, const CheckerColors& dst);

/// Adjugate inverse. Throws SingularError when |det| <= 1e-12.
ColorMatrix3 invert(const ColorMatrix3& m);

/// arccos of the cosine between the two directions, argument clamped to
/// [-1, 1]. Scale-invariant in both arguments. Throws DomainError on zero
/// vectors.
double angular_error_degrees(const IlluminantRGB& est, const IlluminantRGB& gt);
double angular_error_radians(const IlluminantRGB& est, const IlluminantRGB& gt);

/// Eigenvalues of a symmetric 3x3 matrix {a00,a11,a22,a01,a02,a12} in
/// descending order (closed-form trigonometric method).
std::array<double, 3> sym3_eigenvalues(const std::array<double, 6>& a);

} // namespace clcc
