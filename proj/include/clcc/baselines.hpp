// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the clcc project.

#pragma once

#include "clcc/color_math.hpp"

namespace clcc {

/// Classical statistics-based estimators. All are exposure-scale invariant
/// and return unit-norm vectors. They consume the full frame as given.

/// Per-channel mean direction.
IlluminantRGB gray_world(const RawImage& img);

/// Per-channel maximum direction.
IlluminantRGB white_patch(const RawImage& img);

/// Minkowski p-norm mean direction, (mean(I_c^p))^(1/p); p = 1 reduces to
/// gray world, large p approaches white patch. Default p = 6.
IlluminantRGB shades_of_gray(const RawImage& img, double p = 6.0);

/// First-order gray edge: Minkowski p-mean of per-channel central-difference
/// gradient magnitudes over interior pixels. No pre-smoothing. Throws
/// DomainError for images smaller than 3x3 or with no edges at all.
IlluminantRGB gray_edge(const RawImage& img, double p = 6.0);

} // namespace clcc
