// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the clcc project.

#pragma once

#include <filesystem>
#include <string>

#include "clcc/color_math.hpp"
#include "clcc/scene_synth.hpp"

namespace clcc {

/// Raw image container format.
///
/// Layout: 8-byte magic "CLCCIMG1", then width, height, channels (= 3) as
/// 32-bit little-endian unsigned integers, then row-major interleaved RGB as
/// 32-bit little-endian IEEE-754 floats. Values are stored at f32 precision;
/// in-memory images holding wider types are quantized on write, so
/// read(write(x)) is bitwise-identical exactly when x is f32-valued (always
/// true for images that came from a file).
void write_image(const std::filesystem::path& path, const RawImage& img);
RawImage read_image(const std::filesystem::path& path);

/// Dataset directory layout: <dir>/manifest.json plus <dir>/images/NNNNNN.img.
/// The manifest records the format version, sensor sensitivities, grid and
/// scene parameters, and one record per image (file name, scene and
/// illuminant ids, ground-truth illuminant, 24x3 checker colors, checker
/// pixel region). JSON numbers round-trip losslessly.
void write_dataset(const std::filesystem::path& dir, const Dataset& ds);
Dataset read_dataset(const std::filesystem::path& dir);

/// Shortest-round-trip decimal formatting via std::to_chars; locale-free.
std::string format_double(double v);

} // namespace clcc
