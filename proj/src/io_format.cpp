// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the clcc project.

#include "clcc/io_format.hpp"

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include <json.hpp>

namespace clcc {

namespace {

constexpr char kImageMagic[8] = {'C', 'L', 'C', 'C', 'I', 'M', 'G', '1'};
constexpr int kManifestVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; big-endian hosts need byte swaps");

void put_u32(std::string& buf, std::uint32_t v) {
    char b[4];
    std::memcpy(b, &v, 4);
    buf.append(b, 4);
}

void put_f32(std::string& buf, float v) {
    char b[4];
    std::memcpy(b, &v, 4);
    buf.append(b, 4);
}

std::uint32_t get_u32(const std::string& buf, std::size_t& off, const char* what) {
    if (off + 4 > buf.size()) {
        throw FormatError(std::string("truncated file reading ") + what, off);
    }
    std::uint32_t v;
    std::memcpy(&v, buf.data() + off, 4);
    off += 4;
    return v;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open file: " + path.string());
    }
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return buf;
}

void write_file(const std::filesystem::path& path, const std::string& buf) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("cannot create file: " + path.string());
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) {
        throw Error("short write: " + path.string());
    }
}

nlohmann::json spectrum_to_json(const Spectrum& s) {
    nlohmann::json arr = nlohmann::json::array();
    for (double v : s.samples) {
        arr.push_back(v);
    }
    return arr;
}

std::array<double, SpectralGrid::kSamples> spectrum_from_json(const nlohmann::json& arr) {
    if (!arr.is_array() || arr.size() != SpectralGrid::kSamples) {
        throw Error("manifest: sensitivity array must have 35 samples");
    }
    std::array<double, SpectralGrid::kSamples> out{};
    for (int i = 0; i < SpectralGrid::kSamples; ++i) {
        out[static_cast<std::size_t>(i)] = arr[static_cast<std::size_t>(i)].get<double>();
    }
    return out;
}

} // namespace

void write_image(const std::filesystem::path& path, const RawImage& img) {
    if (img.width <= 0 || img.height <= 0 ||
        img.data.size() != static_cast<std::size_t>(img.width) * img.height * 3) {
        throw DomainError("invalid image");
    }
    std::string buf;
    buf.reserve(20 + img.data.size() * 4);
    buf.append(kImageMagic, 8);
    put_u32(buf, static_cast<std::uint32_t>(img.width));
    put_u32(buf, static_cast<std::uint32_t>(img.height));
    put_u32(buf, 3);
    for (double v : img.data) {
        put_f32(buf, static_cast<float>(v));
    }
    write_file(path, buf);
}

RawImage read_image(const std::filesystem::path& path) {
    const std::string buf = read_file(path);
    if (buf.size() < 8) {
        throw FormatError("truncated file reading magic", buf.size());
    }
    if (std::memcmp(buf.data(), kImageMagic, 8) != 0) {
        if (std::memcmp(buf.data(), kImageMagic, 7) == 0) {
            throw UnsupportedVersionError("unsupported image format version", 7);
        }
        throw FormatError("bad magic, not a clcc image file", 0);
    }
    std::size_t off = 8;
    const std::uint32_t width = get_u32(buf, off, "width");
    const std::uint32_t height = get_u32(buf, off, "height");
    const std::uint32_t channels = get_u32(buf, off, "channels");
    if (channels != 3) {
        throw FormatError("expected 3 channels, got " + std::to_string(channels), 16);
    }
    if (width == 0 || height == 0 || width > (1u << 20) || height > (1u << 20)) {
        throw FormatError("implausible image dimensions", 8);
    }
    const std::size_t count = static_cast<std::size_t>(width) * height * 3;
    if (buf.size() != off + count * 4) {
        throw FormatError("payload size mismatch", buf.size());
    }
    RawImage img;
    img.width = static_cast<int>(width);
    img.height = static_cast<int>(height);
    img.data.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        float f;
        std::memcpy(&f, buf.data() + off + i * 4, 4);
        img.data[i] = static_cast<double>(f);
    }
    return img;
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void write_dataset(const std::filesystem::path& dir, const Dataset& ds) {
    std::filesystem::create_directories(dir / "images");

    nlohmann::json manifest;
    manifest["format_version"] = kManifestVersion;
    manifest["seed"] = ds.seed;
    manifest["sensor"] = {
        {"r", spectrum_to_json(ds.sensor.r)},
        {"g", spectrum_to_json(ds.sensor.g)},
        {"b", spectrum_to_json(ds.sensor.b)},
    };
    manifest["grid"] = {{"start_nm", SpectralGrid::kStartNm},
                        {"end_nm", SpectralGrid::kEndNm},
                        {"step_nm", SpectralGrid::kStepNm}};
    manifest["scene"] = {{"patches_x", ds.opts.patches_x},
                         {"patches_y", ds.opts.patches_y},
                         {"patch_px", ds.opts.patch_px},
                         {"with_checker", ds.opts.with_checker},
                         {"exposure", ds.opts.exposure},
                         {"shading_strength", ds.opts.shading_strength}};

    nlohmann::json records = nlohmann::json::array();
    char name[32];
    for (std::size_t i = 0; i < ds.images.size(); ++i) {
        const LabeledImage& img = ds.images[i];
        std::snprintf(name, sizeof(name), "images/%06zu.img", i);
        write_image(dir / name, img.image);

        nlohmann::json rec;
        rec["file"] = name;
        rec["scene_id"] = img.scene_id;
        rec["illuminant_id"] = img.illuminant_id;
        rec["illuminant"] = {img.illuminant.r, img.illuminant.g, img.illuminant.b};
        nlohmann::json checker = nlohmann::json::array();
        for (const auto& row : img.checker.colors) {
            checker.push_back({row[0], row[1], row[2]});
        }
        rec["checker"] = checker;
        if (img.checker_region) {
            rec["checker_region"] = {{"x", img.checker_region->x},
                                     {"y", img.checker_region->y},
                                     {"width", img.checker_region->width},
                                     {"height", img.checker_region->height}};
        } else {
            rec["checker_region"] = nullptr;
        }
        records.push_back(std::move(rec));
    }
    manifest["images"] = std::move(records);

    write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

Dataset read_dataset(const std::filesystem::path& dir) {
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(read_file(dir / "manifest.json"));
    } catch (const nlohmann::json::parse_error& e) {
        throw Error("manifest parse error: " + std::string(e.what()));
    }
    if (manifest.value("format_version", -1) != kManifestVersion) {
        throw Error("unsupported manifest format version");
    }

    Dataset ds;
    ds.seed = manifest.value("seed", std::uint64_t{0});
    ds.sensor.r = Spectrum::make(SpectrumKind::Sensitivity, spectrum_from_json(manifest["sensor"]["r"]));
    ds.sensor.g = Spectrum::make(SpectrumKind::Sensitivity, spectrum_from_json(manifest["sensor"]["g"]));
    ds.sensor.b = Spectrum::make(SpectrumKind::Sensitivity, spectrum_from_json(manifest["sensor"]["b"]));
    const auto& scene = manifest["scene"];
    ds.opts.patches_x = scene.value("patches_x", 8);
    ds.opts.patches_y = scene.value("patches_y", 8);
    ds.opts.patch_px = scene.value("patch_px", 8);
    ds.opts.with_checker = scene.value("with_checker", true);
    ds.opts.exposure = scene.value("exposure", 1.0);
    ds.opts.shading_strength = scene.value("shading_strength", 0.0);

    for (const auto& rec : manifest["images"]) {
        LabeledImage img;
        img.image = read_image(dir / rec["file"].get<std::string>());
        img.scene_id = rec["scene_id"].get<int>();
        img.illuminant_id = rec["illuminant_id"].get<int>();
        const auto& l = rec["illuminant"];
        img.illuminant = IlluminantRGB(l[0].get<double>(), l[1].get<double>(), l[2].get<double>());
        const auto& checker = rec["checker"];
        if (!checker.is_array() || checker.size() != CheckerColors::kPatches) {
            throw Error("manifest: checker must have 24 rows");
        }
        for (int p = 0; p < CheckerColors::kPatches; ++p) {
            for (int c = 0; c < 3; ++c) {
                img.checker.colors[static_cast<std::size_t>(p)][static_cast<std::size_t>(c)] =
                    checker[static_cast<std::size_t>(p)][static_cast<std::size_t>(c)].get<double>();
            }
        }
        img.checker.validate();
        if (!rec["checker_region"].is_null()) {
            const auto& cr = rec["checker_region"];
            img.checker_region = PixelRect{cr["x"].get<int>(), cr["y"].get<int>(),
                                           cr["width"].get<int>(), cr["height"].get<int>()};
        }
        ds.images.push_back(std::move(img));
    }
    return ds;
}

} // namespace clcc
