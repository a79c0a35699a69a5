// Copyright 2026 The PEN Authors
// SPDX-License-Identifier: Apache-2.0

#include "pen/io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>
#include <vector>

#include "pen/errors.hpp"

namespace pen::io {
namespace fs = std::filesystem;

namespace {

std::vector<unsigned char> gray_pixels(const DensityField& field, int scale) {
    if (scale < 1) throw DomainError("image scale must be >= 1");
    const int d = field.d();
    const int w = d * scale;
    std::vector<unsigned char> px(static_cast<std::size_t>(w) * w);
    for (int r = 0; r < w; ++r) {
        for (int c = 0; c < w; ++c) {
            const double v = field[static_cast<std::size_t>(r / scale + d * (c / scale))];
            px[static_cast<std::size_t>(r) * w + c] = static_cast<unsigned char>(std::lround(255.0 * (1.0 - v)));
        }
    }
    return px;
}

}  // namespace

void atomic_write(const fs::path& path, const std::function<void(std::ostream&)>& writer, bool binary) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        writer(out);
        out.flush();
        if (!out) {
            out.close();
            fs::remove(tmp);
            throw std::runtime_error("write to " + tmp.string() + " failed");
        }
    }
    fs::rename(tmp, path);
}

void atomic_write_text(const fs::path& path, std::string_view text) {
    atomic_write(path, [text](std::ostream& out) { out << text; });
}

nlohmann::json geometry_to_json(const DensityField& field) {
    return {{"level", field.level().lambda},
            {"d", field.d()},
            {"d_inp", field.level().d_inp},
            {"x", std::vector<double>(field.values().begin(), field.values().end())}};
}

DensityField geometry_from_json(const nlohmann::json& j, double x_min) {
    try {
        const Level level{j.at("level").get<int>(), j.at("d_inp").get<int>()};
        auto x = j.at("x").get<std::vector<double>>();
        if (j.contains("d") && j.at("d").get<int>() != level.d()) {
            throw LoadError("geometry d=" + std::to_string(j.at("d").get<int>()) + " does not match level " +
                            std::to_string(level.lambda) + " (d=" + std::to_string(level.d()) + ")");
        }
        return {level, std::move(x), x_min};
    } catch (const nlohmann::json::exception& e) {
        throw LoadError(std::string("malformed geometry record: ") + e.what());
    } catch (const DimensionError& e) {
        throw LoadError(std::string("malformed geometry record: ") + e.what());
    }
}

void write_geometry(const DensityField& field, const fs::path& path) {
    atomic_write_text(path, geometry_to_json(field).dump() + "\n");
}

DensityField read_geometry(const fs::path& path, double x_min) { return geometry_from_json(read_json(path), x_min); }

void write_pgm(const DensityField& field, const fs::path& path, int scale) {
    const auto px = gray_pixels(field, scale);
    const int w = field.d() * scale;
    atomic_write(
        path,
        [&](std::ostream& out) {
            out << "P5\n" << w << ' ' << w << "\n255\n";
            out.write(reinterpret_cast<const char*>(px.data()), static_cast<std::streamsize>(px.size()));
        },
        true);
}

void write_png(const DensityField& field, const fs::path& path, int scale) {
    const auto px = gray_pixels(field, scale);
    const auto w = static_cast<png_uint_32>(field.d() * scale);
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(tmp.c_str(), "wb"), &std::fclose);
    if (!fp) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, nullptr);
        throw std::runtime_error("libpng initialization failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("libpng failed writing " + path.string());
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, w, w, 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (png_uint_32 r = 0; r < w; ++r) {
        png_write_row(png, const_cast<png_bytep>(px.data() + static_cast<std::size_t>(r) * w));
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    fp.reset();
    fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LoadError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

nlohmann::json read_json(const fs::path& path) {
    const auto text = read_file(path);
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw LoadError(path.string() + ": " + e.what());
    }
}

}  // namespace pen::io
