// Copyright 2026 The decalforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "decalforge/image.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <png.h>

namespace decalforge {

double srgb_to_linear(double c) {
    return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

double linear_to_srgb(double c) {
    c = std::clamp(c, 0.0, 1.0);
    return c <= 0.0031308 ? 12.92 * c : 1.055 * std::pow(c, 1.0 / 2.4) - 0.055;
}

namespace {

std::string slurp(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw IoError(fmt::format("cannot read {}", path.string()));
    }
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

void spit(const std::string& bytes, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!os) {
        throw IoError(fmt::format("cannot write {}", path.string()));
    }
}

} // namespace

Rgba8Image decode_png(const std::string& bytes) {
    png_image img;
    std::memset(&img, 0, sizeof(img));
    img.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size())) {
        throw IoError(fmt::format("invalid PNG data: {}", img.message));
    }
    img.format = PNG_FORMAT_RGBA;
    Rgba8Image out(static_cast<int>(img.width), static_cast<int>(img.height));
    if (!png_image_finish_read(&img, nullptr, out.data.data(), 0, nullptr)) {
        const std::string msg = img.message;
        png_image_free(&img);
        throw IoError(fmt::format("invalid PNG data: {}", msg));
    }
    return out;
}

std::string encode_png(const Rgba8Image& image) {
    png_image img;
    std::memset(&img, 0, sizeof(img));
    img.version = PNG_IMAGE_VERSION;
    img.width = static_cast<png_uint_32>(image.width);
    img.height = static_cast<png_uint_32>(image.height);
    img.format = PNG_FORMAT_RGBA;
    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&img, nullptr, &size, 0, image.data.data(), 0, nullptr)) {
        throw IoError(fmt::format("PNG encoding failed: {}", img.message));
    }
    std::string out(size, '\0');
    if (!png_image_write_to_memory(&img, out.data(), &size, 0, image.data.data(), 0, nullptr)) {
        throw IoError(fmt::format("PNG encoding failed: {}", img.message));
    }
    out.resize(size);
    return out;
}

Rgba8Image read_png(const std::filesystem::path& path) {
    try {
        return decode_png(slurp(path));
    } catch (const IoError& e) {
        throw IoError(fmt::format("{}: {}", path.string(), e.what()));
    }
}

void write_png(const Rgba8Image& image, const std::filesystem::path& path) { spit(encode_png(image), path); }

RgbImage to_linear(const Rgba8Image& image) {
    RgbImage out(image.width, image.height);
    for (int r = 0; r < image.height; ++r) {
        for (int c = 0; c < image.width; ++c) {
            const auto* p = image.px(r, c);
            const double a = p[3] / 255.0;
            out.at(r, c) = a * Vec3(srgb_to_linear(p[0] / 255.0), srgb_to_linear(p[1] / 255.0),
                                    srgb_to_linear(p[2] / 255.0));
        }
    }
    return out;
}

Rgba8Image to_srgb8(const RgbImage& image, double exposure) {
    Rgba8Image out(image.width, image.height);
    for (int r = 0; r < image.height; ++r) {
        for (int c = 0; c < image.width; ++c) {
            auto* p = out.px(r, c);
            for (int k = 0; k < 3; ++k) {
                p[k] = static_cast<std::uint8_t>(std::lround(255.0 * linear_to_srgb(exposure * image.at(r, c)[k])));
            }
            p[3] = 255;
        }
    }
    return out;
}

namespace {

Vec3 rgbe_to_float(const std::uint8_t* e) {
    if (e[3] == 0) {
        return Vec3::Zero();
    }
    const double f = std::ldexp(1.0, int(e[3]) - (128 + 8));
    return Vec3((e[0] + 0.5) * f, (e[1] + 0.5) * f, (e[2] + 0.5) * f);
}

void float_to_rgbe(const Vec3& c, std::uint8_t* e) {
    const double m = c.maxCoeff();
    if (!(m > 1e-32)) {
        e[0] = e[1] = e[2] = e[3] = 0;
        return;
    }
    int ex = 0;
    const double f = std::frexp(m, &ex) * 256.0 / m;
    for (int k = 0; k < 3; ++k) {
        e[k] = static_cast<std::uint8_t>(std::clamp(c[k] * f, 0.0, 255.0));
    }
    e[3] = static_cast<std::uint8_t>(ex + 128);
}

} // namespace

RgbImage read_hdr(const std::filesystem::path& path) {
    const std::string data = slurp(path);
    std::size_t pos = 0;
    auto next_line = [&]() {
        const std::size_t end = data.find('\n', pos);
        if (end == std::string::npos) {
            throw IoError(fmt::format("{}: truncated HDR header", path.string()));
        }
        std::string line = data.substr(pos, end - pos);
        pos = end + 1;
        return line;
    };
    const std::string magic = next_line();
    if (magic.rfind("#?", 0) != 0) {
        throw IoError(fmt::format("{}: not a Radiance HDR file", path.string()));
    }
    for (std::string line = next_line(); !line.empty(); line = next_line()) {
        if (line.rfind("FORMAT=", 0) == 0 && line != "FORMAT=32-bit_rle_rgbe") {
            throw IoError(fmt::format("{}: unsupported format {}", path.string(), line.substr(7)));
        }
    }
    const std::string dims = next_line();
    int w = 0;
    int h = 0;
    char ys[3] = {};
    char xs[3] = {};
    if (std::sscanf(dims.c_str(), "%2s %d %2s %d", ys, &h, xs, &w) != 4 || std::string(ys) != "-Y" ||
        std::string(xs) != "+X" || w <= 0 || h <= 0) {
        throw IoError(fmt::format("{}: unsupported resolution line '{}'", path.string(), dims));
    }
    RgbImage out(w, h);
    std::vector<std::uint8_t> scan(std::size_t(w) * 4);
    auto byte = [&]() -> std::uint8_t {
        if (pos >= data.size()) {
            throw IoError(fmt::format("{}: truncated HDR pixel data", path.string()));
        }
        return static_cast<std::uint8_t>(data[pos++]);
    };
    for (int r = 0; r < h; ++r) {
        const std::uint8_t b0 = byte();
        const std::uint8_t b1 = byte();
        const std::uint8_t b2 = byte();
        const std::uint8_t b3 = byte();
        if (b0 == 2 && b1 == 2 && (b2 & 0x80) == 0 && w >= 8 && w < 32768) {
            if (((b2 << 8) | b3) != w) {
                throw IoError(fmt::format("{}: scanline width mismatch", path.string()));
            }
            for (int ch = 0; ch < 4; ++ch) {
                int x = 0;
                while (x < w) {
                    int count = byte();
                    if (count > 128) {
                        count -= 128;
                        const std::uint8_t v = byte();
                        if (x + count > w) {
                            throw IoError(fmt::format("{}: bad run length", path.string()));
                        }
                        for (int i = 0; i < count; ++i) {
                            scan[std::size_t(x++) * 4 + ch] = v;
                        }
                    } else {
                        if (count == 0 || x + count > w) {
                            throw IoError(fmt::format("{}: bad run length", path.string()));
                        }
                        for (int i = 0; i < count; ++i) {
                            scan[std::size_t(x++) * 4 + ch] = byte();
                        }
                    }
                }
            }
        } else {
            scan[0] = b0;
            scan[1] = b1;
            scan[2] = b2;
            scan[3] = b3;
            for (std::size_t i = 4; i < scan.size(); ++i) {
                scan[i] = byte();
            }
        }
        for (int c = 0; c < w; ++c) {
            out.at(r, c) = rgbe_to_float(&scan[std::size_t(c) * 4]);
        }
    }
    return out;
}

void write_hdr(const RgbImage& image, const std::filesystem::path& path) {
    std::string out = fmt::format("#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n-Y {} +X {}\n", image.height, image.width);
    std::uint8_t e[4];
    for (const auto& p : image.pixels) {
        float_to_rgbe(p, e);
        out.append(reinterpret_cast<const char*>(e), 4);
    }
    spit(out, path);
}

double mean_squared_error(const RgbImage& a, const RgbImage& b) {
    if (a.width != b.width || a.height != b.height) {
        throw Error(fmt::format("image shape mismatch: {}x{} vs {}x{}", a.width, a.height, b.width, b.height));
    }
    double s = 0.0;
    for (std::size_t i = 0; i < a.pixels.size(); ++i) {
        s += (a.pixels[i] - b.pixels[i]).squaredNorm();
    }
    return a.pixels.empty() ? 0.0 : s / (3.0 * static_cast<double>(a.pixels.size()));
}

} // namespace decalforge
