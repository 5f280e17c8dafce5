#include "negattn/image_io.hpp"

#include <cmath>
#include <fstream>

namespace negattn {

Tensor latent_encode(const Tensor& image) {
    if (image.rank() != 3) {
        throw DimensionError("latent_encode: expected [C,H,W], got " + shape_str(image.shape()));
    }
    const int64_t c = image.dim(0), h = image.dim(1), w = image.dim(2);
    Tensor z({c, h / 2, w / 2});
    for (int64_t ch = 0; ch < c; ++ch) {
        for (int64_t i = 0; i < h / 2; ++i) {
            for (int64_t j = 0; j < w / 2; ++j) {
                const double s = image[ch * h * w + 2 * i * w + 2 * j] +
                                 image[ch * h * w + 2 * i * w + 2 * j + 1] +
                                 image[ch * h * w + (2 * i + 1) * w + 2 * j] +
                                 image[ch * h * w + (2 * i + 1) * w + 2 * j + 1];
                z[ch * (h / 2) * (w / 2) + i * (w / 2) + j] = s * 0.25;
            }
        }
    }
    return z;
}

Tensor latent_decode(const Tensor& z) {
    if (z.rank() != 3) {
        throw DimensionError("latent_decode: expected [C,h,w], got " + shape_str(z.shape()));
    }
    const int64_t c = z.dim(0), h = z.dim(1), w = z.dim(2);
    Tensor img({c, 2 * h, 2 * w});
    for (int64_t ch = 0; ch < c; ++ch) {
        for (int64_t i = 0; i < 2 * h; ++i) {
            for (int64_t j = 0; j < 2 * w; ++j) {
                img[ch * 4 * h * w + i * 2 * w + j] = z[ch * h * w + (i / 2) * w + j / 2];
            }
        }
    }
    return img;
}

unsigned char to_byte(double v) {
    const double scaled = std::round((v + 1.0) * 0.5 * 255.0);
    if (scaled <= 0.0) return 0;
    if (scaled >= 255.0) return 255;
    return static_cast<unsigned char>(scaled);
}

std::vector<unsigned char> ppm_bytes(const Tensor& image) {
    if (image.rank() != 3 || image.dim(0) != 3) {
        throw DimensionError("ppm_bytes: expected [3,H,W], got " + shape_str(image.shape()));
    }
    const int64_t h = image.dim(1), w = image.dim(2);
    const std::string header = "P6\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
    std::vector<unsigned char> out(header.begin(), header.end());
    out.reserve(out.size() + static_cast<size_t>(3 * h * w));
    for (int64_t i = 0; i < h; ++i) {
        for (int64_t j = 0; j < w; ++j) {
            for (int64_t ch = 0; ch < 3; ++ch) {
                out.push_back(to_byte(image[ch * h * w + i * w + j]));
            }
        }
    }
    return out;
}

void write_ppm(const Tensor& image, const std::string& path) {
    std::vector<unsigned char> bytes = ppm_bytes(image);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw IoError("short write to '" + path + "'");
}

void write_pgm(const Tensor& map, const std::string& path) {
    if (map.rank() != 2) {
        throw DimensionError("write_pgm: expected [h,w], got " + shape_str(map.shape()));
    }
    const int64_t h = map.dim(0), w = map.dim(1);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    const std::string header = "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
    f.write(header.data(), static_cast<std::streamsize>(header.size()));
    for (int64_t i = 0; i < h * w; ++i) {
        const double v = map[i];
        const double scaled = std::round(v * 255.0);
        const unsigned char b =
            scaled <= 0.0 ? 0 : (scaled >= 255.0 ? 255 : static_cast<unsigned char>(scaled));
        f.write(reinterpret_cast<const char*>(&b), 1);
    }
    if (!f) throw IoError("short write to '" + path + "'");
}

}  // namespace negattn
