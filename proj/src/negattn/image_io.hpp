#ifndef NEGATTN_IMAGE_IO_HPP
#define NEGATTN_IMAGE_IO_HPP

#include <string>
#include <vector>

#include "negattn/tensor.hpp"

namespace negattn {

// Fixed latent projection: 2x average pool down, nearest-neighbor decode up.
Tensor latent_encode(const Tensor& image);  // [3,H,W] -> [3,H/2,W/2]
Tensor latent_decode(const Tensor& z);      // [3,h,w] -> [3,2h,2w]

// [-1,1] -> [0,255] with rounding and clamping.
unsigned char to_byte(double v);

// Binary PPM (P6) from a [3,H,W] image in [-1,1]; bit-exact across platforms.
std::vector<unsigned char> ppm_bytes(const Tensor& image);
void write_ppm(const Tensor& image, const std::string& path);

// Binary PGM (P5) from an [h,w] map in [0,1].
void write_pgm(const Tensor& map, const std::string& path);

}  // namespace negattn

#endif
