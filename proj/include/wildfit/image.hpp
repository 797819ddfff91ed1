#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace wildfit {

// 8-bit interleaved RGB image, row-major.
struct Image8 {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> pixels; // size = width*height*3

    Image8() = default;
    Image8(int w, int h, uint8_t fill = 0)
        : width(w), height(h), pixels(size_t(w) * h * 3, fill) {}

    uint8_t* at(int x, int y) { return pixels.data() + (size_t(y) * width + x) * 3; }
    const uint8_t* at(int x, int y) const { return pixels.data() + (size_t(y) * width + x) * 3; }
};

// 8-bit single-channel mask, row-major; nonzero = foreground.
struct Mask8 {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> values; // size = width*height

    Mask8() = default;
    Mask8(int w, int h, uint8_t fill = 0) : width(w), height(h), values(size_t(w) * h, fill) {}

    uint8_t at(int x, int y) const { return values[size_t(y) * width + x]; }
    void set(int x, int y, uint8_t v) { values[size_t(y) * width + x] = v; }
};

struct ImageIoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Binary PPM (P6) / PGM (P5). Byte-exact round trips, no external deps.
void write_ppm(const std::string& path, const Image8& img);
Image8 read_ppm(const std::string& path);
void write_pgm(const std::string& path, const Mask8& mask);
Mask8 read_pgm(const std::string& path);

// Crop a square of `side` pixels at (x0, y0), bilinear-resize to
// out_res x out_res, scale to [0, 1]. Output layout is channel-major
// [c][y][x] to match the network input convention.
std::vector<double> crop_resize_to_unit(const Image8& img, int x0, int y0, int side, int out_res);

} // namespace wildfit
