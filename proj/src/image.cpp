#include "wildfit/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace wildfit {

namespace {

void skip_ppm_whitespace(std::istream& in) {
    for (;;) {
        int c = in.peek();
        if (c == '#') {
            std::string line;
            std::getline(in, line);
        } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
            in.get();
        } else {
            return;
        }
    }
}

int read_ppm_int(std::istream& in) {
    skip_ppm_whitespace(in);
    int v = 0;
    if (!(in >> v)) throw ImageIoError("truncated netpbm header");
    return v;
}

} // namespace

void write_ppm(const std::string& path, const Image8& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ImageIoError("cannot open for write: " + path);
    out << "P6\n" << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels.data()),
              std::streamsize(img.pixels.size()));
    if (!out) throw ImageIoError("short write: " + path);
}

Image8 read_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ImageIoError("cannot open image: " + path);
    std::string magic(2, '\0');
    in.read(magic.data(), 2);
    if (magic != "P6") throw ImageIoError("not a binary PPM: " + path);
    int w = read_ppm_int(in);
    int h = read_ppm_int(in);
    int maxval = read_ppm_int(in);
    if (w <= 0 || h <= 0 || maxval != 255) throw ImageIoError("unsupported PPM: " + path);
    in.get(); // single whitespace after maxval
    Image8 img(w, h);
    in.read(reinterpret_cast<char*>(img.pixels.data()), std::streamsize(img.pixels.size()));
    if (!in) throw ImageIoError("truncated PPM payload: " + path);
    return img;
}

void write_pgm(const std::string& path, const Mask8& mask) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ImageIoError("cannot open for write: " + path);
    out << "P5\n" << mask.width << " " << mask.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(mask.values.data()),
              std::streamsize(mask.values.size()));
    if (!out) throw ImageIoError("short write: " + path);
}

Mask8 read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ImageIoError("cannot open mask: " + path);
    std::string magic(2, '\0');
    in.read(magic.data(), 2);
    if (magic != "P5") throw ImageIoError("not a binary PGM: " + path);
    int w = read_ppm_int(in);
    int h = read_ppm_int(in);
    int maxval = read_ppm_int(in);
    if (w <= 0 || h <= 0 || maxval != 255) throw ImageIoError("unsupported PGM: " + path);
    in.get();
    Mask8 mask(w, h);
    in.read(reinterpret_cast<char*>(mask.values.data()), std::streamsize(mask.values.size()));
    if (!in) throw ImageIoError("truncated PGM payload: " + path);
    return mask;
}

std::vector<double> crop_resize_to_unit(const Image8& img, int x0, int y0, int side, int out_res) {
    if (side < 1 || out_res < 1) throw ImageIoError("invalid crop/resize size");
    if (x0 < 0 || y0 < 0 || x0 + side > img.width || y0 + side > img.height) {
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "crop (%d,%d)+%d out of bounds for %dx%d image", x0, y0, side,
                      img.width, img.height);
        throw ImageIoError(buf);
    }

    std::vector<double> out(size_t(out_res) * out_res * 3);
    const double scale = double(side) / double(out_res);
    for (int oy = 0; oy < out_res; ++oy) {
        // source coordinates, half-pixel centers
        double sy = (oy + 0.5) * scale - 0.5;
        double fy = std::floor(sy);
        double wy = sy - fy;
        int y1 = std::clamp(int(fy), 0, side - 1);
        int y2 = std::clamp(int(fy) + 1, 0, side - 1);
        for (int ox = 0; ox < out_res; ++ox) {
            double sx = (ox + 0.5) * scale - 0.5;
            double fx = std::floor(sx);
            double wx = sx - fx;
            int x1 = std::clamp(int(fx), 0, side - 1);
            int x2 = std::clamp(int(fx) + 1, 0, side - 1);
            const uint8_t* p11 = img.at(x0 + x1, y0 + y1);
            const uint8_t* p21 = img.at(x0 + x2, y0 + y1);
            const uint8_t* p12 = img.at(x0 + x1, y0 + y2);
            const uint8_t* p22 = img.at(x0 + x2, y0 + y2);
            for (int c = 0; c < 3; ++c) {
                double top = p11[c] * (1.0 - wx) + p21[c] * wx;
                double bot = p12[c] * (1.0 - wx) + p22[c] * wx;
                double v = (top * (1.0 - wy) + bot * wy) / 255.0;
                out[(size_t(c) * out_res + oy) * out_res + ox] = v;
            }
        }
    }
    return out;
}

} // namespace wildfit
