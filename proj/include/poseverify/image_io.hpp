#pragma once

#include <string>

#include "poseverify/image.hpp"

namespace pv {

// Binary PPM (P6, 8-bit). Values clipped to [0,1] on write.
void write_ppm(const std::string& path, const ColorImage& img);
ColorImage read_ppm(const std::string& path);

// Binary PGM (P5, 8-bit).
void write_pgm(const std::string& path, const LabelMap& img);
LabelMap read_pgm(const std::string& path);

// PFM, 32-bit little-endian floats, rows bottom-to-top per the format.
void write_pfm(const std::string& path, const DepthMap& img);
DepthMap read_pfm(const std::string& path);
void write_pfm3(const std::string& path, const Grid<Vec3f>& img);
Grid<Vec3f> read_pfm3(const std::string& path);

}  // namespace pv
