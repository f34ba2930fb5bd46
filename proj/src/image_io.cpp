#include "poseverify/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace pv {

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return in;
}

void read_pnm_header(std::ifstream& in, const std::string& magic, int& w,
                     int& h, int& maxval) {
  std::string m;
  in >> m;
  if (m != magic) throw std::runtime_error("bad magic, expected " + magic);
  in >> w >> h >> maxval;
  in.get();  // single whitespace before raster
  if (!in || w <= 0 || h <= 0) throw std::runtime_error("bad PNM header");
}

std::uint8_t to_byte(float v) {
  return static_cast<std::uint8_t>(
      std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
}

}  // namespace

void write_ppm(const std::string& path, const ColorImage& img) {
  auto out = open_out(path);
  out << "P6\n" << img.width << " " << img.height << "\n255\n";
  std::vector<std::uint8_t> row(size_t(img.width) * 3);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const Vec3f& c = img(x, y);
      row[x * 3 + 0] = to_byte(c[0]);
      row[x * 3 + 1] = to_byte(c[1]);
      row[x * 3 + 2] = to_byte(c[2]);
    }
    out.write(reinterpret_cast<const char*>(row.data()), row.size());
  }
}

ColorImage read_ppm(const std::string& path) {
  auto in = open_in(path);
  int w, h, maxval;
  read_pnm_header(in, "P6", w, h, maxval);
  ColorImage img(w, h);
  std::vector<std::uint8_t> row(size_t(w) * 3);
  for (int y = 0; y < h; ++y) {
    in.read(reinterpret_cast<char*>(row.data()), row.size());
    if (!in) throw std::runtime_error("truncated PPM: " + path);
    for (int x = 0; x < w; ++x) {
      img(x, y) = {row[x * 3 + 0] / 255.0f, row[x * 3 + 1] / 255.0f,
                   row[x * 3 + 2] / 255.0f};
    }
  }
  return img;
}

void write_pgm(const std::string& path, const LabelMap& img) {
  auto out = open_out(path);
  out << "P5\n" << img.width << " " << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.data.data()), img.data.size());
}

LabelMap read_pgm(const std::string& path) {
  auto in = open_in(path);
  int w, h, maxval;
  read_pnm_header(in, "P5", w, h, maxval);
  LabelMap img(w, h);
  in.read(reinterpret_cast<char*>(img.data.data()), img.data.size());
  if (!in) throw std::runtime_error("truncated PGM: " + path);
  return img;
}

namespace {

void write_pfm_impl(const std::string& path, int w, int h, int channels,
                    const float* data) {
  auto out = open_out(path);
  out << (channels == 3 ? "PF" : "Pf") << "\n" << w << " " << h << "\n-1.0\n";
  // PFM rows run bottom-to-top.
  for (int y = h - 1; y >= 0; --y) {
    out.write(reinterpret_cast<const char*>(data + size_t(y) * w * channels),
              size_t(w) * channels * sizeof(float));
  }
}

void read_pfm_impl(const std::string& path, int expect_channels, int& w,
                   int& h, std::vector<float>& data) {
  auto in = open_in(path);
  std::string magic;
  in >> magic;
  const int channels = magic == "PF" ? 3 : magic == "Pf" ? 1 : 0;
  if (channels != expect_channels)
    throw std::runtime_error("unexpected PFM type in " + path);
  double scale;
  in >> w >> h >> scale;
  in.get();
  if (!in || w <= 0 || h <= 0) throw std::runtime_error("bad PFM header");
  if (scale > 0) throw std::runtime_error("big-endian PFM unsupported");
  data.resize(size_t(w) * h * channels);
  for (int y = h - 1; y >= 0; --y) {
    in.read(reinterpret_cast<char*>(data.data() + size_t(y) * w * channels),
            size_t(w) * channels * sizeof(float));
  }
  if (!in) throw std::runtime_error("truncated PFM: " + path);
}

}  // namespace

void write_pfm(const std::string& path, const DepthMap& img) {
  write_pfm_impl(path, img.width, img.height, 1, img.data.data());
}

DepthMap read_pfm(const std::string& path) {
  DepthMap img;
  read_pfm_impl(path, 1, img.width, img.height, img.data);
  return img;
}

void write_pfm3(const std::string& path, const Grid<Vec3f>& img) {
  write_pfm_impl(path, img.width, img.height, 3,
                 reinterpret_cast<const float*>(img.data.data()));
}

Grid<Vec3f> read_pfm3(const std::string& path) {
  int w, h;
  std::vector<float> raw;
  read_pfm_impl(path, 3, w, h, raw);
  Grid<Vec3f> img(w, h);
  for (size_t i = 0; i < img.data.size(); ++i) {
    img.data[i] = {raw[i * 3], raw[i * 3 + 1], raw[i * 3 + 2]};
  }
  return img;
}

}  // namespace pv
