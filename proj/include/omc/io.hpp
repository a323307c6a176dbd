// Copyright 2026 The omc Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Image and sample-file I/O: binary PGM (P5), MNIST IDX, plain CSV.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "omc/core.hpp"
#include "omc/format.hpp"

namespace omc {

class IoError : public Error {
 public:
  using Error::Error;
};

struct GrayImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> pixels;  // row-major, [0, 1]
};

// Values are clipped to [0, 1] and quantized to 8 bits.
inline void write_pgm(const std::string& path, const GrayImage& img) {
  if (img.pixels.size() != img.height * img.width) throw IoError("write_pgm: pixel count mismatch");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("write_pgm: cannot open " + path);
  os << "P5\n" << img.width << ' ' << img.height << "\n255\n";
  for (double v : img.pixels) {
    const double c = std::isfinite(v) ? std::clamp(v, 0.0, 1.0) : 0.0;
    os.put(static_cast<char>(static_cast<unsigned char>(std::lround(c * 255.0))));
  }
  if (!os) throw IoError("write_pgm: write failed for " + path);
}

inline GrayImage read_pgm(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("read_pgm: cannot open " + path);
  auto token = [&]() {
    std::string t;
    while (is >> std::ws && is.peek() == '#') std::getline(is, t);
    if (!(is >> t)) throw IoError("read_pgm: truncated header in " + path);
    return t;
  };
  if (token() != "P5") throw IoError("read_pgm: not a binary PGM (P5): " + path);
  GrayImage img;
  int maxval = 0;
  try {
    img.width = std::stoul(token());
    img.height = std::stoul(token());
    maxval = std::stoi(token());
  } catch (const std::exception&) {
    throw IoError("read_pgm: malformed header in " + path);
  }
  if (maxval <= 0 || maxval > 255) throw IoError("read_pgm: only 8-bit PGM is supported");
  is.get();  // single whitespace after maxval
  img.pixels.resize(img.height * img.width);
  for (double& v : img.pixels) {
    const int c = is.get();
    if (c == EOF) throw IoError("read_pgm: truncated pixel data in " + path);
    v = static_cast<double>(c) / maxval;
  }
  return img;
}

// Image `index` of an IDX3 unsigned-byte file (MNIST layout).
inline GrayImage read_idx_image(const std::string& path, std::size_t index) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("read_idx_image: cannot open " + path);
  auto be32 = [&]() {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4)) throw IoError("read_idx_image: truncated header");
    return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) |
           std::uint32_t{b[3]};
  };
  if (be32() != 0x00000803u) throw IoError("read_idx_image: not an IDX3 unsigned-byte file");
  const std::uint32_t count = be32(), rows = be32(), cols = be32();
  if (index >= count) throw IoError("read_idx_image: index out of range");
  GrayImage img{rows, cols, std::vector<double>(std::size_t{rows} * cols)};
  is.seekg(static_cast<std::streamoff>(16 + index * img.pixels.size()));
  for (double& v : img.pixels) {
    const int c = is.get();
    if (c == EOF) throw IoError("read_idx_image: truncated pixel data");
    v = c / 255.0;
  }
  return img;
}

inline GrayImage to_image(const Vector& v, std::size_t height, std::size_t width) {
  if (static_cast<std::size_t>(v.size()) != height * width) throw IoError("to_image: size mismatch");
  return {height, width, std::vector<double>(v.data(), v.data() + v.size())};
}

// Numeric CSV with one header line; lines starting with '#' are skipped.
inline std::vector<ParamVector> read_samples_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("read_samples_csv: cannot open " + path);
  std::string line;
  bool header = true;
  std::vector<ParamVector> out;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    std::vector<double> vals;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        vals.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw IoError("read_samples_csv: bad number '" + cell + "' in " + path);
      }
    }
    if (!out.empty() && static_cast<Eigen::Index>(vals.size()) != out.front().size())
      throw IoError("read_samples_csv: ragged rows in " + path);
    out.push_back(Eigen::Map<Vector>(vals.data(), static_cast<Eigen::Index>(vals.size())));
  }
  return out;
}

}  // namespace omc
