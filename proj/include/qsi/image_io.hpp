// File formats for the imaging layer: PGM (P2/P5) and plain-text grids.
#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "qsi/cgi.hpp"

namespace qsi::cgi {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GrayImage {
  GridSize grid;
  unsigned max_value = 255;
  std::vector<unsigned> pixels;  // row-major
};

GrayImage parse_pgm(const std::string& bytes);
/// Binary (P5) 8-bit encoding.
std::string encode_pgm(const GrayImage& image);

/// Whitespace-separated rows of floats; every row must have the same length.
std::vector<std::vector<double>> parse_float_grid(const std::string& text);
/// One row per line, values printed with 17 significant digits.
std::string encode_float_grid(GridSize grid, const std::vector<double>& values);

/// Linear [min, max] -> [0, 255] rendering; a flat image renders as zeros.
GrayImage render_8bit(const ImageGrid& image);

/// One pattern per line, blocks row-major as space-separated 0/1.
std::string encode_patterns(const PatternSet& patterns);

/// Reads an object from PGM (scaled by max value) or a float grid; the
/// format is picked from the leading magic number.
ObjectMask read_object(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace qsi::cgi
