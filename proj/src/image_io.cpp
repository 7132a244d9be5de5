#include "qsi/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace qsi::cgi {

namespace {

// Header tokenizer honouring '#' comments.
class PgmCursor {
 public:
  explicit PgmCursor(const std::string& bytes) : bytes_(bytes) {}

  std::string token() {
    skip_space_and_comments();
    const std::size_t start = pos_;
    while (pos_ < bytes_.size() && !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
      ++pos_;
    }
    if (start == pos_) throw FormatError("PGM: unexpected end of header");
    return bytes_.substr(start, pos_ - start);
  }

  unsigned number() {
    const std::string t = token();
    unsigned value = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec != std::errc() || ptr != t.data() + t.size()) {
      throw FormatError("PGM: bad number '" + t + "'");
    }
    return value;
  }

  // Exactly one whitespace byte separates the header from P5 raster data.
  std::size_t raster_start() {
    if (pos_ >= bytes_.size() || !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
      throw FormatError("PGM: missing raster separator");
    }
    return pos_ + 1;
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

GrayImage parse_pgm(const std::string& bytes) {
  PgmCursor cursor(bytes);
  const std::string magic = cursor.token();
  if (magic != "P2" && magic != "P5") throw FormatError("not a PGM file (magic '" + magic + "')");
  GrayImage image;
  image.grid.width = cursor.number();
  image.grid.height = cursor.number();
  image.max_value = cursor.number();
  if (image.grid.blocks() == 0) throw FormatError("PGM: empty image");
  if (image.max_value == 0 || image.max_value > 65535) throw FormatError("PGM: bad max value");
  const std::size_t count = image.grid.blocks();
  image.pixels.reserve(count);

  if (magic == "P2") {
    for (std::size_t i = 0; i < count; ++i) image.pixels.push_back(cursor.number());
  } else {
    const std::size_t start = cursor.raster_start();
    const std::size_t width = image.max_value < 256 ? 1 : 2;
    if (bytes.size() < start + count * width) throw FormatError("PGM: truncated raster");
    for (std::size_t i = 0; i < count; ++i) {
      const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + start + i * width);
      image.pixels.push_back(width == 1 ? p[0] : (static_cast<unsigned>(p[0]) << 8) | p[1]);
    }
  }
  for (unsigned v : image.pixels) {
    if (v > image.max_value) throw FormatError("PGM: pixel exceeds max value");
  }
  return image;
}

std::string encode_pgm(const GrayImage& image) {
  if (image.max_value == 0 || image.max_value > 255) {
    throw FormatError("PGM encoder writes 8-bit images only");
  }
  std::string out = "P5\n" + std::to_string(image.grid.width) + " " +
                    std::to_string(image.grid.height) + "\n" + std::to_string(image.max_value) +
                    "\n";
  for (unsigned v : image.pixels) out.push_back(static_cast<char>(v));
  return out;
}

std::vector<std::vector<double>> parse_float_grid(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream fields(line);
    std::vector<double> row;
    std::string field;
    while (fields >> field) {
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
      if (ec != std::errc() || ptr != field.data() + field.size()) {
        throw FormatError("float grid: bad value '" + field + "'");
      }
      row.push_back(v);
    }
    if (row.empty()) continue;
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw FormatError("float grid: ragged rows");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw FormatError("float grid: no data");
  return rows;
}

std::string encode_float_grid(GridSize grid, const std::vector<double>& values) {
  if (values.size() != grid.blocks()) throw FormatError("float grid: size mismatch");
  std::string out;
  char buf[32];
  for (std::size_t y = 0; y < grid.height; ++y) {
    for (std::size_t x = 0; x < grid.width; ++x) {
      std::snprintf(buf, sizeof buf, "%.17g", values[y * grid.width + x]);
      if (x > 0) out.push_back(' ');
      out += buf;
    }
    out.push_back('\n');
  }
  return out;
}

GrayImage render_8bit(const ImageGrid& image) {
  GrayImage out{image.grid, 255, std::vector<unsigned>(image.values.size(), 0)};
  if (image.values.empty()) return out;
  const auto [lo, hi] = std::minmax_element(image.values.begin(), image.values.end());
  const double span = *hi - *lo;
  if (!(span > 0.0)) return out;
  for (std::size_t i = 0; i < image.values.size(); ++i) {
    out.pixels[i] = static_cast<unsigned>(std::lround((image.values[i] - *lo) / span * 255.0));
  }
  return out;
}

std::string encode_patterns(const PatternSet& patterns) {
  std::string out;
  out.reserve(patterns.size() * patterns.grid().blocks() * 2);
  for (std::size_t i = 0; i < patterns.size(); ++i) {
    const auto mask = patterns.pattern(i);
    for (std::size_t b = 0; b < mask.size(); ++b) {
      if (b > 0) out.push_back(' ');
      out.push_back(mask[b] != 0 ? '1' : '0');
    }
    out.push_back('\n');
  }
  return out;
}

ObjectMask read_object(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  ObjectMask object;
  if (bytes.rfind("P2", 0) == 0 || bytes.rfind("P5", 0) == 0) {
    const GrayImage img = parse_pgm(bytes);
    object.grid = img.grid;
    object.transmission.reserve(img.pixels.size());
    for (unsigned v : img.pixels) {
      object.transmission.push_back(static_cast<double>(v) / img.max_value);
    }
  } else {
    const auto rows = parse_float_grid(bytes);
    object.grid = {rows.front().size(), rows.size()};
    for (const auto& row : rows) object.transmission.insert(object.transmission.end(), row.begin(), row.end());
  }
  try {
    object.validate();
  } catch (const std::domain_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return object;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out << contents;
  if (!out) throw FormatError("failed writing " + path.string());
}

}  // namespace qsi::cgi
