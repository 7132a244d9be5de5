#include <doctest.h>

#include <filesystem>

#include "qsi/image_io.hpp"

using namespace qsi::cgi;

TEST_CASE("P2 with comments") {
  const auto img = parse_pgm("P2\n# made by hand\n3 2\n# max\n9\n0 1 2\n3 4 9\n");
  CHECK(img.grid == GridSize{3, 2});
  CHECK(img.max_value == 9);
  CHECK(img.pixels == std::vector<unsigned>{0, 1, 2, 3, 4, 9});
}

TEST_CASE("P5 8-bit and 16-bit") {
  std::string p5 = "P5 2 2 255\n";
  p5 += std::string{'\x00', '\x7f', '\x80', '\xff'};
  CHECK(parse_pgm(p5).pixels == std::vector<unsigned>{0, 127, 128, 255});

  std::string wide = "P5\n2 1\n65535\n";
  wide += std::string{'\x01', '\x02', '\xff', '\xff'};
  CHECK(parse_pgm(wide).pixels == std::vector<unsigned>{258, 65535});
}

TEST_CASE("malformed PGM is rejected") {
  CHECK_THROWS_AS(parse_pgm("P3\n1 1\n255\n0\n"), FormatError);
  CHECK_THROWS_AS(parse_pgm("P2\n2 2\n255\n0 1 2\n"), FormatError);
  CHECK_THROWS_AS(parse_pgm("P2\n1 1\n10\n11\n"), FormatError);
  CHECK_THROWS_AS(parse_pgm("P5\n2 2\n255\nab"), FormatError);
  CHECK_THROWS_AS(parse_pgm("P2\n0 3\n255\n"), FormatError);
}

TEST_CASE("PGM round trip") {
  const GrayImage img{{3, 2}, 255, {0, 10, 20, 200, 250, 255}};
  const auto bytes = encode_pgm(img);
  CHECK(bytes.rfind("P5\n3 2\n255\n", 0) == 0);
  const auto back = parse_pgm(bytes);
  CHECK(back.pixels == img.pixels);
  CHECK(back.grid == img.grid);
}

TEST_CASE("float grid round trip is exact") {
  const std::vector<double> v{0.1, -2.5e-17, 3.0, 1.0 / 3.0, 1e300, -0.0};
  const auto text = encode_float_grid({3, 2}, v);
  const auto rows = parse_float_grid(text);
  REQUIRE(rows.size() == 2);
  REQUIRE(rows[0].size() == 3);
  for (std::size_t i = 0; i < v.size(); ++i) CHECK(rows[i / 3][i % 3] == v[i]);
  CHECK_THROWS_AS(parse_float_grid("1 2\n3\n"), FormatError);
  CHECK_THROWS_AS(parse_float_grid("1 x\n"), FormatError);
  CHECK_THROWS_AS(parse_float_grid("# nothing\n"), FormatError);
}

TEST_CASE("8-bit rendering") {
  ImageGrid img;
  img.grid = {3, 1};
  img.values = {-1.0, 0.0, 1.0};
  CHECK(render_8bit(img).pixels == std::vector<unsigned>{0, 128, 255});
  img.values = {0.0, 0.0, 0.0};
  CHECK(render_8bit(img).pixels == std::vector<unsigned>{0, 0, 0});
}

TEST_CASE("pattern export") {
  PatternSet p({2, 1}, PatternMode::random, 0, {1, 0, 0, 1});
  CHECK(encode_patterns(p) == "1 0\n0 1\n");
}

TEST_CASE("object files") {
  const auto dir = std::filesystem::temp_directory_path() / "qsi_image_io_test";
  std::filesystem::create_directories(dir);
  write_file(dir / "o.pgm", "P2\n2 1\n4\n4 1\n");
  const auto a = read_object(dir / "o.pgm");
  CHECK(a.grid == GridSize{2, 1});
  CHECK(a.transmission == std::vector<double>{1.0, 0.25});

  write_file(dir / "o.txt", "0.5 1\n0 0.25\n");
  const auto b = read_object(dir / "o.txt");
  CHECK(b.grid == GridSize{2, 2});
  CHECK(b.transmission == std::vector<double>{0.5, 1.0, 0.0, 0.25});

  write_file(dir / "bad.txt", "0.5 1.5\n");
  CHECK_THROWS_AS(read_object(dir / "bad.txt"), FormatError);
  CHECK_THROWS_AS(read_object(dir / "missing.txt"), FormatError);
  std::filesystem::remove_all(dir);
}
