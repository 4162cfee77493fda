#include <doctest.h>

#include <fstream>

#include "gsr/errors.hpp"
#include "gsr/image.hpp"
#include "support/temp_dir.hpp"

using namespace gsr;

namespace {

void write_bytes(std::string const &path, std::string const &bytes)
{
  std::ofstream out(path, std::ios::binary);
  out << bytes;
}

} // namespace

TEST_SUITE("image") {

TEST_CASE("image storage is row-major")
{
  Image img(3, 2);
  img.at(1, 2) = 5.0;
  CHECK(img.width() == 3);
  CHECK(img.height() == 2);
  CHECK(img.size() == 6);
  CHECK(img.pixels()[1 * 3 + 2] == 5.0);
  CHECK(img.vec()[5] == 5.0);
  CHECK_THROWS_AS(Image(2, 2, std::vector<double>(3)), ContractError);
}

TEST_CASE("pgm round trip preserves 8-bit pixels")
{
  testing::TempDir dir;
  Image img(5, 3);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 5; ++c) { img.at(r, c) = 17.0 * r + 40.0 * c; }
  }
  write_pgm(dir.file("a.pgm"), img);
  CHECK(read_pgm(dir.file("a.pgm")) == img);
}

TEST_CASE("pgm writer clamps and rounds half away from zero")
{
  testing::TempDir dir;
  Image img(5, 1, {-3.0, 2.5, 2.49, 254.5, 900.0});
  write_pgm(dir.file("b.pgm"), img);
  auto const back = read_pgm(dir.file("b.pgm"));
  CHECK(back == Image(5, 1, {0.0, 3.0, 2.0, 255.0, 255.0}));
  CHECK(quantize_8bit(img) == back);
}

TEST_CASE("pgm reader skips header comments")
{
  testing::TempDir dir;
  write_bytes(dir.file("c.pgm"), std::string("P5\n# made by hand\n2 1\n# max\n255\n") + '\x07' + '\xff');
  CHECK(read_pgm(dir.file("c.pgm")) == Image(2, 1, {7.0, 255.0}));
}

TEST_CASE("pgm reader rejects bad files with the path in the message")
{
  testing::TempDir dir;
  auto const missing = dir.file("missing.pgm");
  try {
    read_pgm(missing);
    FAIL("expected an IoError");
  } catch (IoError const &e) {
    CHECK(std::string(e.what()).find(missing) != std::string::npos);
  }
  write_bytes(dir.file("p2.pgm"), "P2\n1 1\n255\n7\n");
  CHECK_THROWS_AS(read_pgm(dir.file("p2.pgm")), IoError);
  write_bytes(dir.file("short.pgm"), "P5\n4 4\n255\nabc");
  CHECK_THROWS_AS(read_pgm(dir.file("short.pgm")), IoError);
  write_bytes(dir.file("deep.pgm"), "P5\n1 1\n65535\nab");
  CHECK_THROWS_AS(read_pgm(dir.file("deep.pgm")), IoError);
}

} // TEST_SUITE
