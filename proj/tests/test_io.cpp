#include <gtest/gtest.h>

#include <filesystem>

#include "iseg/io.hpp"
#include "oracles.hpp"

using namespace iseg;

TEST(Pgm, Format) {
  const BinaryMask m(2, 3, std::vector<std::uint8_t>{1, 0, 1, 0, 0, 1});
  EXPECT_EQ(io::format_pgm(m), "P2\n3 2\n255\n255 0 255\n0 0 255\n");
}

TEST(Pgm, ParseCommentsAndNonzero) {
  const BinaryMask m = io::parse_pgm("P2\n# made by hand\n2 1\n255\n0 17\n");
  EXPECT_EQ(m.height(), 1u);
  EXPECT_EQ(m.width(), 2u);
  EXPECT_EQ(m[0], 0);
  EXPECT_EQ(m[1], 1);
}

TEST(Pgm, Errors) {
  EXPECT_THROW(io::parse_pgm("P5\n1 1\n255\n0\n"), io::ParseError);
  EXPECT_THROW(io::parse_pgm("P2\n2 2\n255\n0 0 0\n"), io::ParseError);
  EXPECT_THROW(io::parse_pgm("P2\n1 1\n255\n300\n"), io::ParseError);
  try {
    io::parse_pgm("P2\n1 1\n255\nabc\n", "mask.pgm");
    FAIL();
  } catch (const io::ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("mask.pgm:4"), std::string::npos) << e.what();
  }
}

TEST(Pm, ParseAndErrors) {
  const ProbMap p = io::parse_pm<UnitInterval>("PM 2 2\n0.1 0.2\n0.3 1\n");
  EXPECT_DOUBLE_EQ(p.at(1, 0), 0.3);
  EXPECT_THROW(io::parse_pm<UnitInterval>("PM 1 2\n0.1\n"), io::ParseError);
  EXPECT_THROW(io::parse_pm<UnitInterval>("PM 1 1\n1.5\n"), io::ParseError);
  EXPECT_THROW(io::parse_pm<UnitInterval>("XX 1 1\n0.5\n"), io::ParseError);
}

TEST(Files, RoundTripPreservesValues) {
  Rng rng(5, 5);
  const auto dir = std::filesystem::temp_directory_path() / "iseg_test_io";
  std::filesystem::create_directories(dir);
  for (int rep = 0; rep < 10; ++rep) {
    const ProbMap p = oracle::random_prob(rng, 1 + rng.below(5), 1 + rng.below(5));
    const BinaryMask m = oracle::random_mask(rng, 1 + rng.below(5), 1 + rng.below(5));
    io::write_pm(dir / "p.pm", p);
    io::write_pgm(dir / "m.pgm", m);
    EXPECT_EQ(io::read_prob_map(dir / "p.pm"), p);
    EXPECT_EQ(io::read_pgm(dir / "m.pgm"), m);
  }
  EXPECT_FALSE(std::filesystem::exists(dir / "p.pm.tmp"));
  std::filesystem::remove_all(dir);
}
