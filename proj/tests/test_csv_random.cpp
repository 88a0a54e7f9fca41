#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <set>

#include "morphconn/csv.hpp"
#include "morphconn/random.hpp"
#include "morphconn/sha256.hpp"
#include "support.hpp"

using namespace morphconn;

TEST(Csv, SplitLineHonoursQuotes) {
  EXPECT_EQ(csv::split_line("a,b,,c"), (std::vector<std::string>{"a", "b", "", "c"}));
  EXPECT_EQ(csv::split_line("\"x,y\",z"), (std::vector<std::string>{"x,y", "z"}));
  EXPECT_EQ(csv::split_line("\"say \"\"hi\"\"\",1"), (std::vector<std::string>{"say \"hi\"", "1"}));
  EXPECT_EQ(csv::split_line("s1,NYU,9.5,M,ASD,"),
            (std::vector<std::string>{"s1", "NYU", "9.5", "M", "ASD", ""}));
}

TEST(Csv, SplitWhitespace) {
  EXPECT_EQ(csv::split_whitespace("  G_front_sup \t 12  3.5 "),
            (std::vector<std::string>{"G_front_sup", "12", "3.5"}));
  EXPECT_TRUE(csv::split_whitespace("   ").empty());
}

TEST(Csv, LinesStripCarriageReturns) {
  EXPECT_EQ(csv::lines("a\r\nb\nc"), (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_EQ(csv::lines("a\n"), (std::vector<std::string>{"a"}));
}

TEST(Csv, StrictNumberParsing) {
  EXPECT_EQ(csv::parse_double("9.5"), 9.5);
  EXPECT_EQ(csv::parse_double(" 1e3 "), 1000.0);
  EXPECT_FALSE(csv::parse_double("nine"));
  EXPECT_FALSE(csv::parse_double("9.5x"));
  EXPECT_FALSE(csv::parse_double(""));
  EXPECT_EQ(csv::parse_int("42"), 42);
  EXPECT_FALSE(csv::parse_int("4.2"));
}

TEST(Csv, FormatDoubleRoundTrips) {
  Rng rng(5);
  for (int i = 0; i < 2000; ++i) {
    const double v = std::ldexp(rng.normal(), static_cast<int>(rng.uniform_index(80)) - 40);
    EXPECT_EQ(*csv::parse_double(csv::format_double(v)), v);
    EXPECT_EQ(*csv::parse_double(csv::format_double17(v)), v);
  }
  EXPECT_EQ(csv::format_double(0.1), "0.1");
  EXPECT_EQ(csv::format_double17(0.1), "0.10000000000000001");
}

TEST(Csv, EscapeQuotesSpecialFields) {
  EXPECT_EQ(csv::escape("plain"), "plain");
  EXPECT_EQ(csv::escape("a,b"), "\"a,b\"");
  EXPECT_EQ(csv::split_line(csv::escape("q\"uote") + ",x")[0], "q\"uote");
}

TEST(Csv, ReadMissingFileThrows) {
  EXPECT_THROW(csv::read_file("/nonexistent/morphconn/file.csv"), Error);
}

TEST(Random, DeriveSeedIsStableAndDistinct) {
  EXPECT_EQ(derive_seed(42, "split/6to11/r0"), derive_seed(42, "split/6to11/r0"));
  std::set<std::uint64_t> seen;
  for (const char* name : {"split/6to11/r0", "split/6to11/r1", "split/11to18/r0",
                           "forest/6to11/MF/r0", "forest/6to11/MCF/r0"}) {
    seen.insert(derive_seed(42, name));
  }
  EXPECT_EQ(seen.size(), 5u);
  EXPECT_NE(derive_seed(1, "x"), derive_seed(2, "x"));
  EXPECT_NE(derive_seed(7, std::uint64_t{0}), derive_seed(7, std::uint64_t{1}));
}

TEST(Random, SplitMix64KnownValue) {
  // First output of the reference SplitMix64 generator seeded with 0.
  EXPECT_EQ(splitmix64(0), 0xE220A8397B1DCDAFull);
}

TEST(Random, UniformIndexStaysInRangeAndCoversIt) {
  Rng rng(11);
  std::vector<int> hits(7, 0);
  for (int i = 0; i < 7000; ++i) {
    const auto k = rng.uniform_index(7);
    ASSERT_LT(k, 7u);
    ++hits[k];
  }
  for (int h : hits) EXPECT_GT(h, 850);
}

TEST(Random, Uniform01AndNormalMoments) {
  Rng rng(3);
  double sum = 0, sum2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform01();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    const double z = rng.normal();
    sum += z;
    sum2 += z * z;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.01);
  EXPECT_NEAR(sum2 / n, 1.0, 0.02);
}

TEST(Sha256, KnownVectors) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Sha256, FileMatchesString) {
  morphconn::testing::TempDir dir;
  csv::write_file(dir / "x.txt", "abc");
  EXPECT_EQ(sha256_file(dir / "x.txt"), sha256_hex("abc"));
}
