#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>

#include "prk/checkpoint.hpp"
#include "prk/errors.hpp"
#include "prk/formats.hpp"
#include "prk/rng.hpp"

using namespace prk;

namespace {

std::string tmp(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "prk_formats_test";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

}  // namespace

TEST(Pfm, RoundTripIsBitExact) {
  Rng rng(1);
  for (int k = 0; k < 10; ++k) {
    Field f(rng.uniform_int(1, 20), rng.uniform_int(1, 20));
    for (double& v : f.values()) v = static_cast<double>(static_cast<float>(rng.uniform(0.0, 100.0)));
    write_pfm(tmp("a.pfm"), f);
    EXPECT_EQ(read_pfm(tmp("a.pfm")), f);
  }
}

TEST(Pfm, RowsAreStoredBottomUp) {
  Field f(2, 1);
  f(0, 0) = 1.0;
  f(1, 0) = 2.0;
  write_pfm(tmp("b.pfm"), f);
  const std::string bytes = read_file(tmp("b.pfm"));
  float first;
  std::memcpy(&first, bytes.data() + bytes.size() - 8, 4);
  EXPECT_EQ(first, 2.0f);
}

TEST(Pfm, RejectsBigEndianScale) {
  write_file(tmp("c.pfm"), std::string("Pf\n1 1\n1.0\n") + std::string(4, '\0'));
  try {
    read_pfm(tmp("c.pfm"));
    FAIL();
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("big-endian"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("byte offset 7"), std::string::npos);
  }
}

TEST(Pfm, MalformedHeaderNamesOffset) {
  write_file(tmp("d.pfm"), "Pf\nx 1\n-1.0\n");
  try {
    read_pfm(tmp("d.pfm"));
    FAIL();
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("byte offset 3"), std::string::npos);
  }
  write_file(tmp("e.pfm"), "Pf\n2 2\n-1.0\n1234");
  EXPECT_THROW(read_pfm(tmp("e.pfm")), IoError);
  EXPECT_THROW(read_pfm(tmp("missing.pfm")), IoError);
}

TEST(Depth, ZeroEncodesInvalidAndSidecarWins) {
  Field f(2, 2, 3.0);
  Mask v(2, 2, 1);
  v(0, 1) = 0;
  write_depth(tmp("f.pfm"), DepthMap(f, v));
  const DepthMap d = read_depth(tmp("f.pfm"));
  EXPECT_EQ(d.valid, v);
  EXPECT_EQ(d.depth(0, 1), 0.0);
  Mask side(2, 2, 1);
  side(1, 1) = 0;
  write_mask(tmp("f_mask.pgm"), side);
  EXPECT_EQ(read_depth(tmp("f.pfm"), tmp("f_mask.pgm")).valid, side);
}

TEST(Pgm, RoundTrip) {
  Rng rng(2);
  Grid<std::uint8_t> g(7, 9);
  for (auto& v : g.values()) v = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
  write_pgm(tmp("g.pgm"), g);
  EXPECT_EQ(read_pgm(tmp("g.pgm")), g);
  LabelMap seg(3, 3, 4);
  write_labels(tmp("s.pgm"), seg);
  EXPECT_EQ(read_labels(tmp("s.pgm")), seg);
}

TEST(Pgm, AcceptsHeaderComments) {
  write_file(tmp("h.pgm"), std::string("P5\n# note\n2 1\n255\n") + "\x01\x02");
  const auto g = read_pgm(tmp("h.pgm"));
  EXPECT_EQ(g(0, 1), 2);
  write_file(tmp("i.pgm"), std::string("P5\n2 1\n65535\n") + "\x01\x02");
  EXPECT_THROW(read_pgm(tmp("i.pgm")), IoError);
}

TEST(Ppm, RoundTrip) {
  Rng rng(3);
  Tensor t({3, 5, 4});
  for (double& v : t.data()) v = rng.uniform_int(0, 255) / 255.0;
  write_ppm(tmp("j.ppm"), t);
  EXPECT_EQ(read_ppm(tmp("j.ppm")), t);
}

TEST(Checkpoint, RoundTripAndValidation) {
  NamedTensors blobs{{"a", Tensor({2, 3}, 1.25)}, {"b.w", Tensor({1}, -3.0)}, {"s", Tensor::scalar(7.0)}};
  write_checkpoint(tmp("k.ckpt"), blobs);
  const NamedTensors back = read_checkpoint(tmp("k.ckpt"));
  ASSERT_EQ(back.size(), blobs.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].first, blobs[i].first);
    EXPECT_EQ(back[i].second, blobs[i].second);
  }
  std::string bytes = read_file(tmp("k.ckpt"));
  write_file(tmp("l.ckpt"), bytes.substr(0, bytes.size() - 3));
  EXPECT_THROW(read_checkpoint(tmp("l.ckpt")), IoError);
  write_file(tmp("m.ckpt"), "garbage!");
  EXPECT_THROW(read_checkpoint(tmp("m.ckpt")), IoError);
}
