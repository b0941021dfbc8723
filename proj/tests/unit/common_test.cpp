#include <atomic>
#include <stdexcept>

#include <gtest/gtest.h>

#include "storyline/common/digest.hpp"
#include "storyline/common/errors.hpp"
#include "storyline/common/thread_pool.hpp"
#include "synthetic.hpp"

namespace storyline {
namespace {

TEST(Digest, KnownSha256) {
  EXPECT_EQ(Sha256Digest("abc"), "sha256:ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(Sha256Digest(""), "sha256:e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(Digest, Base64RoundTrip) {
  EXPECT_EQ(Base64Encode("hello"), "aGVsbG8=");
  EXPECT_EQ(Base64Decode("aGVsbG8="), "hello");
  const std::string binary("\x00\xff\x10\x80", 4);
  EXPECT_EQ(Base64Decode(Base64Encode(binary)), binary);
  EXPECT_EQ(Base64Decode(""), "");
  EXPECT_THROW(Base64Decode("a*b="), ParseError);
}

TEST(Digest, FileHelpers) {
  const auto dir = testing::TempDir("digest");
  WriteFileAtomic(dir / "f.bin", "payload");
  EXPECT_EQ(ReadFileBytes(dir / "f.bin"), "payload");
  EXPECT_FALSE(std::filesystem::exists(dir / "f.bin.tmp"));
  EXPECT_THROW(ReadFileBytes(dir / "missing"), IoError);
  try {
    ReadFileBytes(dir / "missing");
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("missing"), std::string::npos);
  }
}

TEST(ThreadPool, ParallelMapKeepsOrder) {
  ThreadPool pool(3);
  const auto out = ParallelMap(&pool, 100, [](std::size_t i) { return i * i; });
  ASSERT_EQ(out.size(), 100u);
  for (std::size_t i = 0; i < out.size(); ++i) EXPECT_EQ(out[i], i * i);
  const auto inline_out = ParallelMap(nullptr, 5, [](std::size_t i) { return i + 1; });
  EXPECT_EQ(inline_out, (std::vector<std::size_t>{1, 2, 3, 4, 5}));
}

TEST(ThreadPool, RethrowsFirstErrorAfterAllTasksFinish) {
  ThreadPool pool(2);
  std::atomic<int> ran{0};
  try {
    ParallelFor(&pool, 10, [&](std::size_t i) {
      ++ran;
      if (i == 3 || i == 7) throw std::runtime_error("task " + std::to_string(i));
    });
    FAIL() << "expected an exception";
  } catch (const std::runtime_error& e) {
    EXPECT_STREQ(e.what(), "task 3");
  }
  EXPECT_EQ(ran.load(), 10);
}

TEST(Rng, DeterministicStream) {
  testing::Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.Uniform(), b.Uniform());
  testing::Rng c(1);
  for (int i = 0; i < 1000; ++i) {
    const int v = c.Int(-2, 3);
    EXPECT_GE(v, -2);
    EXPECT_LE(v, 3);
  }
}

}  // namespace
}  // namespace storyline
