#include "storyline/model/mask.hpp"

#include <stdexcept>
#include <string>

#include "storyline/common/errors.hpp"

namespace storyline {

BinaryMask::BinaryMask(int height, int width) : height_(height), width_(width) {
  if (height < 0 || width < 0) throw std::invalid_argument("mask dimensions must be nonnegative");
  bits_.assign(static_cast<std::size_t>(height) * static_cast<std::size_t>(width), 0);
}

void BinaryMask::Fill(const PixelBox& box) {
  for (int y = std::max(0, box.y_min); y < std::min(height_, box.y_max); ++y) {
    for (int x = std::max(0, box.x_min); x < std::min(width_, box.x_max); ++x) set(y, x);
  }
}

std::uint64_t BinaryMask::Area() const {
  std::uint64_t n = 0;
  for (auto b : bits_) n += b;
  return n;
}

Rle EncodeRle(const BinaryMask& mask) {
  Rle rle{mask.height(), mask.width(), {}};
  bool current = false;
  std::uint32_t run = 0;
  for (int x = 0; x < mask.width(); ++x) {
    for (int y = 0; y < mask.height(); ++y) {
      const bool v = mask.at(y, x);
      if (v != current) {
        rle.counts.push_back(run);
        run = 0;
        current = v;
      }
      ++run;
    }
  }
  rle.counts.push_back(run);
  return rle;
}

void CheckRle(const Rle& rle) {
  if (rle.height < 0 || rle.width < 0) throw ParseError("rle: negative size");
  std::uint64_t total = 0;
  for (auto c : rle.counts) total += c;
  const auto expected = static_cast<std::uint64_t>(rle.height) * static_cast<std::uint64_t>(rle.width);
  if (total != expected) {
    throw ParseError("rle: counts sum to " + std::to_string(total) + ", expected " +
                     std::to_string(expected));
  }
}

BinaryMask DecodeRle(const Rle& rle) {
  CheckRle(rle);
  BinaryMask mask(rle.height, rle.width);
  std::uint64_t pos = 0;
  bool value = false;
  const auto h = static_cast<std::uint64_t>(rle.height);
  for (auto c : rle.counts) {
    if (value) {
      for (std::uint64_t p = pos; p < pos + c; ++p) {
        mask.set(static_cast<int>(p % h), static_cast<int>(p / h));
      }
    }
    pos += c;
    value = !value;
  }
  return mask;
}

std::uint64_t RleArea(const Rle& rle) {
  std::uint64_t area = 0;
  for (std::size_t i = 1; i < rle.counts.size(); i += 2) area += rle.counts[i];
  return area;
}

bool RleWithinBox(const Rle& rle, const PixelBox& box) {
  CheckRle(rle);
  if (rle.height == 0) return true;
  const auto h = static_cast<std::uint64_t>(rle.height);
  std::uint64_t pos = 0;
  for (std::size_t i = 0; i < rle.counts.size(); ++i) {
    const std::uint64_t c = rle.counts[i];
    if (i % 2 == 1 && c > 0) {
      // A set run spans columns pos/h .. (pos+c-1)/h.
      const auto first = pos;
      const auto last = pos + c - 1;
      const auto col_first = static_cast<int>(first / h);
      const auto col_last = static_cast<int>(last / h);
      if (col_first < box.x_min || col_last >= box.x_max) return false;
      if (col_first == col_last) {
        if (static_cast<int>(first % h) < box.y_min || static_cast<int>(last % h) >= box.y_max) {
          return false;
        }
      } else {
        // Crossing a column boundary touches row h-1 and row 0.
        if (box.y_min > 0 || box.y_max < rle.height) return false;
      }
    }
    pos += c;
  }
  return true;
}

Rle RleUnion(const Rle& a, const Rle& b) {
  if (a.height != b.height || a.width != b.width) {
    throw std::invalid_argument("rle union: size mismatch");
  }
  const BinaryMask ma = DecodeRle(a);
  const BinaryMask mb = DecodeRle(b);
  BinaryMask out(a.height, a.width);
  for (int y = 0; y < a.height; ++y) {
    for (int x = 0; x < a.width; ++x) out.set(y, x, ma.at(y, x) || mb.at(y, x));
  }
  return EncodeRle(out);
}

InstanceMask InstanceMask::FromRle(Rle rle) {
  CheckRle(rle);
  const auto area = RleArea(rle);
  return InstanceMask{std::move(rle), area};
}

}  // namespace storyline
