#pragma once

#include <cstdint>
#include <vector>

namespace storyline {

// Pixel rectangle in absolute integer coordinates. Covers columns
// [x_min, x_max) and rows [y_min, y_max).
struct PixelBox {
  int x_min = 0;
  int y_min = 0;
  int x_max = 0;
  int y_max = 0;

  bool Degenerate() const { return x_max <= x_min || y_max <= y_min; }
  bool Within(int width, int height) const {
    return x_min >= 0 && y_min >= 0 && x_max <= width && y_max <= height;
  }
  bool Contains(int x, int y) const { return x >= x_min && x < x_max && y >= y_min && y < y_max; }
  long long Area() const { return Degenerate() ? 0 : 1LL * (x_max - x_min) * (y_max - y_min); }

  friend bool operator==(const PixelBox&, const PixelBox&) = default;
};

// Dense binary mask, row-major.
class BinaryMask {
 public:
  BinaryMask(int height, int width);

  int height() const { return height_; }
  int width() const { return width_; }
  bool at(int y, int x) const { return bits_[Index(y, x)] != 0; }
  void set(int y, int x, bool value = true) { bits_[Index(y, x)] = value ? 1 : 0; }
  void Fill(const PixelBox& box);
  std::uint64_t Area() const;

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  std::size_t Index(int y, int x) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int height_;
  int width_;
  std::vector<std::uint8_t> bits_;
};

// COCO-style uncompressed run-length encoding: runs over the column-major
// pixel order, alternating unset/set and always starting with an unset run
// (which may be 0).
struct Rle {
  int height = 0;
  int width = 0;
  std::vector<std::uint32_t> counts;

  friend bool operator==(const Rle&, const Rle&) = default;
};

Rle EncodeRle(const BinaryMask& mask);

// Throws ParseError when the counts do not sum to height * width.
BinaryMask DecodeRle(const Rle& rle);

// Throws ParseError under the same condition as DecodeRle.
void CheckRle(const Rle& rle);

std::uint64_t RleArea(const Rle& rle);

// True when every set pixel lies inside `box`.
bool RleWithinBox(const Rle& rle, const PixelBox& box);

// Pixel-wise OR; both masks must share a size.
Rle RleUnion(const Rle& a, const Rle& b);

// Instance mask; area is derived from the encoding.
struct InstanceMask {
  Rle rle;
  std::uint64_t area = 0;

  static InstanceMask FromRle(Rle rle);

  friend bool operator==(const InstanceMask&, const InstanceMask&) = default;
};

}  // namespace storyline
