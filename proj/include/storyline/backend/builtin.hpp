#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "storyline/backend/backend.hpp"

namespace storyline {

// 8-bit RGB raster, row-major. Only used by the built-in inpainter.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // width * height * 3

  friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

// Binary PPM (P6, maxval 255). Throws ParseError on anything else.
RgbImage DecodePpm(const std::string& bytes);
std::string EncodePpm(const RgbImage& image);

inline constexpr std::uint8_t kInpaintDefaultGray = 128;

// Fills masked pixels with the per-channel mean of the unmasked pixels
// (rounded to nearest), or mid-gray when the mask covers the whole image.
// Throws PreconditionError when the mask size differs from the image.
RgbImage MeanFillInpaint(const RgbImage& image, const Rle& mask);

// Serves `inpaint` over PPM files on disk; outputs are written to
// `output_dir` under their content digest. An empty mask returns the input
// reference unchanged.
class MeanFillInpainter : public Backend {
 public:
  explicit MeanFillInpainter(std::filesystem::path output_dir);

  const Handshake& handshake() const override { return handshake_; }
  nlohmann::json Invoke(Capability capability, const nlohmann::json& payload) override;

 private:
  std::filesystem::path output_dir_;
  Handshake handshake_;
};

// Model-under-test stub for `generate_image`: answers with the last image in
// the context, or with a text-derived placeholder reference when the context
// holds no image.
class EchoGenerator : public Backend {
 public:
  EchoGenerator();

  const Handshake& handshake() const override { return handshake_; }
  nlohmann::json Invoke(Capability capability, const nlohmann::json& payload) override;

 private:
  Handshake handshake_;
};

}  // namespace storyline
