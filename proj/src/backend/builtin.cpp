#include "storyline/backend/builtin.hpp"

#include <cctype>
#include <cmath>
#include <sstream>

#include "storyline/common/digest.hpp"
#include "storyline/common/errors.hpp"

namespace storyline {

using nlohmann::json;

namespace {

// Reads the next whitespace-separated header integer, skipping comments.
int HeaderInt(const std::string& bytes, std::size_t& pos) {
  for (;;) {
    while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    if (pos < bytes.size() && bytes[pos] == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      continue;
    }
    break;
  }
  const std::size_t start = pos;
  while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) ++pos;
  if (start == pos) throw ParseError("ppm: bad header");
  return std::stoi(bytes.substr(start, pos - start));
}

}  // namespace

RgbImage DecodePpm(const std::string& bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') throw ParseError("ppm: not a P6 image");
  std::size_t pos = 2;
  RgbImage img;
  img.width = HeaderInt(bytes, pos);
  img.height = HeaderInt(bytes, pos);
  const int maxval = HeaderInt(bytes, pos);
  if (maxval != 255) throw ParseError("ppm: only maxval 255 is supported");
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
    throw ParseError("ppm: bad header terminator");
  }
  ++pos;
  const auto n = static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height) * 3;
  if (bytes.size() - pos < n) throw ParseError("ppm: truncated pixel data");
  img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                    bytes.begin() + static_cast<std::ptrdiff_t>(pos + n));
  return img;
}

std::string EncodePpm(const RgbImage& image) {
  std::string out = "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  out.append(image.pixels.begin(), image.pixels.end());
  return out;
}

RgbImage MeanFillInpaint(const RgbImage& image, const Rle& mask) {
  if (mask.height != image.height || mask.width != image.width) {
    throw PreconditionError("inpaint: mask size differs from image size");
  }
  const BinaryMask m = DecodeRle(mask);
  double sum[3] = {0, 0, 0};
  std::uint64_t kept = 0;
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      if (m.at(y, x)) continue;
      const auto base = (static_cast<std::size_t>(y) * image.width + x) * 3;
      for (int c = 0; c < 3; ++c) sum[c] += image.pixels[base + c];
      ++kept;
    }
  }
  std::uint8_t fill[3] = {kInpaintDefaultGray, kInpaintDefaultGray, kInpaintDefaultGray};
  if (kept > 0) {
    for (int c = 0; c < 3; ++c) {
      fill[c] = static_cast<std::uint8_t>(std::lround(sum[c] / static_cast<double>(kept)));
    }
  }
  RgbImage out = image;
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      if (!m.at(y, x)) continue;
      const auto base = (static_cast<std::size_t>(y) * image.width + x) * 3;
      for (int c = 0; c < 3; ++c) out.pixels[base + c] = fill[c];
    }
  }
  return out;
}

MeanFillInpainter::MeanFillInpainter(std::filesystem::path output_dir)
    : output_dir_(std::move(output_dir)) {
  handshake_.backend_id = "builtin-mean-fill-inpaint";
  handshake_.version = "1";
  handshake_.capabilities = {Capability::kInpaint};
  handshake_.max_in_flight = 4;
}

json MeanFillInpainter::Invoke(Capability capability, const json& payload) {
  if (capability != Capability::kInpaint) throw CapabilityError("mean-fill backend only inpaints");
  if (!payload.contains("image") || !payload.contains("mask")) {
    throw PreconditionError("inpaint: payload needs image and mask");
  }
  const ImageRef ref = wire::ImageRefFromJson(payload.at("image"));
  const Rle mask = wire::RleFromJson(payload.at("mask"));
  CheckRle(mask);
  if (ref.path.empty()) throw PreconditionError("inpaint: mean-fill needs a local image path");
  const RgbImage image = DecodePpm(ReadFileBytes(ref.path));
  if (mask.height != image.height || mask.width != image.width) {
    throw PreconditionError("inpaint: mask size differs from image size");
  }
  if (RleArea(mask) == 0) return json{{"image", wire::ImageRefJson(ref)}};
  const std::string bytes = EncodePpm(MeanFillInpaint(image, mask));
  const std::string digest = Sha256Digest(bytes);
  std::filesystem::create_directories(output_dir_);
  const auto out_path = output_dir_ / (digest.substr(digest.find(':') + 1) + ".ppm");
  if (!std::filesystem::exists(out_path)) WriteFileAtomic(out_path, bytes);
  return json{{"image", wire::ImageRefJson(ImageRef{digest, out_path.string()})}};
}

EchoGenerator::EchoGenerator() {
  handshake_.backend_id = "builtin-echo-generator";
  handshake_.version = "1";
  handshake_.capabilities = {Capability::kGenerateImage};
  handshake_.max_in_flight = 8;
}

json EchoGenerator::Invoke(Capability capability, const json& payload) {
  if (capability != Capability::kGenerateImage) throw CapabilityError("echo generator only generates");
  if (!payload.contains("context") || !payload.at("context").is_array() || payload.at("context").empty()) {
    throw PreconditionError("generate_image: empty context");
  }
  const auto& context = payload.at("context");
  for (auto it = context.rbegin(); it != context.rend(); ++it) {
    if (it->contains("image")) return json{{"image", it->at("image")}};
  }
  std::string text;
  for (const auto& part : context) text += part.value("text", std::string());
  return json{{"image", wire::ImageRefJson(ImageRef{Sha256Digest(text), ""})}};
}

}  // namespace storyline
