#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "storyline/backend/backend.hpp"
#include "storyline/model/embedding.hpp"
#include "storyline/model/mask.hpp"
#include "storyline/model/types.hpp"

namespace storyline {

// Config-side view of one backend.
struct BackendDescriptor {
  std::string id;
  std::vector<Capability> capabilities;
  // mock:<fixture.json> | subprocess:<command> | unix:<socket> | http://host:port
  // | builtin:mean-fill-inpaint | builtin:echo-generator
  std::string endpoint;
  // 0 means "take the handshake's value".
  int max_in_flight = 0;
};

BackendDescriptor DescriptorFromJson(const nlohmann::json& j);
nlohmann::json ToJson(const BackendDescriptor& d);

// Opens the transport named by the endpoint; relative fixture paths resolve
// against base_dir. Throws ConfigError for unknown locators and
// TransportError when the backend cannot be reached.
std::shared_ptr<Backend> OpenBackend(const BackendDescriptor& descriptor,
                                     const std::filesystem::path& base_dir);

struct DetectionResult {
  ImageSize image_size;
  std::vector<Detection> detections;
};

struct RefineResult {
  std::vector<Caption> captions;
  // Parallel to captions.
  std::vector<std::vector<std::string>> warnings;
};

// One element of a generate_image context.
struct ContextPart {
  std::optional<std::string> text;
  std::optional<ImageRef> image;
};

inline constexpr std::string_view kSequenceSlot = "{sequence}";
inline constexpr std::string_view kCaptionsSlot = "{captions}";

// Throws PreconditionError when a slot is missing from the template.
std::string RenderRefinePrompt(std::string_view prompt_template, std::string_view sequence_caption,
                               std::span<const Caption> raw_captions);

// Typed, contract-checking front end over a set of backends. Each capability
// routes to one backend; calls beyond that backend's max_in_flight wait for a
// free slot. Thread-safe once routing is set up.
class PerceptionClient {
 public:
  PerceptionClient() = default;

  // Routes `capabilities` (all the backend declares when empty) to `backend`.
  // Throws ConfigError when a listed capability is not in the handshake or is
  // already routed.
  void Register(std::shared_ptr<Backend> backend, std::vector<Capability> capabilities = {},
                int max_in_flight = 0);

  bool Has(Capability c) const { return routes_.contains(c); }
  std::string BackendId(Capability c) const;
  std::map<std::string, std::string> BackendIds() const;
  std::optional<std::string> SpaceId(Capability c) const;

  // Throws CapabilityError naming the first missing capability.
  void Require(std::span<const Capability> capabilities) const;

  // Whole image when region is empty, otherwise the crop.
  EmbeddingVector EmbedImage(const ImageRef& image, std::optional<PixelBox> region = std::nullopt);
  EmbeddingVector EmbedText(std::string_view text);
  Caption CaptionImage(const ImageRef& image);
  Caption CaptionSequence(std::span<const ImageRef> frames);
  RefineResult RefineCaptions(const Caption& sequence_caption, std::span<const Caption> raw_captions,
                              std::string_view prompt_template);
  DetectionResult Detect(const ImageRef& image, std::span<const std::string> labels);
  InstanceMask Segment(const ImageRef& image, const PixelBox& box);
  std::optional<EmbeddingVector> FaceEmbedding(const ImageRef& image, const PixelBox& box);
  double AestheticScore(const ImageRef& image);
  ImageRef Inpaint(const ImageRef& image, const Rle& mask);
  ImageRef GenerateImage(std::span<const ContextPart> context);

 private:
  struct Route {
    std::shared_ptr<Backend> backend;
    std::shared_ptr<std::counting_semaphore<>> slots;
  };

  nlohmann::json Call(Capability c, const nlohmann::json& payload);
  EmbeddingVector ToEmbedding(Capability c, const nlohmann::json& values);

  std::map<Capability, Route> routes_;
  std::mutex dims_mu_;
  std::map<Capability, std::size_t> dims_;
};

}  // namespace storyline
