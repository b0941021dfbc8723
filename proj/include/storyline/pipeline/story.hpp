#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "storyline/common/errors.hpp"
#include "storyline/model/embedding.hpp"
#include "storyline/model/types.hpp"

namespace storyline::pipeline {

// Everything the pipeline knows about one frame as it moves through stages.
struct FrameState {
  Frame frame;
  std::string source_path;
  std::filesystem::path resolved_path;

  std::optional<EmbeddingVector> embedding;
  Caption caption_raw;
  Caption caption_refined;
  std::vector<std::string> warnings;

  ImageSize image_size;
  std::vector<Detection> detections;
  // Parallel to detections.
  std::vector<EmbeddingVector> appearances;
  std::vector<std::optional<EmbeddingVector>> faces;
  std::vector<int> identities;

  std::vector<Instance> instances;
  std::vector<IdentityRef> missing_in_image;
  std::optional<std::string> flag;

  ImageRef ImageForBackend() const;
  AnnotatedFrame ToAnnotated() const;
};

struct Story {
  std::string story_id;
  nlohmann::json source = nlohmann::json::object();
  std::vector<FrameState> frames;
  Caption sequence_caption;
  std::vector<InstanceIdentity> identities;
};

// A failure inside one stage; the whole story is abandoned.
class StageError : public Error {
 public:
  StageError(std::string story_id, std::string frame_id, std::string stage, std::string backend_id,
             const std::string& what);

  const std::string& story_id() const { return story_id_; }
  const std::string& frame_id() const { return frame_id_; }
  const std::string& stage() const { return stage_; }
  const std::string& backend_id() const { return backend_id_; }

 private:
  std::string story_id_;
  std::string frame_id_;
  std::string stage_;
  std::string backend_id_;
};

}  // namespace storyline::pipeline
