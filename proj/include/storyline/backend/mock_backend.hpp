#pragma once

#include <filesystem>
#include <memory>

#include <json.hpp>

#include "storyline/backend/backend.hpp"

namespace storyline {

// Fixture-driven backend. Every answer comes from an authored lookup table;
// an unlisted key is a FixtureMissError, never a default.
//
// Fixture document:
//   backend_id, version, space_id, embedding_dim, max_in_flight   (handshake)
//   capabilities           optional; defaults to the tables present
//   embed_image            {digest | "digest@x0,y0,x1,y1": [floats]}
//   embed_text             {text: [floats]}
//   caption_image          {digest: text}
//   caption_sequence       {"d1,d2,...": text}
//   refine_captions        {"raw1\nraw2...": [texts]} or "echo"
//   detect                 {digest: {"image_size": [h, w], "detections": [
//                              {"label", "bbox": [x0,y0,x1,y1], "confidence"}]}}
//   detect_filter_labels   bool, default true: drop detections whose label
//                          was not requested
//   segment                {"digest@box": {"counts": [...], "size": [h, w]}}
//   face_embedding         {"digest@box": [floats] | null}
//   aesthetic_score        {digest: number | null}
//   inpaint                {"digest#maskdigest": {"digest", "path"}}
//   generate_image         {context digest: {"digest", "path"}} or "echo"
class MockBackend : public Backend {
 public:
  explicit MockBackend(nlohmann::json fixture);
  static std::shared_ptr<MockBackend> FromFile(const std::filesystem::path& path);

  const Handshake& handshake() const override { return handshake_; }
  nlohmann::json Invoke(Capability capability, const nlohmann::json& payload) override;

 private:
  const nlohmann::json& Lookup(Capability capability, const std::string& key) const;

  nlohmann::json fixture_;
  Handshake handshake_;
  bool filter_labels_ = true;
};

}  // namespace storyline
