#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "storyline/backend/client.hpp"
#include "storyline/common/thread_pool.hpp"
#include "storyline/pipeline/config.hpp"
#include "storyline/pipeline/story.hpp"

namespace storyline::pipeline {

// Shared context for stage functions. `pool` may be null (run inline).
struct StageContext {
  PerceptionClient* client = nullptr;
  ThreadPool* pool = nullptr;
  const PipelineConfig* config = nullptr;
};

// Reads and digests every frame. Throws PreconditionError for an empty or
// duplicate-path manifest and StageError("ingest") for unreadable files.
Story IngestStory(const StoryManifest& manifest);

// Embeds every frame, then keeps a frame iff its cosine with the last kept
// frame is below `threshold`. Frames keep their original indices.
void EmbedFrames(Story& story, const StageContext& ctx);
void Deduplicate(Story& story, double threshold);

void CaptionFrames(Story& story, const StageContext& ctx);
void ScoreFrames(Story& story, const StageContext& ctx);

// Noun mentions of a raw caption, first occurrence of each surface kept.
std::vector<EntityMention> ExtractEntityLabels(const Caption& caption);

// caption_sequence then refine_captions; refined captions attach by position.
void RefineStoryCaptions(Story& story, const StageContext& ctx);

// Base labels (first-mention order) detect is asked for.
std::vector<std::string> DetectionLabels(const Caption& refined);

// Detects each frame's caption labels, drops low-confidence boxes, then
// embeds each box (plus a face embedding for person labels when available).
void DetectStory(Story& story, const StageContext& ctx);

// Similarity used for matching a detection to an identity.
double FusedSimilarity(const EmbeddingVector& appearance_a, const std::optional<EmbeddingVector>& face_a,
                       const EmbeddingVector& appearance_b, const std::optional<EmbeddingVector>& face_b);

// Frame-by-frame, label-by-label assignment against the running identity
// table. Needs appearances (and optional faces) filled in.
void AlignInstanceIdentities(Story& story, double match_floor);

void SegmentInstances(Story& story, const StageContext& ctx);

struct FilterCounts {
  int kept = 0;
  int flagged = 0;
  int aesthetic = 0;
  int too_few_instances = 0;
  int too_many_instances = 0;

  FilterCounts& operator+=(const FilterCounts& o);
  nlohmann::json ToJson() const;
};

// Why a frame would be dropped, or nullopt when it passes.
std::optional<std::string> RejectReason(const FrameState& frame, const FilterPolicy& policy, FilterMode mode);
FilterCounts FilterStory(Story& story, const FilterPolicy& policy, FilterMode mode);

// Drops the numeric suffix from identity-indexed tokens ("woman0" -> "woman").
std::string StripIdentityIndices(std::string_view text);

}  // namespace storyline::pipeline
