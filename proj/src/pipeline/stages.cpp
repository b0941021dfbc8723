#include "storyline/pipeline/stages.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>

#include "storyline/bench/assignment.hpp"
#include "storyline/common/digest.hpp"
#include "storyline/model/lexicon.hpp"
#include "storyline/model/mentions.hpp"

namespace storyline::pipeline {

namespace {

std::string BackendFor(const StageContext& ctx, Capability c) {
  return ctx.client != nullptr && ctx.client->Has(c) ? ctx.client->BackendId(c) : std::string();
}

// Runs fn, re-raising any library error as a StageError tagged with where it
// happened.
template <typename F>
auto Tagged(const Story& story, const std::string& frame_id, std::string_view stage, std::string backend_id,
            F&& fn) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(story.story_id, frame_id, std::string(stage), std::move(backend_id), e.what());
  }
}

}  // namespace

StageError::StageError(std::string story_id, std::string frame_id, std::string stage, std::string backend_id,
                       const std::string& what)
    : Error("story " + story_id + (frame_id.empty() ? "" : " frame " + frame_id) + " stage " + stage +
            (backend_id.empty() ? "" : " backend " + backend_id) + ": " + what),
      story_id_(std::move(story_id)),
      frame_id_(std::move(frame_id)),
      stage_(std::move(stage)),
      backend_id_(std::move(backend_id)) {}

ImageRef FrameState::ImageForBackend() const {
  return ImageRef{frame.image.digest, resolved_path.string()};
}

AnnotatedFrame FrameState::ToAnnotated() const {
  AnnotatedFrame a;
  a.frame = frame;
  a.caption_raw = caption_raw;
  a.caption_refined = caption_refined;
  a.instances = instances;
  a.missing_in_image = missing_in_image;
  a.flag = flag;
  return a;
}

Story IngestStory(const StoryManifest& manifest) {
  if (manifest.frame_paths.empty()) {
    throw PreconditionError("story " + manifest.story_id + ": manifest has no frames");
  }
  std::set<std::string> seen;
  for (const auto& p : manifest.frame_paths) {
    if (!seen.insert(p).second) {
      throw PreconditionError("story " + manifest.story_id + ": duplicate frame path " + p);
    }
  }
  Story story;
  story.story_id = manifest.story_id;
  story.source = manifest.source;
  for (std::size_t i = 0; i < manifest.frame_paths.size(); ++i) {
    FrameState f;
    f.frame.story_id = manifest.story_id;
    f.frame.index = static_cast<int>(i);
    f.frame.frame_id = manifest.story_id + "#" + std::to_string(i);
    f.source_path = manifest.frame_paths[i];
    f.resolved_path = i < manifest.resolved_paths.size() ? manifest.resolved_paths[i]
                                                         : std::filesystem::path(manifest.frame_paths[i]);
    const auto bytes = Tagged(story, f.frame.frame_id, "ingest", "",
                              [&] { return ReadFileBytes(f.resolved_path); });
    f.frame.image = ImageRef{Sha256Digest(bytes), f.source_path};
    story.frames.push_back(std::move(f));
  }
  return story;
}

void EmbedFrames(Story& story, const StageContext& ctx) {
  const auto backend = BackendFor(ctx, Capability::kEmbedImage);
  ParallelFor(ctx.pool, story.frames.size(), [&](std::size_t i) {
    auto& f = story.frames[i];
    f.embedding = Tagged(story, f.frame.frame_id, "dedup", backend,
                         [&] { return ctx.client->EmbedImage(f.ImageForBackend()); });
  });
}

void Deduplicate(Story& story, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) throw PreconditionError("dedup threshold must be in (0, 1]");
  std::vector<FrameState> kept;
  for (auto& f : story.frames) {
    if (!f.embedding) throw PreconditionError("dedup: frame " + f.frame.frame_id + " has no embedding");
    if (!kept.empty() && Cosine(*kept.back().embedding, *f.embedding) >= threshold) continue;
    kept.push_back(std::move(f));
  }
  story.frames = std::move(kept);
}

void CaptionFrames(Story& story, const StageContext& ctx) {
  const auto backend = BackendFor(ctx, Capability::kCaptionImage);
  // Collect every failure so the error names all uncaptioned frames.
  auto errors = ParallelMap(ctx.pool, story.frames.size(), [&](std::size_t i) -> std::string {
    auto& f = story.frames[i];
    try {
      f.caption_raw = ctx.client->CaptionImage(f.ImageForBackend());
      f.caption_raw.entity_mentions = ExtractEntityLabels(f.caption_raw);
      return {};
    } catch (const std::exception& e) {
      return f.frame.frame_id + " (" + e.what() + ")";
    }
  });
  std::string failed;
  std::string first_frame;
  for (const auto& e : errors) {
    if (e.empty()) continue;
    if (first_frame.empty()) first_frame = e.substr(0, e.find(' '));
    failed += failed.empty() ? e : ", " + e;
  }
  if (!failed.empty()) {
    throw StageError(story.story_id, first_frame, "caption", backend, "uncaptioned frames: " + failed);
  }
}

void ScoreFrames(Story& story, const StageContext& ctx) {
  const auto backend = BackendFor(ctx, Capability::kAestheticScore);
  ParallelFor(ctx.pool, story.frames.size(), [&](std::size_t i) {
    auto& f = story.frames[i];
    f.frame.aesthetic_score = Tagged(story, f.frame.frame_id, "aesthetic", backend,
                                     [&] { return ctx.client->AestheticScore(f.ImageForBackend()); });
  });
}

std::vector<EntityMention> ExtractEntityLabels(const Caption& caption) {
  std::vector<EntityMention> out;
  std::set<std::string> surfaces;
  for (auto& m : FindNounMentions(caption.text)) {
    std::string key = m.surface;
    std::transform(key.begin(), key.end(), key.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (surfaces.insert(key).second) out.push_back(std::move(m));
  }
  return out;
}

void RefineStoryCaptions(Story& story, const StageContext& ctx) {
  if (story.frames.empty()) throw PreconditionError("story " + story.story_id + ": nothing to refine");
  std::vector<ImageRef> images;
  std::vector<Caption> raw;
  for (const auto& f : story.frames) {
    images.push_back(f.ImageForBackend());
    raw.push_back(f.caption_raw);
  }
  // caption_sequence needs two frames; a lone frame narrates itself.
  if (story.frames.size() == 1) {
    story.sequence_caption = Caption{raw[0].text, CaptionKind::kSequence, {}};
  } else {
    story.sequence_caption = Tagged(story, "", "caption_sequence", BackendFor(ctx, Capability::kCaptionSequence),
                                    [&] { return ctx.client->CaptionSequence(images); });
  }
  auto result = Tagged(story, "", "refine", BackendFor(ctx, Capability::kRefineCaptions), [&] {
    return ctx.client->RefineCaptions(story.sequence_caption, raw, ctx.config->prompt_template);
  });
  for (std::size_t i = 0; i < story.frames.size(); ++i) {
    story.frames[i].caption_refined = std::move(result.captions[i]);
    for (auto& w : result.warnings[i]) story.frames[i].warnings.push_back("refine: " + w);
  }
}

std::vector<std::string> DetectionLabels(const Caption& refined) {
  std::vector<std::string> labels;
  for (const auto& m : FindNounMentions(refined.text)) {
    if (std::find(labels.begin(), labels.end(), m.label) == labels.end()) labels.push_back(m.label);
  }
  return labels;
}

void DetectStory(Story& story, const StageContext& ctx) {
  const auto detect_backend = BackendFor(ctx, Capability::kDetect);
  const auto embed_backend = BackendFor(ctx, Capability::kEmbedImage);
  const auto face_backend = BackendFor(ctx, Capability::kFaceEmbedding);
  const bool faces = ctx.client->Has(Capability::kFaceEmbedding);
  const double min_conf = ctx.config->policy.detection_confidence_min;
  ParallelFor(ctx.pool, story.frames.size(), [&](std::size_t i) {
    auto& f = story.frames[i];
    const auto image = f.ImageForBackend();
    f.detections.clear();
    const auto labels = DetectionLabels(f.caption_refined);
    if (labels.empty()) return;
    auto result = Tagged(story, f.frame.frame_id, "detect", detect_backend,
                         [&] { return ctx.client->Detect(image, labels); });
    f.image_size = result.image_size;
    for (auto& d : result.detections) {
      if (d.confidence >= min_conf) f.detections.push_back(std::move(d));
    }
    f.appearances.clear();
    f.faces.clear();
    for (const auto& d : f.detections) {
      f.appearances.push_back(Tagged(story, f.frame.frame_id, "align", embed_backend,
                                     [&] { return ctx.client->EmbedImage(image, d.bbox); }));
      std::optional<EmbeddingVector> face;
      if (faces && lexicon::IsPersonLabel(d.label)) {
        face = Tagged(story, f.frame.frame_id, "align", face_backend,
                      [&] { return ctx.client->FaceEmbedding(image, d.bbox); });
      }
      f.faces.push_back(std::move(face));
    }
  });
}

double FusedSimilarity(const EmbeddingVector& appearance_a, const std::optional<EmbeddingVector>& face_a,
                       const EmbeddingVector& appearance_b, const std::optional<EmbeddingVector>& face_b) {
  if (face_a && face_b) return Cosine(*face_a, *face_b);
  return Cosine(appearance_a, appearance_b);
}

namespace {

// Running sums behind each identity's mean embeddings.
struct IdentityAccumulator {
  std::vector<double> appearance_sum;
  std::vector<double> face_sum;
  int face_count = 0;
};

void Accumulate(std::vector<double>& sum, const EmbeddingVector& v) {
  const auto n = v.Normalize();
  if (sum.empty()) sum.assign(n.dim(), 0.0);
  for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += n.values()[k];
}

// Mean direction; falls back to `fallback` when the sum cancels out.
EmbeddingVector MeanOf(const std::vector<double>& sum, const EmbeddingVector& fallback) {
  double norm = 0.0;
  for (double x : sum) norm += x * x;
  if (norm <= 1e-24) return fallback;
  return EmbeddingVector(sum, fallback.space()).Normalize();
}

}  // namespace

void AlignInstanceIdentities(Story& story, double match_floor) {
  story.identities.clear();
  std::vector<IdentityAccumulator> acc;
  std::map<std::string, int> next_index;

  auto spawn = [&](const std::string& label, const EmbeddingVector& app,
                   const std::optional<EmbeddingVector>& face, int frame_index) {
    InstanceIdentity id{next_index[label]++, label, app.Normalize(), std::nullopt, frame_index};
    IdentityAccumulator a;
    Accumulate(a.appearance_sum, app);
    if (face) {
      id.face = face->Normalize();
      Accumulate(a.face_sum, *face);
      a.face_count = 1;
    }
    story.identities.push_back(std::move(id));
    acc.push_back(std::move(a));
    return story.identities.size() - 1;
  };
  auto update = [&](std::size_t slot, const EmbeddingVector& app, const std::optional<EmbeddingVector>& face) {
    auto& id = story.identities[slot];
    auto& a = acc[slot];
    Accumulate(a.appearance_sum, app);
    id.appearance = MeanOf(a.appearance_sum, app);
    if (face) {
      Accumulate(a.face_sum, *face);
      ++a.face_count;
      id.face = MeanOf(a.face_sum, *face);
    }
  };

  for (auto& f : story.frames) {
    if (f.appearances.size() != f.detections.size()) {
      throw PreconditionError("align: frame " + f.frame.frame_id + " lacks detection embeddings");
    }
    f.identities.assign(f.detections.size(), -1);
    std::map<std::string, std::vector<std::size_t>> by_label;
    for (std::size_t d = 0; d < f.detections.size(); ++d) by_label[f.detections[d].label].push_back(d);

    for (const auto& [label, dets] : by_label) {
      std::vector<std::size_t> slots;
      for (std::size_t s = 0; s < story.identities.size(); ++s) {
        if (story.identities[s].label == label) slots.push_back(s);
      }
      // Matches are decided against the table as it stood before this frame.
      std::vector<std::pair<std::size_t, std::size_t>> matched;
      std::vector<bool> assigned(dets.size(), false);
      if (!slots.empty()) {
        std::vector<std::vector<double>> sim(dets.size(), std::vector<double>(slots.size()));
        std::vector<std::vector<double>> cost(dets.size(), std::vector<double>(slots.size()));
        for (std::size_t r = 0; r < dets.size(); ++r) {
          for (std::size_t c = 0; c < slots.size(); ++c) {
            const auto& id = story.identities[slots[c]];
            sim[r][c] = FusedSimilarity(f.appearances[dets[r]], f.faces[dets[r]], id.appearance, id.face);
            cost[r][c] = 1.0 - sim[r][c];
          }
        }
        for (const auto& [r, c] : SolveAssignment(CostMatrix::FromRows(cost))) {
          if (sim[r][c] < match_floor) continue;
          matched.emplace_back(r, slots[c]);
          assigned[r] = true;
        }
      }
      for (const auto& [r, slot] : matched) {
        f.identities[dets[r]] = story.identities[slot].identity_index;
        update(slot, f.appearances[dets[r]], f.faces[dets[r]]);
      }
      for (std::size_t r = 0; r < dets.size(); ++r) {
        if (assigned[r]) continue;
        const auto slot = spawn(label, f.appearances[dets[r]], f.faces[dets[r]], f.frame.index);
        f.identities[dets[r]] = story.identities[slot].identity_index;
      }
    }
  }
}

void SegmentInstances(Story& story, const StageContext& ctx) {
  const auto backend = BackendFor(ctx, Capability::kSegment);
  ParallelFor(ctx.pool, story.frames.size(), [&](std::size_t i) {
    auto& f = story.frames[i];
    f.instances.clear();
    const auto image = f.ImageForBackend();
    for (std::size_t d = 0; d < f.detections.size() && !f.flag; ++d) {
      const auto& det = f.detections[d];
      try {
        auto mask = ctx.client->Segment(image, det.bbox);
        if (mask.rle.height != f.image_size.height || mask.rle.width != f.image_size.width) {
          throw InvalidOutputError("segment: mask grid does not match the detected image size");
        }
        const int identity = d < f.identities.size() ? f.identities[d] : 0;
        f.instances.push_back(Instance{det, std::move(mask), identity});
      } catch (const InvalidOutputError& e) {
        f.flag = std::string("segment: ") + e.what();
        f.instances.clear();
      } catch (const std::exception& e) {
        throw StageError(story.story_id, f.frame.frame_id, "segment", backend, e.what());
      }
    }
    std::set<IdentityRef> present;
    for (const auto& inst : f.instances) present.insert({inst.detection.label, inst.identity_index});
    f.missing_in_image.clear();
    std::set<IdentityRef> seen;
    for (const auto& m : FindIndexedMentions(f.caption_refined.text)) {
      IdentityRef ref{m.label, *m.identity_index};
      if (!present.contains(ref) && seen.insert(ref).second) f.missing_in_image.push_back(ref);
    }
  });
}

FilterCounts& FilterCounts::operator+=(const FilterCounts& o) {
  kept += o.kept;
  flagged += o.flagged;
  aesthetic += o.aesthetic;
  too_few_instances += o.too_few_instances;
  too_many_instances += o.too_many_instances;
  return *this;
}

nlohmann::json FilterCounts::ToJson() const {
  return {{"kept", kept},
          {"flagged", flagged},
          {"aesthetic", aesthetic},
          {"too_few_instances", too_few_instances},
          {"too_many_instances", too_many_instances}};
}

std::optional<std::string> RejectReason(const FrameState& frame, const FilterPolicy& policy, FilterMode mode) {
  if (frame.flag) return "flagged";
  const auto score = frame.frame.aesthetic_score;
  if (!score || !(*score > policy.AestheticThreshold(mode))) return "aesthetic";
  const auto n = static_cast<int>(frame.instances.size());
  if (n < policy.min_instances) return "too_few_instances";
  if (n > policy.max_instances) return "too_many_instances";
  return std::nullopt;
}

FilterCounts FilterStory(Story& story, const FilterPolicy& policy, FilterMode mode) {
  FilterCounts counts;
  std::vector<FrameState> kept;
  for (auto& f : story.frames) {
    const auto reason = RejectReason(f, policy, mode);
    if (!reason) {
      ++counts.kept;
      kept.push_back(std::move(f));
    } else if (*reason == "flagged") {
      ++counts.flagged;
    } else if (*reason == "aesthetic") {
      ++counts.aesthetic;
    } else if (*reason == "too_few_instances") {
      ++counts.too_few_instances;
    } else {
      ++counts.too_many_instances;
    }
  }
  story.frames = std::move(kept);
  return counts;
}

std::string StripIdentityIndices(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::size_t last = 0;
  for (const auto& t : Tokenize(text)) {
    auto token = text.substr(t.start, t.end - t.start);
    if (!ParseIndexedToken(token)) continue;
    const std::size_t tail = token.ends_with("'s") ? 2 : 0;
    token.remove_suffix(tail);
    std::size_t digits = token.size();
    while (digits > 0 && std::isdigit(static_cast<unsigned char>(token[digits - 1]))) --digits;
    out.append(text.substr(last, t.start + digits - last));
    last = t.end - tail;
  }
  out.append(text.substr(last));
  return out;
}

}  // namespace storyline::pipeline
