#include <cmath>
#include <map>
#include <set>

#include <gtest/gtest.h>

#include "storyline/backend/mock_backend.hpp"
#include "storyline/backend/wire.hpp"
#include "storyline/common/digest.hpp"
#include "storyline/model/mentions.hpp"
#include "storyline/pipeline/export.hpp"
#include "storyline/pipeline/stages.hpp"
#include "synthetic.hpp"

namespace storyline::pipeline {
namespace {

using nlohmann::json;

// Digests are opaque to the mock, so in-memory frames use short names.
Story MakeStory(int n, const std::string& id = "s") {
  Story story;
  story.story_id = id;
  for (int i = 0; i < n; ++i) {
    FrameState f;
    f.frame.story_id = id;
    f.frame.index = i;
    f.frame.frame_id = id + "#" + std::to_string(i);
    f.frame.image = ImageRef{"d" + std::to_string(i), "images/" + std::to_string(i) + ".png"};
    story.frames.push_back(std::move(f));
  }
  return story;
}

EmbeddingVector Vec(std::vector<double> v) { return EmbeddingVector(std::move(v), "t"); }

struct Harness {
  explicit Harness(json fixture) {
    fixture["backend_id"] = "unit-mock";
    client.Register(std::make_shared<MockBackend>(std::move(fixture)));
    config.prompt_template = std::string(DefaultPromptTemplate());
  }
  StageContext ctx() { return StageContext{&client, nullptr, &config}; }

  PerceptionClient client;
  PipelineConfig config;
};

std::vector<int> Indices(const Story& s) {
  std::vector<int> out;
  for (const auto& f : s.frames) out.push_back(f.frame.index);
  return out;
}

TEST(Ingest, IndexesFramesInManifestOrder) {
  const auto dir = testing::TempDir("ingest");
  StoryManifest m{"s", {"a.ppm", "b.ppm", "c.ppm"}, {}, json::object()};
  for (const auto& p : m.frame_paths) {
    WriteFileAtomic(dir / p, "bytes of " + p);
    m.resolved_paths.push_back(dir / p);
  }
  const auto story = IngestStory(m);
  EXPECT_EQ(Indices(story), (std::vector<int>{0, 1, 2}));
  EXPECT_EQ(story.frames[1].frame.frame_id, "s#1");
  EXPECT_EQ(story.frames[1].frame.image.path, "b.ppm");
  EXPECT_EQ(story.frames[1].frame.image.digest, Sha256Digest("bytes of b.ppm"));
  EXPECT_EQ(story.frames[1].ImageForBackend().path, (dir / "b.ppm").string());
}

TEST(Ingest, RejectsBadManifests) {
  EXPECT_THROW(IngestStory({"s", {}, {}, json::object()}), PreconditionError);
  EXPECT_THROW(IngestStory({"s", {"a", "a"}, {}, json::object()}), PreconditionError);
  try {
    IngestStory({"s", {"no/such/frame.png"}, {}, json::object()});
    FAIL();
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "ingest");
    EXPECT_NE(std::string(e.what()).find("no/such/frame.png"), std::string::npos);
  }
}

TEST(Dedup, IdenticalFrameDropped) {
  auto s = MakeStory(2);
  s.frames[0].embedding = Vec({1, 0});
  s.frames[1].embedding = Vec({1, 0});
  Deduplicate(s, 0.95);
  EXPECT_EQ(Indices(s), (std::vector<int>{0}));
}

TEST(Dedup, OrthogonalFramesAllKept) {
  auto s = MakeStory(3);
  s.frames[0].embedding = Vec({1, 0, 0});
  s.frames[1].embedding = Vec({0, 1, 0});
  s.frames[2].embedding = Vec({0, 0, 1});
  Deduplicate(s, 0.95);
  EXPECT_EQ(Indices(s), (std::vector<int>{0, 1, 2}));
}

TEST(Dedup, LastKeptFrameIsTheAnchor) {
  auto s = MakeStory(3);
  s.frames[0].embedding = Vec({1, 0, 0});
  s.frames[1].embedding = Vec({0.97, std::sqrt(1 - 0.97 * 0.97), 0});
  s.frames[2].embedding = Vec({0.5, 0, std::sqrt(0.75)});
  Deduplicate(s, 0.95);
  EXPECT_EQ(Indices(s), (std::vector<int>{0, 2}));
}

TEST(Dedup, ChainComparesAgainstKeptFrameNotPrevious) {
  // Each frame is 0.96 from its predecessor but drifts away from frame 0.
  auto s = MakeStory(4);
  for (int i = 0; i < 4; ++i) {
    const double a = i * std::acos(0.96);
    s.frames[i].embedding = Vec({std::cos(a), std::sin(a)});
  }
  Deduplicate(s, 0.95);
  // cos(2a) = 0.8432 < 0.95 keeps frame 2; frame 3 is 0.96 from frame 2.
  EXPECT_EQ(Indices(s), (std::vector<int>{0, 2}));
}

TEST(Dedup, Preconditions) {
  auto s = MakeStory(1);
  EXPECT_THROW(Deduplicate(s, 0.95), PreconditionError);
  s.frames[0].embedding = Vec({1, 0});
  EXPECT_THROW(Deduplicate(s, 0.0), PreconditionError);
  EXPECT_THROW(Deduplicate(s, 1.5), PreconditionError);
}

TEST(Dedup, EmbedFramesUsesImageEmbeddings) {
  Harness h(json{{"embed_image", {{"d0", {3, 4}}, {"d1", {0, 2}}}}});
  auto s = MakeStory(2);
  EmbedFrames(s, h.ctx());
  EXPECT_NEAR(s.frames[0].embedding->values()[0], 0.6, 1e-12);
  EXPECT_NEAR(s.frames[1].embedding->values()[1], 1.0, 1e-12);
}

TEST(Caption, AttachesRawCaptionsWithMentions) {
  Harness h(json{{"caption_image", {{"d0", "a woman is driving a vehicle"}, {"d1", "a dog on a beach"}}}});
  auto s = MakeStory(2);
  CaptionFrames(s, h.ctx());
  EXPECT_EQ(s.frames[0].caption_raw.text, "a woman is driving a vehicle");
  EXPECT_EQ(s.frames[0].caption_raw.kind, CaptionKind::kRaw);
  EXPECT_EQ(s.frames[1].caption_raw.entity_mentions.size(), 2u);
  auto one = MakeStory(1);
  CaptionFrames(one, h.ctx());
  EXPECT_EQ(one.frames[0].caption_raw.text, "a woman is driving a vehicle");
}

TEST(Caption, FixtureMissFailsTheStoryNamingTheFrame) {
  Harness h(json{{"caption_image", {{"d0", "a woman"}}}});
  auto s = MakeStory(2);
  try {
    CaptionFrames(s, h.ctx());
    FAIL();
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "caption");
    EXPECT_EQ(e.frame_id(), "s#1");
    EXPECT_EQ(e.backend_id(), "unit-mock@1");
    EXPECT_NE(std::string(e.what()).find("s#1"), std::string::npos);
  }
}

std::vector<std::string> Labels(const std::vector<EntityMention>& ms) {
  std::vector<std::string> out;
  for (const auto& m : ms) out.push_back(m.label);
  return out;
}

TEST(Extract, Examples) {
  EXPECT_EQ(Labels(ExtractEntityLabels({"a woman is driving a vehicle", CaptionKind::kRaw, {}})),
            (std::vector<std::string>{"woman", "vehicle"}));
  EXPECT_TRUE(ExtractEntityLabels({"", CaptionKind::kRaw, {}}).empty());
  EXPECT_TRUE(ExtractEntityLabels({"the the the", CaptionKind::kRaw, {}}).empty());
  const auto m = ExtractEntityLabels({"A Dog chases a dog and a ball", CaptionKind::kRaw, {}});
  EXPECT_EQ(Labels(m), (std::vector<std::string>{"dog", "ball"}));
  EXPECT_EQ(m[0].surface, "Dog");
  EXPECT_EQ(m[0].start, 2u);
  EXPECT_EQ(m[0].end, 5u);
}

TEST(Refine, OneWomanAcrossTwoFramesSharesAnIndex) {
  json fx{{"caption_sequence", {{"d0,d1", "a woman drives off and then takes a photo"}}},
          {"refine_captions",
           {{"a woman drives\na lady takes a selfie",
             {"woman0 is driving a car", "woman0 is capturing a self-portrait in front of a structure"}}}}};
  Harness h(fx);
  auto s = MakeStory(2);
  s.frames[0].caption_raw = {"a woman drives", CaptionKind::kRaw, {}};
  s.frames[1].caption_raw = {"a lady takes a selfie", CaptionKind::kRaw, {}};
  RefineStoryCaptions(s, h.ctx());
  EXPECT_EQ(s.sequence_caption.kind, CaptionKind::kSequence);
  for (const auto& f : s.frames) {
    EXPECT_EQ(f.caption_refined.kind, CaptionKind::kRefined);
    ASSERT_FALSE(f.caption_refined.entity_mentions.empty());
    EXPECT_EQ(f.caption_refined.entity_mentions[0].label, "woman");
    EXPECT_EQ(f.caption_refined.entity_mentions[0].identity_index, 0);
    EXPECT_TRUE(f.warnings.empty());
  }
}

TEST(Refine, SingleFrameStoryNeedsNoSequenceCaption) {
  Harness h(json{{"refine_captions", {{"a woman waves", {"woman0 waves"}}}}});
  auto s = MakeStory(1);
  s.frames[0].caption_raw = {"a woman waves", CaptionKind::kRaw, {}};
  RefineStoryCaptions(s, h.ctx());
  EXPECT_EQ(s.sequence_caption.text, "a woman waves");
  EXPECT_EQ(s.frames[0].caption_refined.text, "woman0 waves");
}

TEST(Refine, EchoStubLeavesRawTextAndWarns) {
  Harness h(json{{"caption_sequence", {{"d0,d1", "a woman"}}}, {"refine_captions", "echo"}});
  auto s = MakeStory(2);
  s.frames[0].caption_raw = {"a woman drives", CaptionKind::kRaw, {}};
  s.frames[1].caption_raw = {"a woman stops", CaptionKind::kRaw, {}};
  RefineStoryCaptions(s, h.ctx());
  for (const auto& f : s.frames) {
    EXPECT_EQ(f.caption_refined.text, f.caption_raw.text);
    EXPECT_TRUE(f.caption_refined.entity_mentions.empty());
    ASSERT_FALSE(f.warnings.empty());
    EXPECT_EQ(f.warnings[0].rfind("refine: ", 0), 0u);
  }
}

TEST(Refine, Errors) {
  Harness h(json{{"caption_sequence", {{"d0,d1", "x"}}}, {"refine_captions", {{"a\nb", {"only one"}}}}});
  Story empty;
  empty.story_id = "e";
  EXPECT_THROW(RefineStoryCaptions(empty, h.ctx()), PreconditionError);
  auto s = MakeStory(2);
  s.frames[0].caption_raw = {"a", CaptionKind::kRaw, {}};
  s.frames[1].caption_raw = {"b", CaptionKind::kRaw, {}};
  try {
    RefineStoryCaptions(s, h.ctx());
    FAIL();
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "refine");
  }
}

json DetectFixture() {
  return json{{"detect",
               {{"d0",
                 {{"image_size", {8, 8}},
                  {"detections",
                   {{{"label", "woman"}, {"bbox", {0, 0, 4, 8}}, {"confidence", 0.9}},
                    {{"label", "cup"}, {"bbox", {5, 5, 7, 7}}, {"confidence", 0.8}}}}}}}},
              {"embed_image", {{"d0@0,0,4,8", {1, 0}}, {"d0@5,5,7,7", {0, 1}}}},
              {"face_embedding", {{"d0@0,0,4,8", {0.6, 0.8}}, {"d0@5,5,7,7", nullptr}}}};
}

TEST(Detect, ConfidenceThresholdIsInclusive) {
  Harness h(DetectFixture());
  auto s = MakeStory(1);
  s.frames[0].caption_refined = {"woman0 holds a cup0", CaptionKind::kRefined, {}};
  EXPECT_EQ(DetectionLabels(s.frames[0].caption_refined), (std::vector<std::string>{"woman", "cup"}));
  h.config.policy.detection_confidence_min = 0.5;
  DetectStory(s, h.ctx());
  EXPECT_EQ(s.frames[0].detections.size(), 2u);
  EXPECT_EQ(s.frames[0].image_size, (ImageSize{8, 8}));
  h.config.policy.detection_confidence_min = 0.85;
  DetectStory(s, h.ctx());
  ASSERT_EQ(s.frames[0].detections.size(), 1u);
  EXPECT_EQ(s.frames[0].detections[0].label, "woman");
  h.config.policy.detection_confidence_min = 0.8;
  DetectStory(s, h.ctx());
  EXPECT_EQ(s.frames[0].detections.size(), 2u);
}

TEST(Detect, FaceEmbeddingsOnlyForPeople) {
  Harness h(DetectFixture());
  auto s = MakeStory(1);
  s.frames[0].caption_refined = {"woman0 holds a cup0", CaptionKind::kRefined, {}};
  DetectStory(s, h.ctx());
  ASSERT_EQ(s.frames[0].faces.size(), 2u);
  EXPECT_TRUE(s.frames[0].faces[0].has_value());
  EXPECT_FALSE(s.frames[0].faces[1].has_value());
  EXPECT_NEAR(s.frames[0].appearances[1].values()[1], 1.0, 1e-12);
}

TEST(Detect, NoLabelsMeansNoDetections) {
  Harness h(json{{"detect", json::object()}});
  auto s = MakeStory(1);
  s.frames[0].caption_refined = {"the the the", CaptionKind::kRefined, {}};
  DetectStory(s, h.ctx());
  EXPECT_TRUE(s.frames[0].detections.empty());
}

void AddDetection(FrameState& f, const std::string& label, std::vector<double> app,
                  std::optional<std::vector<double>> face = std::nullopt) {
  f.detections.push_back(Detection{label, {0, 0, 1, 1}, 0.9});
  f.appearances.push_back(Vec(std::move(app)));
  f.faces.push_back(face ? std::optional<EmbeddingVector>(Vec(*face)) : std::nullopt);
}

TEST(Align, SingleIdentityChain) {
  auto s = MakeStory(2);
  AddDetection(s.frames[0], "woman", {1, 0});
  AddDetection(s.frames[1], "woman", {0.99, std::sqrt(1 - 0.99 * 0.99)});
  AlignInstanceIdentities(s, 0.55);
  EXPECT_EQ(s.frames[0].identities, (std::vector<int>{0}));
  EXPECT_EQ(s.frames[1].identities, (std::vector<int>{0}));
  ASSERT_EQ(s.identities.size(), 1u);
  EXPECT_EQ(s.identities[0].first_frame, 0);
}

TEST(Align, TwoWomenKeepTheirIndicesWhenOrderSwaps) {
  auto s = MakeStory(2);
  AddDetection(s.frames[0], "woman", {1, 0, 0});
  AddDetection(s.frames[0], "woman", {0, 1, 0});
  // Second frame lists them the other way round: 0.95 to the right one, 0.1 to the other.
  const double z = std::sqrt(1 - 0.95 * 0.95 - 0.1 * 0.1);
  AddDetection(s.frames[1], "woman", {0.1, 0.95, z});
  AddDetection(s.frames[1], "woman", {0.95, 0.1, z});
  AlignInstanceIdentities(s, 0.55);
  EXPECT_EQ(s.frames[0].identities, (std::vector<int>{0, 1}));
  EXPECT_EQ(s.frames[1].identities, (std::vector<int>{1, 0}));
}

TEST(Align, BelowFloorSpawnsNewIdentity) {
  auto s = MakeStory(2);
  AddDetection(s.frames[0], "woman", {1, 0});
  AddDetection(s.frames[1], "woman", {0.2, std::sqrt(1 - 0.04)});
  AlignInstanceIdentities(s, 0.55);
  EXPECT_EQ(s.frames[1].identities, (std::vector<int>{1}));
  EXPECT_EQ(s.identities.size(), 2u);
  EXPECT_EQ(s.identities[1].first_frame, 1);
}

TEST(Align, LabelsAreIndexedIndependently) {
  auto s = MakeStory(1);
  AddDetection(s.frames[0], "woman", {1, 0});
  AddDetection(s.frames[0], "dog", {1, 0});
  AddDetection(s.frames[0], "woman", {0, 1});
  AlignInstanceIdentities(s, 0.55);
  // Two detections of one label in one frame never share an identity.
  EXPECT_EQ(s.frames[0].identities, (std::vector<int>{0, 0, 1}));
}

TEST(Align, FaceSimilarityWinsWhenBothSidesHaveFaces) {
  EXPECT_DOUBLE_EQ(FusedSimilarity(Vec({1, 0}), Vec({0, 1}), Vec({1, 0}), Vec({1, 0})), 0.0);
  EXPECT_DOUBLE_EQ(FusedSimilarity(Vec({1, 0}), Vec({0, 1}), Vec({1, 0}), std::nullopt), 1.0);
  auto s = MakeStory(2);
  AddDetection(s.frames[0], "man", {1, 0}, std::vector<double>{1, 0});
  // Same clothes, different face.
  AddDetection(s.frames[1], "man", {1, 0}, std::vector<double>{0, 1});
  AlignInstanceIdentities(s, 0.55);
  EXPECT_EQ(s.frames[1].identities, (std::vector<int>{1}));
}

TEST(Align, RequiresDetectionEmbeddings) {
  auto s = MakeStory(1);
  s.frames[0].detections.push_back(Detection{"dog", {0, 0, 1, 1}, 0.9});
  EXPECT_THROW(AlignInstanceIdentities(s, 0.55), PreconditionError);
}

TEST(AlignProperty, IndicesAreContiguousAndUniquePerFrame) {
  testing::Rng rng(99);
  const std::vector<std::string> labels = {"woman", "man", "dog"};
  for (int trial = 0; trial < 200; ++trial) {
    auto s = MakeStory(rng.Int(1, 6));
    // A few latent characters per label, seen with noise.
    std::map<std::string, std::vector<std::vector<double>>> cast;
    for (const auto& l : labels) {
      for (int k = 0; k < 3; ++k) cast[l].push_back(rng.UnitVector(6));
    }
    for (auto& f : s.frames) {
      for (const auto& l : labels) {
        std::vector<int> who = {0, 1, 2};
        for (int k = rng.Int(0, 3); k > 0; --k) {
          const int pick = rng.Int(0, static_cast<int>(who.size()) - 1);
          AddDetection(f, l, rng.Near(cast[l][who[pick]], rng.Uniform(0.0, 0.8)));
          who.erase(who.begin() + pick);
        }
      }
    }
    AlignInstanceIdentities(s, rng.Uniform(0.3, 0.9));
    std::map<std::string, std::set<int>> used;
    for (const auto& f : s.frames) {
      std::set<std::pair<std::string, int>> in_frame;
      for (std::size_t d = 0; d < f.detections.size(); ++d) {
        EXPECT_TRUE(in_frame.insert({f.detections[d].label, f.identities[d]}).second);
        used[f.detections[d].label].insert(f.identities[d]);
      }
    }
    for (const auto& [label, ids] : used) {
      EXPECT_EQ(*ids.begin(), 0);
      EXPECT_EQ(*ids.rbegin(), static_cast<int>(ids.size()) - 1) << label;
    }
    std::size_t total = 0;
    for (const auto& [label, ids] : used) total += ids.size();
    EXPECT_EQ(total, s.identities.size());
  }
}

json SegmentFixture(bool empty_cup) {
  BinaryMask woman(8, 8), cup(8, 8);
  woman.Fill({0, 0, 4, 8});
  if (!empty_cup) cup.Fill({5, 5, 7, 7});
  return json{{"segment", {{"d0@0,0,4,8", wire::RleJson(EncodeRle(woman))}, {"d0@5,5,7,7", wire::RleJson(EncodeRle(cup))}}}};
}

FrameState DetectedFrame() {
  auto s = MakeStory(1);
  auto f = s.frames[0];
  f.image_size = {8, 8};
  f.caption_refined = {"woman0 holds cup0 next to woman1", CaptionKind::kRefined, {}};
  f.detections = {{"woman", {0, 0, 4, 8}, 0.9}, {"cup", {5, 5, 7, 7}, 0.8}};
  f.identities = {0, 0};
  return f;
}

TEST(Segment, OneInstancePerDetection) {
  Harness h(SegmentFixture(false));
  Story s = MakeStory(0);
  s.frames.push_back(DetectedFrame());
  SegmentInstances(s, h.ctx());
  const auto& f = s.frames[0];
  EXPECT_FALSE(f.flag.has_value());
  ASSERT_EQ(f.instances.size(), 2u);
  EXPECT_EQ(f.instances[0].mask.area, 32u);
  EXPECT_EQ(f.instances[1].detection.label, "cup");
  ASSERT_EQ(f.missing_in_image.size(), 1u);
  EXPECT_EQ(f.missing_in_image[0].Name(), "woman1");
}

TEST(Segment, EmptyMaskFlagsTheFrame) {
  Harness h(SegmentFixture(true));
  Story s = MakeStory(0);
  s.frames.push_back(DetectedFrame());
  SegmentInstances(s, h.ctx());
  EXPECT_TRUE(s.frames[0].flag.has_value());
  EXPECT_TRUE(s.frames[0].instances.empty());
  EXPECT_EQ(RejectReason(s.frames[0], FilterPolicy{}, FilterMode::kSequence), "flagged");
}

TEST(Segment, NoDetectionsGivesNoInstances) {
  Harness h(json{{"segment", json::object()}});
  auto s = MakeStory(1);
  SegmentInstances(s, h.ctx());
  EXPECT_TRUE(s.frames[0].instances.empty());
  EXPECT_FALSE(s.frames[0].flag.has_value());
}

TEST(Segment, BackendFailureIsAStageError) {
  Harness h(json{{"segment", json::object()}});
  Story s = MakeStory(0);
  s.frames.push_back(DetectedFrame());
  try {
    SegmentInstances(s, h.ctx());
    FAIL();
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "segment");
  }
}

FrameState Scored(double score, int instances) {
  FrameState f;
  f.frame.aesthetic_score = score;
  f.instances.resize(instances);
  return f;
}

TEST(Filter, AestheticThresholdsAreStrict) {
  const FilterPolicy p;
  EXPECT_EQ(RejectReason(Scored(5.0, 2), p, FilterMode::kUnique), "aesthetic");
  EXPECT_EQ(RejectReason(Scored(5.01, 2), p, FilterMode::kUnique), std::nullopt);
  EXPECT_EQ(RejectReason(Scored(4.6, 3), p, FilterMode::kSequence), std::nullopt);
  EXPECT_EQ(RejectReason(Scored(4.5, 3), p, FilterMode::kSequence), "aesthetic");
  FrameState unscored = Scored(0, 2);
  unscored.frame.aesthetic_score.reset();
  EXPECT_EQ(RejectReason(unscored, p, FilterMode::kSequence), "aesthetic");
}

TEST(Filter, InstanceBounds) {
  const FilterPolicy p;
  EXPECT_EQ(RejectReason(Scored(9.0, 9), p, FilterMode::kSequence), "too_many_instances");
  EXPECT_EQ(RejectReason(Scored(9.0, 8), p, FilterMode::kSequence), std::nullopt);
  EXPECT_EQ(RejectReason(Scored(9.0, 1), p, FilterMode::kSequence), std::nullopt);
  EXPECT_EQ(RejectReason(Scored(9.0, 0), p, FilterMode::kSequence), "too_few_instances");
}

TEST(Filter, CountsEveryReason) {
  Story s;
  s.frames = {Scored(9, 2), Scored(1, 2), Scored(9, 0), Scored(9, 12), Scored(9, 3)};
  s.frames[4].flag = "x";
  const auto c = FilterStory(s, FilterPolicy{}, FilterMode::kSequence);
  EXPECT_EQ(c.ToJson(), (json{{"kept", 1}, {"flagged", 1}, {"aesthetic", 1}, {"too_few_instances", 1},
                              {"too_many_instances", 1}}));
  EXPECT_EQ(s.frames.size(), 1u);
  FilterCounts sum;
  sum += c;
  sum += c;
  EXPECT_EQ(sum.kept, 2);
}

TEST(FilterProperty, IdempotentAndOrderPreserving) {
  testing::Rng rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    auto s = testing::RandomStory(rng, rng.Int(0, 25));
    const auto mode = rng.Chance(0.5) ? FilterMode::kUnique : FilterMode::kSequence;
    const auto before = s.frames.size();
    const auto c = FilterStory(s, FilterPolicy{}, mode);
    EXPECT_EQ(static_cast<std::size_t>(c.kept + c.flagged + c.aesthetic + c.too_few_instances +
                                       c.too_many_instances),
              before);
    const auto kept = Indices(s);
    EXPECT_TRUE(std::is_sorted(kept.begin(), kept.end()));
    for (const auto& f : s.frames) {
      EXPECT_GT(*f.frame.aesthetic_score, FilterPolicy{}.AestheticThreshold(mode));
      EXPECT_FALSE(f.flag.has_value());
    }
    const auto again = FilterStory(s, FilterPolicy{}, mode);
    EXPECT_EQ(again.kept, c.kept);
    EXPECT_EQ(Indices(s), kept);
  }
}

TEST(DedupProperty, IdempotentAndAdjacentKeptFramesAreDistinct) {
  testing::Rng rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    auto s = testing::RandomStory(rng, rng.Int(1, 30));
    const double threshold = rng.Uniform(0.5, 1.0);
    Deduplicate(s, threshold);
    const auto kept = Indices(s);
    ASSERT_FALSE(kept.empty());
    EXPECT_EQ(kept.front(), 0);
    EXPECT_TRUE(std::is_sorted(kept.begin(), kept.end()));
    for (std::size_t i = 1; i < s.frames.size(); ++i) {
      EXPECT_LT(Cosine(*s.frames[i - 1].embedding, *s.frames[i].embedding), threshold);
    }
    Deduplicate(s, threshold);
    EXPECT_EQ(Indices(s), kept);
  }
}

TEST(Strip, Examples) {
  EXPECT_EQ(StripIdentityIndices("woman0 is capturing a self-portrait"), "woman is capturing a self-portrait");
  EXPECT_EQ(StripIdentityIndices("her hand0 and hand1"), "her hand and hand");
  EXPECT_EQ(StripIdentityIndices("route 66 remains"), "route 66 remains");
  EXPECT_EQ(StripIdentityIndices("woman0's dog12 barks."), "woman's dog barks.");
  EXPECT_EQ(StripIdentityIndices(""), "");
}

// A frame that passes every record rule.
FrameState ExportableFrame(const std::string& story, int index) {
  FrameState f;
  f.frame.story_id = story;
  f.frame.index = index;
  f.frame.frame_id = story + "#" + std::to_string(index);
  f.frame.image = ImageRef{Sha256Digest(f.frame.frame_id), "images/" + std::to_string(index) + ".ppm"};
  f.frame.aesthetic_score = 6.0;
  f.caption_raw = {"a woman stands", CaptionKind::kRaw, ExtractEntityLabels({"a woman stands", CaptionKind::kRaw, {}})};
  f.caption_refined = {"woman0 stands", CaptionKind::kRefined, FindIndexedMentions("woman0 stands")};
  BinaryMask m(4, 4);
  m.Fill({0, 0, 2, 2});
  f.image_size = {4, 4};
  f.instances.push_back(Instance{{"woman", {0, 0, 2, 2}, 0.9}, InstanceMask::FromRle(EncodeRle(m)), 0});
  return f;
}

RecordProvenance Prov() {
  RecordProvenance p;
  p.pipeline_version = std::string(kPipelineVersion);
  p.backends["caption_image"] = "unit-mock@1";
  p.parameters["dedup_threshold"] = 0.95;
  return p;
}

TEST(Export, OneLinePerFrameAndDeterministic) {
  Story s;
  s.story_id = "s";
  for (int i = 0; i < 3; ++i) s.frames.push_back(ExportableFrame("s", i));
  s.frames[1].warnings.push_back("refine: note");
  const auto dir = testing::TempDir("export");
  for (const auto* name : {"a.jsonl", "b.jsonl"}) {
    JsonlFileSink sink(dir / name);
    EXPECT_EQ(ExportRecords(s, Prov(), sink), 3);
    sink.Close();
  }
  const auto a = ReadFileBytes(dir / "a.jsonl");
  EXPECT_EQ(a, ReadFileBytes(dir / "b.jsonl"));
  EXPECT_EQ(std::count(a.begin(), a.end(), '\n'), 3);
  EXPECT_FALSE(std::filesystem::exists(dir / "a.jsonl.tmp"));
  const auto second = ParseRecordLine(a.substr(a.find('\n') + 1, a.find('\n', a.find('\n') + 1) - a.find('\n') - 1));
  EXPECT_EQ(second.provenance.warnings, (std::vector<std::string>{"refine: note"}));
}

TEST(Export, EmptyStoryCreatesNoFile) {
  const auto dir = testing::TempDir("export-empty");
  Story s;
  s.story_id = "s";
  JsonlFileSink sink(dir / "out.jsonl");
  EXPECT_EQ(ExportRecords(s, Prov(), sink), 0);
  sink.Close();
  EXPECT_FALSE(std::filesystem::exists(dir / "out.jsonl"));
}

TEST(Export, InvalidRecordWritesNothing) {
  Story s;
  s.story_id = "s";
  s.frames.push_back(ExportableFrame("s", 0));
  s.frames.push_back(ExportableFrame("s", 1));
  s.frames[1].instances[0].detection.bbox = {2, 2, 2, 3};
  MemorySink sink;
  try {
    ExportRecords(s, Prov(), sink);
    FAIL();
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "export");
    EXPECT_EQ(e.frame_id(), "s#1");
  }
  EXPECT_TRUE(sink.lines().empty());
}

TEST(Export, AbandonedSinkLeavesNoOutput) {
  const auto dir = testing::TempDir("export-partial");
  {
    JsonlFileSink sink(dir / "out.jsonl");
    Story s;
    s.story_id = "s";
    s.frames.push_back(ExportableFrame("s", 0));
    ExportRecords(s, Prov(), sink);
  }
  EXPECT_FALSE(std::filesystem::exists(dir / "out.jsonl"));
  EXPECT_FALSE(std::filesystem::exists(dir / "out.jsonl.tmp"));
}

}  // namespace
}  // namespace storyline::pipeline
