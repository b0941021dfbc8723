#include "storyline/bench/eval_set.hpp"

#include <algorithm>
#include <set>

#include "storyline/backend/wire.hpp"
#include "storyline/common/digest.hpp"
#include "storyline/common/errors.hpp"

namespace storyline::bench {

using nlohmann::json;

namespace {

ImageRef LoadImageRef(const std::string& path, const std::filesystem::path& base_dir) {
  std::filesystem::path p = path;
  if (p.is_relative()) p = base_dir / p;
  try {
    return ImageRef{Sha256Digest(ReadFileBytes(p)), p.string()};
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace

std::vector<std::string> EvalItem::Labels() const {
  std::vector<std::string> labels;
  for (const auto& r : references) {
    if (std::find(labels.begin(), labels.end(), r.label) == labels.end()) labels.push_back(r.label);
  }
  return labels;
}

void EvalItem::Validate() const {
  if (story_id.empty()) throw ConfigError("eval item: empty story_id");
  if (scenes.size() < kMinScenes || scenes.size() > kMaxScenes) {
    throw ConfigError("eval item " + story_id + ": needs 2-5 scenes, got " + std::to_string(scenes.size()));
  }
  if (references.empty()) throw ConfigError("eval item " + story_id + ": no reference instances");
  if (mode == EvalMode::kSingle && references.size() != 1) {
    throw ConfigError("eval item " + story_id + ": single mode takes exactly one reference instance");
  }
}

EvalItem EvalItemFromJson(const json& j, const std::filesystem::path& base_dir) {
  EvalItem item;
  try {
    item.story_id = j.at("story_id").get<std::string>();
    for (const auto& s : j.at("scenes")) {
      item.scenes.push_back({LoadImageRef(s.at("image").get<std::string>(), base_dir),
                             s.at("caption").get<std::string>()});
    }
    for (const auto& r : j.at("references")) {
      item.references.push_back({r.at("label").get<std::string>(),
                                 LoadImageRef(r.at("image").get<std::string>(), base_dir),
                                 wire::BoxFromJson(r.at("bbox"))});
    }
    if (j.contains("mode")) {
      const auto m = j.at("mode").get<std::string>();
      auto parsed = ParseEvalMode(m);
      if (!parsed) throw ConfigError("eval item " + item.story_id + ": unknown mode '" + m + "'");
      item.mode = *parsed;
    } else {
      item.mode = item.references.size() == 1 ? EvalMode::kSingle : EvalMode::kMulti;
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("eval item: ") + e.what());
  } catch (const ParseError& e) {
    throw ConfigError(std::string("eval item: ") + e.what());
  }
  item.Validate();
  return item;
}

std::vector<EvalItem> LoadEvalSet(const std::filesystem::path& dir) {
  const auto items_dir = dir / "items";
  if (!std::filesystem::is_directory(items_dir)) throw ConfigError(items_dir.string() + ": not a directory");
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(items_dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ConfigError(items_dir.string() + ": no item descriptors");
  std::vector<EvalItem> items;
  std::set<std::string> ids;
  for (const auto& f : files) {
    json j;
    try {
      j = json::parse(ReadFileBytes(f));
    } catch (const std::exception& e) {
      throw ConfigError(f.string() + ": " + e.what());
    }
    auto item = EvalItemFromJson(j, dir);
    if (!ids.insert(item.story_id).second) throw ConfigError("duplicate eval story_id " + item.story_id);
    items.push_back(std::move(item));
  }
  return items;
}

}  // namespace storyline::bench
