#include <fstream>
#include <regex>
#include <sstream>

#include <gtest/gtest.h>

#include "storyline/cli/commands.hpp"
#include "storyline/common/digest.hpp"
#include "storyline/model/record.hpp"
#include "synthetic.hpp"

namespace storyline {
namespace {

using nlohmann::json;

const std::filesystem::path kSchemaDir = std::filesystem::path(STORYLINE_REPO_ROOT) / "schema";

bool HasType(const json& v, const std::string& t) {
  if (t == "object") return v.is_object();
  if (t == "array") return v.is_array();
  if (t == "string") return v.is_string();
  if (t == "integer") return v.is_number_integer();
  if (t == "number") return v.is_number();
  if (t == "null") return v.is_null();
  return false;
}

// Checks the keywords the record descriptor uses; appends failures to `errors`.
void Conform(const json& v, const json& s, const std::string& at, std::vector<std::string>& errors) {
  auto fail = [&](const std::string& why) { errors.push_back(at + ": " + why); };
  if (s.contains("type")) {
    const auto types = s["type"].is_array() ? s["type"] : json::array({s["type"]});
    if (std::none_of(types.begin(), types.end(), [&](const json& t) { return HasType(v, t.get<std::string>()); })) {
      return fail("type");
    }
  }
  if (s.contains("const") && v != s["const"]) fail("const");
  if (v.is_number()) {
    if (s.contains("minimum") && v.get<double>() < s["minimum"].get<double>()) fail("minimum");
    if (s.contains("maximum") && v.get<double>() > s["maximum"].get<double>()) fail("maximum");
  }
  if (v.is_string()) {
    const auto str = v.get<std::string>();
    if (s.contains("minLength") && str.size() < s["minLength"].get<std::size_t>()) fail("minLength");
    if (s.contains("pattern") && !std::regex_search(str, std::regex(s["pattern"].get<std::string>()))) {
      fail("pattern");
    }
  }
  if (v.is_array()) {
    if (s.contains("minItems") && v.size() < s["minItems"].get<std::size_t>()) fail("minItems");
    if (s.contains("maxItems") && v.size() > s["maxItems"].get<std::size_t>()) fail("maxItems");
    if (s.contains("items")) {
      for (std::size_t i = 0; i < v.size(); ++i) Conform(v[i], s["items"], at + "[" + std::to_string(i) + "]", errors);
    }
  }
  if (v.is_object()) {
    for (const auto& k : s.value("required", json::array())) {
      if (!v.contains(k.get<std::string>())) fail("missing " + k.get<std::string>());
    }
    const auto props = s.value("properties", json::object());
    for (const auto& [k, child] : v.items()) {
      if (props.contains(k)) {
        Conform(child, props[k], at + "." + k, errors);
      } else if (s.contains("additionalProperties")) {
        const auto& extra = s["additionalProperties"];
        if (extra.is_boolean()) {
          if (!extra.get<bool>()) fail("unexpected key " + k);
        } else {
          Conform(child, extra, at + "." + k, errors);
        }
      }
    }
  }
}

std::vector<std::string> SchemaErrors(const std::string& line) {
  static const json schema = json::parse(ReadFileBytes(kSchemaDir / "dataset_record.schema.json"));
  std::vector<std::string> errors;
  Conform(json::parse(line), schema, "$", errors);
  return errors;
}

std::vector<std::string> Lines(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

TEST(Schema, GoldenRecordsAreValidCanonicalAndConform) {
  const auto lines = Lines(kSchemaDir / "examples" / "valid.jsonl");
  ASSERT_EQ(lines.size(), 4u);
  for (const auto& line : lines) {
    const auto r = ParseRecordLine(line);
    EXPECT_TRUE(ValidateRecord(r).empty()) << line;
    EXPECT_EQ(SerializeRecord(r), line);
    EXPECT_EQ(SchemaErrors(line), std::vector<std::string>{});
  }
}

TEST(Schema, GoldenViolationsAreReported) {
  const auto cases = json::parse(ReadFileBytes(kSchemaDir / "examples" / "invalid.json"));
  ASSERT_GE(cases.size(), 10u);
  for (const auto& c : cases) {
    const auto rule = c["rule"].get<std::string>();
    const auto violations = ValidateRecord(RecordFromJson(c["record"]));
    ASSERT_EQ(violations.size(), 1u) << rule << " " << c["record"].dump();
    EXPECT_EQ(violations[0].rule, rule);
  }
}

TEST(Schema, DescriptorRejectsStructuralDamage) {
  const auto line = Lines(kSchemaDir / "examples" / "valid.jsonl").front();
  auto j = json::parse(line);
  j["extra"] = 1;
  EXPECT_FALSE(SchemaErrors(j.dump()).empty());
  j = json::parse(line);
  j["image_digest"] = "md5:abc";
  EXPECT_FALSE(SchemaErrors(j.dump()).empty());
  j = json::parse(line);
  j["entities"][0].erase("mask_rle");
  EXPECT_FALSE(SchemaErrors(j.dump()).empty());
}

TEST(Schema, PipelineOutputConforms) {
  const auto dir = testing::TempDir("schema-pipeline");
  const auto corpus = testing::WriteSyntheticCorpus(dir, {});
  std::ostringstream log;
  ASSERT_EQ(cli::CmdAnnotate(corpus.config, corpus.manifest, dir / "out.jsonl", log), 0) << log.str();
  for (const auto& line : Lines(dir / "out.jsonl")) EXPECT_EQ(SchemaErrors(line), std::vector<std::string>{});
}

}  // namespace
}  // namespace storyline
