#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace storyline {

// "sha256:<64 hex chars>" over the given bytes.
std::string Sha256Digest(std::string_view bytes);
std::string Sha256Digest(std::span<const std::uint8_t> bytes);

std::string Base64Encode(std::string_view bytes);
// Throws ParseError on malformed input.
std::string Base64Decode(std::string_view text);

// Reads a whole file. Throws IoError naming the path.
std::string ReadFileBytes(const std::filesystem::path& path);

// Writes to a sibling temp file and renames it over `path`.
void WriteFileAtomic(const std::filesystem::path& path, std::string_view bytes);

}  // namespace storyline
