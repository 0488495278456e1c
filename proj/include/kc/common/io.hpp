#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace kc {

using Json = nlohmann::json;

// Lowercase hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);

// Writes via a sibling temporary file and rename, so readers never observe a
// partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

// Calls fn(line_number, parsed) for each non-blank line of a JSONL file.
// Lines are numbered from 1. Malformed JSON raises DataError naming the line.
void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(std::size_t, const Json&)>& fn);

std::string to_jsonl(const std::vector<Json>& records);

// Compact, key-sorted dump used for every persisted artifact so that equal
// content always produces equal bytes.
std::string canonical_dump(const Json& j);

}  // namespace kc
