#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace dca {

std::string read_file(const std::filesystem::path& path);

// Writes to a sibling temporary file and renames it over `path`, so readers
// never observe a truncated file.
void write_file_atomic(const std::filesystem::path& path,
                       std::string_view content);

// Calls `fn(line_no, object)` for every non-blank line. Lines that are not a
// JSON object raise SchemaError with the 1-based line number.
void for_each_jsonl(
    const std::filesystem::path& path,
    const std::function<void(std::size_t, const nlohmann::json&)>& fn);

std::string to_jsonl(const std::vector<nlohmann::json>& objects);

}  // namespace dca
