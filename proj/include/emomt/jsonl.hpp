#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

namespace emomt {

using json = nlohmann::json;

// Calls `fn(record, line_number)` for every non-blank line of a JSON Lines file.
// Line numbers are 1-based physical lines. Parse failures raise RecordError.
void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(const json&, std::size_t)>& fn);

void write_jsonl(const std::filesystem::path& path, const std::vector<json>& records);

json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const json& value);

}  // namespace emomt
