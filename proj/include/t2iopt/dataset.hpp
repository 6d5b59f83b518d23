#pragma once

#include <filesystem>
#include <string_view>
#include <vector>

#include "t2iopt/domain.hpp"

namespace t2iopt {

/// JSONL ({"id", "prompt", "split"} per line) or plain text (one prompt per
/// line, ids derived from the text). Blank lines are skipped. Throws
/// DomainError with the line number on malformed input.
std::vector<UserPrompt> parse_dataset(std::string_view contents);
std::vector<UserPrompt> load_dataset(const std::filesystem::path& path);

void write_dataset_jsonl(const std::filesystem::path& path, const std::vector<UserPrompt>& prompts);

}  // namespace t2iopt
