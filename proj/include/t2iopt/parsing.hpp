#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "t2iopt/domain.hpp"

namespace t2iopt {

inline constexpr std::string_view kNoChange = "NO_CHANGE";

/// One <PROMPT>...</PROMPT> block. `no_change` marks the NO_CHANGE sentinel.
struct ExtractedPrompt {
  std::string text;
  bool no_change = false;

  bool operator==(const ExtractedPrompt&) const = default;
};

/// Non-greedy extraction of every <PROMPT>(.*?)</PROMPT> block, trimmed.
/// Unclosed, nested and blank blocks are dropped.
std::vector<ExtractedPrompt> extract_prompts(std::string_view raw);

/// Content of the last <answer>...</answer> block, trimmed.
std::optional<std::string> extract_answer_block(std::string_view raw);

/// Judge reply: trailing "<answer> X </answer>" with X in {A, B}.
Choice parse_judge_answer(std::string_view raw);

struct VerifierReply {
  enum class Kind { NoChange, Revision, Unparseable };
  Kind kind = Kind::Unparseable;
  std::string revision;
};

VerifierReply parse_verifier_reply(std::string_view raw);

/// Numbered ("1." / "1)") or dashed lines containing '?', cut after the last '?'.
std::vector<std::string> parse_dvq_list(std::string_view raw);

/// "yes"/"no" with case, whitespace and trailing punctuation ignored.
std::optional<bool> parse_yes_no(std::string_view raw);

}  // namespace t2iopt
