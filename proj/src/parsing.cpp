#include "t2iopt/parsing.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace t2iopt {

namespace {

constexpr std::string_view kOpenPrompt = "<PROMPT>";
constexpr std::string_view kClosePrompt = "</PROMPT>";
constexpr std::string_view kOpenAnswer = "<answer>";
constexpr std::string_view kCloseAnswer = "</answer>";

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

}  // namespace

std::vector<ExtractedPrompt> extract_prompts(std::string_view raw) {
  std::vector<ExtractedPrompt> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t open = raw.find(kOpenPrompt, pos);
    if (open == std::string_view::npos) break;
    const std::size_t start = open + kOpenPrompt.size();
    const std::size_t close = raw.find(kClosePrompt, start);
    if (close == std::string_view::npos) break;
    pos = close + kClosePrompt.size();
    const std::string_view inner = raw.substr(start, close - start);
    if (inner.find(kOpenPrompt) != std::string_view::npos) continue;
    std::string text = trim(inner);
    if (text.empty()) continue;
    const bool no_change = text == kNoChange;
    out.push_back({std::move(text), no_change});
  }
  return out;
}

std::optional<std::string> extract_answer_block(std::string_view raw) {
  const std::size_t close = raw.rfind(kCloseAnswer);
  if (close == std::string_view::npos) return std::nullopt;
  const std::size_t open = raw.rfind(kOpenAnswer, close);
  if (open == std::string_view::npos) return std::nullopt;
  const std::size_t start = open + kOpenAnswer.size();
  return trim(raw.substr(start, close - start));
}

Choice parse_judge_answer(std::string_view raw) {
  auto block = extract_answer_block(raw);
  if (!block) return Choice::Invalid;
  std::string x = *block;
  // Models sometimes quote or bold the letter.
  x.erase(std::remove_if(x.begin(), x.end(), [](char c) { return c == '"' || c == '\'' || c == '*'; }), x.end());
  x = trim(x);
  if (x == "A") return Choice::First;
  if (x == "B") return Choice::Second;
  return Choice::Invalid;
}

VerifierReply parse_verifier_reply(std::string_view raw) {
  auto block = extract_answer_block(raw);
  if (!block || block->empty()) return {};
  if (*block == kNoChange) return {VerifierReply::Kind::NoChange, {}};
  return {VerifierReply::Kind::Revision, *block};
}

std::vector<std::string> parse_dvq_list(std::string_view raw) {
  std::vector<std::string> out;
  std::istringstream in{std::string(raw)};
  std::string line;
  while (std::getline(in, line)) {
    std::string t = trim(line);
    std::size_t body = std::string::npos;
    if (!t.empty() && (t[0] == '-' || t[0] == '*')) {
      body = 1;
    } else {
      std::size_t digits = 0;
      while (digits < t.size() && std::isdigit(static_cast<unsigned char>(t[digits]))) ++digits;
      if (digits > 0 && digits < t.size() && (t[digits] == '.' || t[digits] == ')')) body = digits + 1;
    }
    if (body == std::string::npos) continue;
    const std::size_t q = t.rfind('?');
    if (q == std::string::npos || q < body) continue;
    std::string question = trim(std::string_view(t).substr(body, q + 1 - body));
    if (question.size() > 1) out.push_back(std::move(question));
  }
  return out;
}

std::optional<bool> parse_yes_no(std::string_view raw) {
  std::string t = lower(trim(raw));
  while (!t.empty() && std::ispunct(static_cast<unsigned char>(t.back()))) t.pop_back();
  while (!t.empty() && std::ispunct(static_cast<unsigned char>(t.front()))) t.erase(t.begin());
  t = trim(t);
  if (t == "yes") return true;
  if (t == "no") return false;
  return std::nullopt;
}

}  // namespace t2iopt
