#include "t2iopt/propose.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "t2iopt/hash.hpp"
#include "t2iopt/parallel.hpp"
#include "t2iopt/parsing.hpp"
#include "t2iopt/score.hpp"
#include "t2iopt/templates.hpp"

namespace t2iopt {

namespace {

bool starts_with_suggestion(const std::string& line) {
  constexpr std::string_view kWord = "suggestion";
  if (line.size() < kWord.size()) return false;
  for (std::size_t i = 0; i < kWord.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(line[i])) != kWord[i]) return false;
  }
  return true;
}

/// Splits a critic reply at its first "Suggestion" line.
void split_feedback(const std::string& reply, FailureDossier& d) {
  std::istringstream in(reply);
  std::string line;
  std::string before;
  std::string after;
  bool found = false;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (!found && starts_with_suggestion(t)) {
      found = true;
      std::string rest = t.substr(std::string_view("suggestion").size());
      while (!rest.empty() && (rest.front() == 's' || rest.front() == 'S')) rest.erase(rest.begin());
      if (!rest.empty() && rest.front() == ':') rest.erase(rest.begin());
      after = trim(rest);
      continue;
    }
    std::string& target = found ? after : before;
    if (!target.empty()) target += '\n';
    target += line;
  }
  d.rationalization = trim(before);
  d.suggestion = found ? trim(after) : trim(reply);
}

/// Extracts one proposal from a generator reply, retrying once when no block
/// parses. Returns nullopt on NO_CHANGE, a second parse failure, or a
/// transport failure.
template <class MakeRequest>
std::optional<std::string> one_proposal(Gateway& gateway, Role role, MakeRequest&& make_request, const char* what,
                                        Warnings& warnings) {
  for (int attempt = 0; attempt < 2; ++attempt) {
    std::vector<ExtractedPrompt> blocks;
    try {
      blocks = extract_prompts(gateway.generate_text(role, make_request(attempt)));
    } catch (const TransportError& e) {
      warn(warnings, std::string(what) + " failed: " + e.what());
      return std::nullopt;
    }
    if (blocks.empty()) {
      warn(warnings, std::string(what) + " reply had no prompt block");
      continue;
    }
    if (blocks.size() > 1) {
      warn(warnings, std::string(what) + " returned " + std::to_string(blocks.size()) + " prompts; using the first");
    }
    if (blocks.front().no_change) return std::nullopt;
    return blocks.front().text;
  }
  return std::nullopt;
}

}  // namespace

std::vector<Failure> select_failing_dvqs(const ResponseVector& responses, const DvqSet& dvqs) {
  if (responses.values.size() != dvqs.size()) {
    throw DomainError("response vector length " + std::to_string(responses.values.size()) +
                      " does not match question count " + std::to_string(dvqs.size()));
  }
  std::vector<Failure> out;
  for (std::size_t i = 0; i < dvqs.size(); ++i) {
    if (responses.values[i] < kYesThreshold) out.emplace_back(dvqs.questions[i], responses.values[i]);
  }
  return out;
}

std::vector<Failure> cap_failures(std::vector<Failure> failures, int cap) {
  if (cap < 0 || failures.size() <= static_cast<std::size_t>(cap)) return failures;
  std::stable_sort(failures.begin(), failures.end(), [](const Failure& a, const Failure& b) { return a.second < b.second; });
  failures.resize(static_cast<std::size_t>(cap));
  std::sort(failures.begin(), failures.end(),
            [](const Failure& a, const Failure& b) { return a.first.index < b.first.index; });
  return failures;
}

FailureDossier rationalize_failure(Gateway& gateway, const UserPrompt& user_prompt, const ImageArtifact& image,
                                   const Dvq& dvq, double response, double temperature, std::uint64_t seed,
                                   Warnings& warnings) {
  FailureDossier d;
  d.dvq = dvq;
  d.response = response;
  ModelRequest req;
  req.kind = CallKind::Rationalize;
  req.prompt = render(TemplateId::Rationalize,
                      TemplateArgs{}.set("image", image_placeholder(1)).set("question", dvq.question));
  req.images = {image};
  req.temperature = temperature;
  req.seed = seed;
  req.context = {{"key", user_prompt.id}, {"question", dvq.question}, {"question_index", dvq.index}};
  try {
    d.feedback = trim(gateway.generate_text(Role::MultimodalLLM, req));
    split_feedback(d.feedback, d);
  } catch (const TransportError& e) {
    warn(warnings, "rationalization failed for question " + std::to_string(dvq.index) + ": " + e.what());
    d.rationalization.clear();
    d.suggestion = "address: " + dvq.question;
    d.feedback = d.suggestion;
  }
  return d;
}

std::vector<FailureDossier> build_dossiers(Gateway& gateway, const UserPrompt& user_prompt, const Candidate& incumbent,
                                           const DvqSet& dvqs, const RunConfig& config, std::uint64_t seed,
                                           Warnings& warnings) {
  const auto failures = cap_failures(select_failing_dvqs(incumbent.responses, dvqs), config.dossier_cap);
  auto results = parallel_map(failures.size(), [&](std::size_t i) {
    Warnings w;
    auto d = rationalize_failure(gateway, user_prompt, incumbent.image, failures[i].first, failures[i].second,
                                 config.temperatures.critic, derive_seed(seed, "rationalize", i), w);
    return std::make_pair(std::move(d), std::move(w));
  });
  std::vector<FailureDossier> out;
  for (auto& [d, w] : results) {
    out.push_back(std::move(d));
    append(warnings, w);
  }
  return out;
}

std::optional<PromptProposal> targeted_edit(Gateway& gateway, const UserPrompt& user_prompt,
                                            const PromptProposal& best, const std::vector<FailureDossier>& dossiers,
                                            int iteration, double temperature, std::uint64_t seed,
                                            Warnings& warnings) {
  if (dossiers.empty()) return std::nullopt;
  std::vector<std::string> questions;
  std::vector<std::string> feedback;
  std::vector<std::string> suggestions;
  for (const auto& d : dossiers) {
    questions.push_back(d.dvq.question);
    feedback.push_back(d.feedback);
    suggestions.push_back(d.suggestion);
  }
  const std::string prompt = render(TemplateId::TargetedEdit, TemplateArgs{}
                                                                  .set("best_prompt_so_far", best.text)
                                                                  .set("n_questions", std::to_string(dossiers.size()))
                                                                  .set_list("dvq", questions)
                                                                  .set_list("feedback", feedback)
                                                                  .set("new_solutions", "1"));
  auto make_request = [&](int attempt) {
    ModelRequest req;
    req.kind = CallKind::TargetedEdit;
    req.prompt = prompt;
    req.temperature = temperature;
    req.seed = derive_seed(seed, "targeted_edit", static_cast<std::uint64_t>(attempt));
    req.context = {{"key", user_prompt.id},   {"best_prompt_so_far", best.text}, {"dvq", questions},
                   {"feedback", feedback},    {"suggestions", suggestions},      {"round", iteration - 1}};
    return req;
  };
  auto text = one_proposal(gateway, Role::TextLLM, make_request, "targeted edit", warnings);
  if (!text) return std::nullopt;
  return PromptProposal::make(user_prompt.id, *text, Origin::TargetedEdit, iteration, best.id);
}

std::optional<PromptProposal> implicit_improve(Gateway& gateway, const UserPrompt& user_prompt,
                                               const PromptProposal& best, const ImageArtifact& best_image,
                                               int iteration, double temperature, std::uint64_t seed,
                                               Warnings& warnings, Origin origin, std::string baseline_name) {
  const std::string prompt = render(TemplateId::ImplicitImprove, TemplateArgs{}
                                                                     .set("user_prompt", user_prompt.text)
                                                                     .set("best_prompt_so_far", best.text)
                                                                     .set("best_image_so_far", image_placeholder(1))
                                                                     .set("n_prompts", "1"));
  auto make_request = [&](int attempt) {
    ModelRequest req;
    req.kind = CallKind::ImplicitImprove;
    req.prompt = prompt;
    req.images = {best_image};
    req.temperature = temperature;
    req.seed = derive_seed(seed, "implicit_improve", static_cast<std::uint64_t>(attempt));
    req.context = {{"key", user_prompt.id},
                   {"user_prompt", user_prompt.text},
                   {"best_prompt_so_far", best.text},
                   {"round", iteration - 1}};
    return req;
  };
  auto text = one_proposal(gateway, Role::MultimodalLLM, make_request, "implicit improvement", warnings);
  if (!text) return std::nullopt;
  return PromptProposal::make(user_prompt.id, *text, origin, iteration, best.id, std::move(baseline_name));
}

}  // namespace t2iopt
