#include "t2iopt/init.hpp"

#include "t2iopt/hash.hpp"
#include "t2iopt/parsing.hpp"
#include "t2iopt/templates.hpp"

namespace t2iopt {

namespace {

std::string numbered(const std::vector<std::string>& questions) {
  std::string out;
  for (std::size_t i = 0; i < questions.size(); ++i) {
    if (i) out += '\n';
    out += std::to_string(i + 1) + ". " + questions[i];
  }
  return out;
}

}  // namespace

DvqSetPtr generate_dvqs(Gateway& gateway, const UserPrompt& user_prompt, const RunConfig& config, std::uint64_t seed,
                        Warnings& warnings) {
  ModelRequest decompose;
  decompose.kind = CallKind::DvqDecompose;
  decompose.prompt = render(TemplateId::DvqDecompose, TemplateArgs{}.set("user_prompt", user_prompt.text));
  decompose.temperature = config.temperatures.text;
  decompose.seed = derive_seed(seed, "dvq_decompose");
  decompose.context = {{"key", user_prompt.id}, {"user_prompt", user_prompt.text}};
  const std::string draft_raw = gateway.generate_text(Role::TextLLM, decompose);
  const auto draft = parse_dvq_list(draft_raw);

  ModelRequest refine;
  refine.kind = CallKind::DvqRefine;
  refine.prompt = render(TemplateId::DvqRefine, TemplateArgs{}
                                                    .set("user_prompt", user_prompt.text)
                                                    .set("questions", draft.empty() ? trim(draft_raw) : numbered(draft)));
  refine.temperature = config.temperatures.text;
  refine.seed = derive_seed(seed, "dvq_refine");
  refine.context = {{"key", user_prompt.id}, {"user_prompt", user_prompt.text}, {"questions", draft}};
  std::vector<std::string> questions;
  try {
    questions = parse_dvq_list(gateway.generate_text(Role::TextLLM, refine));
  } catch (const TransportError& e) {
    warn(warnings, std::string("question refinement failed: ") + e.what());
  }
  if (questions.empty()) {
    if (draft.empty()) throw ParseError("no numbered questions could be extracted for prompt " + user_prompt.id);
    warn(warnings, "question refinement returned no parsable list; using the decomposition list");
    questions = draft;
  }
  if (static_cast<int>(questions.size()) > config.dvq_warn_threshold) {
    warn(warnings, std::to_string(questions.size()) + " questions generated for prompt " + user_prompt.id +
                       " (above " + std::to_string(config.dvq_warn_threshold) + ")");
  }
  return std::make_shared<const DvqSet>(DvqSet::make(user_prompt.id, questions));
}

std::optional<std::string> rewrite_prompt(Gateway& gateway, const UserPrompt& user_prompt,
                                          const std::string& current_prompt, double temperature, std::uint64_t seed,
                                          int round, Warnings& warnings) {
  ModelRequest req;
  req.kind = CallKind::Rewrite;
  req.prompt = render(TemplateId::Rewrite, TemplateArgs{}.set("current_prompt", current_prompt).set("n_prompt", "1"));
  req.temperature = temperature;
  req.seed = seed;
  req.context = {{"key", user_prompt.id}, {"current_prompt", current_prompt}, {"round", round}};
  const auto blocks = extract_prompts(gateway.generate_text(Role::TextLLM, req));
  if (blocks.empty()) return std::nullopt;
  if (blocks.size() > 1) warn(warnings, "rewrite returned " + std::to_string(blocks.size()) + " prompts; using the first");
  if (blocks.front().no_change) return current_prompt;
  return blocks.front().text;
}

PromptProposal initial_rewrite(Gateway& gateway, const UserPrompt& user_prompt, const RunConfig& config,
                               std::uint64_t seed, Warnings& warnings) {
  std::optional<std::string> text;
  for (int attempt = 0; attempt < 2 && !text; ++attempt) {
    try {
      text = rewrite_prompt(gateway, user_prompt, user_prompt.text, config.temperatures.text,
                            derive_seed(seed, "rewrite", static_cast<std::uint64_t>(attempt)), attempt, warnings);
    } catch (const TransportError& e) {
      warn(warnings, std::string("initial rewrite failed: ") + e.what());
      break;
    }
    if (!text) warn(warnings, "initial rewrite reply had no prompt block");
  }
  if (!text) {
    warn(warnings, "falling back to the user prompt as the initial proposal");
    text = user_prompt.text;
  }
  return PromptProposal::make(user_prompt.id, *text, Origin::InitialRewrite, 0, std::nullopt);
}

}  // namespace t2iopt
