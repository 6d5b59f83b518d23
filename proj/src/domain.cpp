#include "t2iopt/domain.hpp"

#include <cctype>
#include <cmath>

#include "t2iopt/hash.hpp"
#include "t2iopt/run_config.hpp"

namespace t2iopt {

std::string trim(std::string_view text) {
  std::size_t b = 0;
  std::size_t e = text.size();
  while (b < e && std::isspace(static_cast<unsigned char>(text[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(text[e - 1]))) --e;
  return std::string(text.substr(b, e - b));
}

UserPrompt UserPrompt::make(std::string text, std::string dataset_key, std::string split) {
  if (trim(text).empty()) throw DomainError("user prompt text is empty");
  UserPrompt p;
  p.id = dataset_key.empty() ? content_id("p", {text}) : std::move(dataset_key);
  p.text = std::move(text);
  p.split = std::move(split);
  return p;
}

std::string_view to_string(Origin origin) {
  switch (origin) {
    case Origin::InitialRewrite: return "initial_rewrite";
    case Origin::TargetedEdit: return "targeted_edit";
    case Origin::ImplicitImprove: return "implicit_improve";
    case Origin::VerifierCorrection: return "verifier_correction";
    case Origin::Baseline: return "baseline";
  }
  return "unknown";
}

Origin origin_from_string(std::string_view text) {
  if (text == "initial_rewrite") return Origin::InitialRewrite;
  if (text == "targeted_edit") return Origin::TargetedEdit;
  if (text == "implicit_improve") return Origin::ImplicitImprove;
  if (text == "verifier_correction") return Origin::VerifierCorrection;
  if (text == "baseline") return Origin::Baseline;
  throw DomainError("unknown proposal origin: " + std::string(text));
}

PromptProposal PromptProposal::make(std::string_view user_prompt_id, std::string text, Origin origin, int iteration,
                                    std::optional<std::string> parent, std::string baseline_name) {
  if (trim(text).empty()) throw DomainError("proposal text is empty");
  if (iteration < 0) throw DomainError("proposal iteration is negative");
  // Verifier corrections of p(0) also live at iteration 0; their parent chain
  // still ends at the initial rewrite.
  if (iteration == 0 && origin != Origin::InitialRewrite && origin != Origin::Baseline &&
      origin != Origin::VerifierCorrection) {
    throw DomainError("iteration-0 proposal must come from the initial rewrite or a baseline");
  }
  PromptProposal p;
  p.text = std::move(text);
  p.origin = origin;
  p.iteration = iteration;
  p.parent = std::move(parent);
  p.baseline_name = std::move(baseline_name);
  const std::string iter = std::to_string(iteration);
  p.id = content_id("q", {user_prompt_id, p.text, to_string(origin), p.baseline_name, iter, p.parent.value_or("")});
  return p;
}

std::string_view to_string(ImageFormat format) {
  return format == ImageFormat::Png ? "png" : "feature_set";
}

ImageFormat image_format_from_string(std::string_view text) {
  if (text == "png") return ImageFormat::Png;
  if (text == "feature_set") return ImageFormat::FeatureSet;
  throw DomainError("unknown image format: " + std::string(text));
}

DvqSet DvqSet::make(std::string user_prompt_id, const std::vector<std::string>& questions) {
  DvqSet set;
  set.user_prompt_id = std::move(user_prompt_id);
  int index = 1;
  for (const auto& q : questions) {
    std::string t = trim(q);
    if (t.empty() || t.back() != '?') throw DomainError("DVQ must end with '?': " + t);
    set.questions.push_back(Dvq{index++, std::move(t)});
  }
  return set;
}

std::string_view to_string(Choice choice) {
  switch (choice) {
    case Choice::First: return "first";
    case Choice::Second: return "second";
    case Choice::Invalid: return "invalid";
  }
  return "invalid";
}

Choice choice_from_string(std::string_view text) {
  if (text == "first") return Choice::First;
  if (text == "second") return Choice::Second;
  if (text == "invalid") return Choice::Invalid;
  throw DomainError("unknown vote choice: " + std::string(text));
}

std::vector<std::string> validate_state(const OptimizationState& state, const RunConfig& config) {
  std::vector<std::string> violations;
  if (state.iteration < 0) violations.emplace_back("negative iteration");
  if (state.t2i_calls_used < 0) violations.emplace_back("negative t2i call count");
  if (state.non_improving_steps < 0) violations.emplace_back("negative non-improving count");
  if (state.t2i_calls_used > config.max_t2i_calls) violations.emplace_back("budget exceeded");
  if (!state.incumbent && state.iteration > 0) violations.emplace_back("incumbent missing");
  if (state.incumbent) {
    const Candidate& inc = *state.incumbent;
    if (inc.image.prompt_ref != inc.proposal.id) violations.emplace_back("incumbent image does not reference its proposal");
    if (!inc.responses.image_ref.empty() && inc.responses.image_ref != inc.image.id) {
      violations.emplace_back("incumbent responses do not reference its image");
    }
    for (double v : inc.responses.values) {
      if (!(v >= 0.0 && v <= 1.0)) {
        violations.emplace_back("response outside [0, 1]");
        break;
      }
    }
    if (state.t2i_calls_used == 0) violations.emplace_back("incumbent present without any T2I call");
  }
  return violations;
}

}  // namespace t2iopt
