#include "t2iopt/gateway.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "t2iopt/hash.hpp"
#include "t2iopt/parsing.hpp"
#include "t2iopt/templates.hpp"

namespace t2iopt {

std::string_view to_string(Role role) {
  switch (role) {
    case Role::TextLLM: return "text_llm";
    case Role::MultimodalLLM: return "multimodal_llm";
    case Role::TextToImage: return "text_to_image";
  }
  return "unknown";
}

namespace {
constexpr std::string_view kKindNames[kCallKindCount] = {
    "dvq_decompose", "dvq_refine", "rewrite", "vqa", "rationalize", "targeted_edit", "implicit_improve", "verify", "judge",
};
}

std::string_view to_string(CallKind kind) { return kKindNames[static_cast<std::size_t>(kind)]; }

CallKind call_kind_from_string(std::string_view text) {
  for (std::size_t i = 0; i < kCallKindCount; ++i) {
    if (kKindNames[i] == text) return static_cast<CallKind>(i);
  }
  throw ConfigError("unknown call kind: " + std::string(text));
}

void sleep_backoff(const RetryPolicy& policy, int attempt) {
  if (policy.initial_backoff.count() <= 0) return;
  const double ms = static_cast<double>(policy.initial_backoff.count()) * std::pow(policy.multiplier, attempt);
  const auto capped = std::min<double>(ms, static_cast<double>(policy.max_backoff.count()));
  std::this_thread::sleep_for(std::chrono::milliseconds(static_cast<long long>(capped)));
}

bool Gateway::has(Role role) const {
  switch (role) {
    case Role::TextLLM: return text_.model != nullptr;
    case Role::MultimodalLLM: return multimodal_.model != nullptr;
    case Role::TextToImage: return t2i_.model != nullptr;
  }
  return false;
}

Gateway::Endpoint& Gateway::endpoint(Role role) {
  if (role == Role::TextToImage) throw ConfigError("text_to_image backend cannot complete text");
  Endpoint& ep = role == Role::TextLLM ? text_ : multimodal_;
  if (!ep.model) throw ConfigError("backend role not configured: " + std::string(to_string(role)));
  return ep;
}

ModelReply Gateway::complete(Role role, const ModelRequest& request) {
  Endpoint& ep = endpoint(role);
  return with_retries(ep.retry, [&] { return ep.model->complete(request); });
}

double Gateway::vqa_yes_probability(const ImageArtifact& image, const Dvq& question, double temperature,
                                    std::uint64_t seed, const std::string& key) {
  ModelRequest req;
  req.kind = CallKind::Vqa;
  req.prompt = render(TemplateId::VqaAnswer, TemplateArgs{}.set("image", image_placeholder(1)).set("question", question.question));
  req.images = {image};
  req.temperature = temperature;
  req.seed = seed;
  req.context = {{"key", key}, {"question", question.question}, {"question_index", question.index}};
  const ModelReply reply = complete(Role::MultimodalLLM, req);
  if (reply.yes_probability) {
    const double p = *reply.yes_probability;
    if (std::isnan(p)) return 0.5;
    return std::clamp(p, 0.0, 1.0);
  }
  if (auto yes = parse_yes_no(reply.text)) return *yes ? 1.0 : 0.0;
  return 0.5;
}

JudgeVote Gateway::judge_choice(const UserPrompt& user_prompt, const ImageArtifact& image_a,
                                const ImageArtifact& image_b, double temperature, std::uint64_t seed) {
  ModelRequest req;
  req.kind = CallKind::Judge;
  req.prompt = render(TemplateId::Judge, TemplateArgs{}
                                             .set("user_prompt", user_prompt.text)
                                             .set("image_A", image_placeholder(1))
                                             .set("image_B", image_placeholder(2)));
  req.images = {image_a, image_b};
  req.temperature = temperature;
  req.seed = seed;
  req.context = {{"key", user_prompt.id}, {"user_prompt", user_prompt.text}};
  const ModelReply reply = complete(Role::MultimodalLLM, req);
  JudgeVote vote;
  vote.first_image = image_a.id;
  vote.second_image = image_b.id;
  vote.chosen = parse_judge_answer(reply.text);
  vote.raw_text = reply.text;
  vote.temperature = temperature;
  return vote;
}

ImageArtifact Gateway::generate_image(const PromptProposal& proposal, std::uint64_t seed) {
  if (!t2i_.model) throw ConfigError("backend role not configured: text_to_image");
  RenderedImage rendered = with_retries(t2i_.retry, [&] { return t2i_.model->render(proposal.text, seed); });
  ImageArtifact art;
  art.format = rendered.format;
  art.bytes = std::move(rendered.bytes);
  art.prompt_ref = proposal.id;
  art.seed = seed;
  art.id = content_id("i", {proposal.id, std::to_string(seed), hex64(fnv1a64(art.bytes))});
  return art;
}

}  // namespace t2iopt
