#include "t2iopt/verify.hpp"

#include "t2iopt/hash.hpp"
#include "t2iopt/parsing.hpp"
#include "t2iopt/templates.hpp"

namespace t2iopt {

std::string_view to_string(VerifierStep::Outcome outcome) {
  switch (outcome) {
    case VerifierStep::Outcome::NoChange: return "no_change";
    case VerifierStep::Outcome::Revision: return "revision";
    case VerifierStep::Outcome::Unparseable: return "unparseable";
    case VerifierStep::Outcome::TransportFailure: return "transport_failure";
  }
  return "?";
}

VerifierStep::Outcome verifier_outcome_from_string(std::string_view text) {
  if (text == "no_change") return VerifierStep::Outcome::NoChange;
  if (text == "revision") return VerifierStep::Outcome::Revision;
  if (text == "unparseable") return VerifierStep::Outcome::Unparseable;
  if (text == "transport_failure") return VerifierStep::Outcome::TransportFailure;
  throw DomainError("unknown verifier outcome: " + std::string(text));
}

std::string format_constraints(const DvqSet& dvqs) {
  std::string out;
  for (const auto& q : dvqs.questions) out += "\n" + std::to_string(q.index) + ". " + q.question;
  return out;
}

VerifyResult verify_and_correct(Gateway& gateway, const UserPrompt& user_prompt, const PromptProposal& proposal,
                                const DvqSet& dvqs, const RunConfig& config, std::uint64_t seed, Warnings& warnings) {
  VerifyResult result{proposal, {}, {proposal.id, proposal.id, {}}};
  std::vector<std::string> constraints;
  for (const auto& q : dvqs.questions) constraints.push_back(q.question);
  const std::string formatted = format_constraints(dvqs);

  for (int round = 0; round < config.verifier_patience; ++round) {
    const PromptProposal& current = result.proposal;
    ModelRequest req;
    req.kind = CallKind::Verify;
    req.prompt = render(TemplateId::Verify, TemplateArgs{}.set("constraints", formatted).set("prompt", current.text));
    req.temperature = config.temperatures.text;
    req.seed = derive_seed(seed, "verify", static_cast<std::uint64_t>(round));
    req.context = {{"key", user_prompt.id}, {"prompt", current.text}, {"constraints", constraints}, {"round", round}};

    VerifierStep step;
    try {
      step.raw_reply = gateway.generate_text(Role::TextLLM, req);
    } catch (const TransportError& e) {
      step.outcome = VerifierStep::Outcome::TransportFailure;
      result.transcript.steps.push_back(std::move(step));
      warn(warnings, std::string("verifier call failed; keeping the current prompt: ") + e.what());
      break;
    }
    const VerifierReply reply = parse_verifier_reply(step.raw_reply);
    if (reply.kind == VerifierReply::Kind::NoChange) {
      step.outcome = VerifierStep::Outcome::NoChange;
      result.transcript.steps.push_back(std::move(step));
      break;
    }
    if (reply.kind == VerifierReply::Kind::Unparseable) {
      step.outcome = VerifierStep::Outcome::Unparseable;
      result.transcript.steps.push_back(std::move(step));
      warn(warnings, "verifier reply had no answer block; keeping the current prompt");
      break;
    }
    PromptProposal corrected = PromptProposal::make(user_prompt.id, reply.revision, Origin::VerifierCorrection,
                                                    current.iteration, current.id);
    step.outcome = VerifierStep::Outcome::Revision;
    step.revised_proposal = corrected.id;
    result.transcript.steps.push_back(std::move(step));
    result.corrections.push_back(corrected);
    result.proposal = std::move(corrected);
  }
  result.transcript.output_proposal = result.proposal.id;
  return result;
}

}  // namespace t2iopt
