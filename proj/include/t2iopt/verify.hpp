#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "t2iopt/domain.hpp"
#include "t2iopt/gateway.hpp"
#include "t2iopt/run_config.hpp"
#include "t2iopt/warnings.hpp"

namespace t2iopt {

struct VerifierStep {
  enum class Outcome { NoChange, Revision, Unparseable, TransportFailure };
  Outcome outcome = Outcome::Unparseable;
  std::string raw_reply;
  std::string revised_proposal;  // id of the correction, Revision only
};

std::string_view to_string(VerifierStep::Outcome outcome);
VerifierStep::Outcome verifier_outcome_from_string(std::string_view text);

struct VerifierTranscript {
  std::string input_proposal;
  std::string output_proposal;
  std::vector<VerifierStep> steps;
};

struct VerifyResult {
  PromptProposal proposal;                  // final text (input when nothing changed)
  std::vector<PromptProposal> corrections;  // chain, each parented to the previous
  VerifierTranscript transcript;
};

/// Checks `proposal` against every DVQ and applies at most
/// config.verifier_patience corrections, one verifier call each.
VerifyResult verify_and_correct(Gateway& gateway, const UserPrompt& user_prompt, const PromptProposal& proposal,
                                const DvqSet& dvqs, const RunConfig& config, std::uint64_t seed, Warnings& warnings);

/// Text placed in the template's constraints slot.
std::string format_constraints(const DvqSet& dvqs);

}  // namespace t2iopt
