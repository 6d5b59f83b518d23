#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "t2iopt/domain.hpp"
#include "t2iopt/gateway.hpp"
#include "t2iopt/run_config.hpp"
#include "t2iopt/warnings.hpp"

namespace t2iopt {

/// Decompose-then-refine. Falls back to the decomposition list when the
/// refinement reply has no questions; throws ParseError when neither has any.
DvqSetPtr generate_dvqs(Gateway& gateway, const UserPrompt& user_prompt, const RunConfig& config, std::uint64_t seed,
                        Warnings& warnings);

/// One rewrite-template call on `current_prompt`. Returns the first block,
/// the sentinel NO_CHANGE as `current_prompt` itself, or nullopt when the
/// reply has no block. `round` is recorded in the request context.
std::optional<std::string> rewrite_prompt(Gateway& gateway, const UserPrompt& user_prompt,
                                          const std::string& current_prompt, double temperature, std::uint64_t seed,
                                          int round, Warnings& warnings);

/// p(0): the rewrite template on the user prompt, retried once on a parse
/// failure, then falling back to the user prompt text.
PromptProposal initial_rewrite(Gateway& gateway, const UserPrompt& user_prompt, const RunConfig& config,
                               std::uint64_t seed, Warnings& warnings);

}  // namespace t2iopt
