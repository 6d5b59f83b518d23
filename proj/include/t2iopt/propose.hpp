#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "t2iopt/domain.hpp"
#include "t2iopt/gateway.hpp"
#include "t2iopt/run_config.hpp"
#include "t2iopt/warnings.hpp"

namespace t2iopt {

struct FailureDossier {
  Dvq dvq;
  double response = 0.0;
  std::string rationalization;
  std::string suggestion;
  /// Full critic reply; this is what the editor sees as feedback.
  std::string feedback;
};

using Failure = std::pair<Dvq, double>;

/// Questions with response strictly below 0.5, in question order. Throws
/// DomainError when the lengths differ.
std::vector<Failure> select_failing_dvqs(const ResponseVector& responses, const DvqSet& dvqs);

/// Keeps the `cap` lowest responses (earlier question first on ties) and
/// returns them in question order.
std::vector<Failure> cap_failures(std::vector<Failure> failures, int cap);

/// One critic call. On TransportError returns an empty rationalization with
/// the suggestion "address: <question>".
FailureDossier rationalize_failure(Gateway& gateway, const UserPrompt& user_prompt, const ImageArtifact& image,
                                   const Dvq& dvq, double response, double temperature, std::uint64_t seed,
                                   Warnings& warnings);

/// Rationalizes every (capped) failure of `incumbent` concurrently.
std::vector<FailureDossier> build_dossiers(Gateway& gateway, const UserPrompt& user_prompt, const Candidate& incumbent,
                                           const DvqSet& dvqs, const RunConfig& config, std::uint64_t seed,
                                           Warnings& warnings);

/// nullopt when `dossiers` is empty, the editor answers NO_CHANGE, or no
/// block is parsed after one retry.
std::optional<PromptProposal> targeted_edit(Gateway& gateway, const UserPrompt& user_prompt,
                                            const PromptProposal& best, const std::vector<FailureDossier>& dossiers,
                                            int iteration, double temperature, std::uint64_t seed,
                                            Warnings& warnings);

/// nullopt on NO_CHANGE or when no block is parsed after one retry.
std::optional<PromptProposal> implicit_improve(Gateway& gateway, const UserPrompt& user_prompt,
                                               const PromptProposal& best, const ImageArtifact& best_image,
                                               int iteration, double temperature, std::uint64_t seed,
                                               Warnings& warnings, Origin origin = Origin::ImplicitImprove,
                                               std::string baseline_name = {});

}  // namespace t2iopt
