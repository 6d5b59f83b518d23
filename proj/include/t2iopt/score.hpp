#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "t2iopt/domain.hpp"
#include "t2iopt/gateway.hpp"
#include "t2iopt/run_config.hpp"
#include "t2iopt/warnings.hpp"

namespace t2iopt {

inline constexpr double kYesThreshold = 0.5;

class EmptyVectorError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// One VQA call per question, concurrently. A call that still fails after
/// retries contributes 0.5 and a warning.
ResponseVector answer_dvqs(Gateway& gateway, const ImageArtifact& image, const DvqSet& dvqs, const RunConfig& config,
                           std::uint64_t seed, Warnings& warnings);

/// Fraction of responses at or above 0.5. Throws EmptyVectorError.
double dsg_score(const std::vector<double>& responses);
inline double dsg_score(const ResponseVector& responses) { return dsg_score(responses.values); }

}  // namespace t2iopt
