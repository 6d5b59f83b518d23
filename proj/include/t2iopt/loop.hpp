#pragma once

#include <cstdint>
#include <string_view>

#include "t2iopt/domain.hpp"
#include "t2iopt/gateway.hpp"
#include "t2iopt/record.hpp"
#include "t2iopt/run_config.hpp"

namespace t2iopt {

enum class StopReason { None, Budget, Patience, Starvation, VariantComplete, NoChange, NoProposal, InitFailure };

std::string_view to_string(StopReason reason);

struct Termination {
  bool stop = false;
  StopReason reason = StopReason::None;
};

/// Budget first, then patience, then generator starvation (two consecutive
/// steps where neither generator proposed anything).
Termination should_terminate(const OptimizationState& state, const RunConfig& config, int next_iteration_cost);

/// T2I calls one improvement step may spend: one per generator.
inline constexpr int kIterationCost = 2;

/// Root seed of one run: a function of the configured seed and the prompt id.
std::uint64_t run_seed(const RunConfig& config, const UserPrompt& user_prompt);

/// The full optimizer, shaped by config.variant. `dvqs` may be supplied to
/// share questions across methods; otherwise they are generated.
RunRecord optimize(Gateway& gateway, const UserPrompt& user_prompt, const RunConfig& config,
                   DvqSetPtr dvqs = nullptr);

/// The config block stored in records: backend snapshot plus run settings.
nlohmann::json record_config(const RunConfig& config);

}  // namespace t2iopt
