#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "t2iopt/domain.hpp"
#include "t2iopt/gateway.hpp"

namespace t2iopt {

struct VoteTally {
  int challenger = 0;
  int incumbent = 0;
  int invalid = 0;
};

/// One head-to-head decided by 2n judge votes. `votes` holds every scheduled
/// vote in schedule order: the first n show the challenger as Image A, the
/// last n show the incumbent as Image A. Invalid votes stay in the list but
/// do not count.
struct DuelOutcome {
  std::string challenger;  // proposal ids
  std::string incumbent;
  std::string winner;
  std::vector<JudgeVote> votes;
  VoteTally tally;
  bool tie_broken_randomly = false;
  bool degenerate = false;  // every vote invalid; incumbent kept

  bool challenger_won() const { return winner == challenger; }
};

/// Recomputes the tally from the schedule positions of `votes`.
VoteTally tally_votes(const std::vector<JudgeVote>& votes, int n);

/// Majority of valid votes; exact ties go to a coin seeded from `seed`.
DuelOutcome decide(std::vector<JudgeVote> votes, int n, const std::string& challenger, const std::string& incumbent,
                   std::uint64_t seed);

/// Throws std::invalid_argument when n < 1.
DuelOutcome duel(Gateway& gateway, const UserPrompt& user_prompt, const Candidate& challenger,
                 const Candidate& incumbent, int n, double temperature, std::uint64_t seed);

struct TournamentResult {
  std::size_t winner = 0;  // index into the entrants
  std::vector<DuelOutcome> duels;
};

/// Single elimination in list order; an odd entrant out (the last) gets a bye.
/// Throws std::invalid_argument on an empty list.
TournamentResult tournament(Gateway& gateway, const UserPrompt& user_prompt, const std::vector<Candidate>& entrants,
                            int n, double temperature, std::uint64_t seed);

struct IncumbentUpdate {
  OptimizationState state;
  std::optional<DuelOutcome> duel;
  bool changed = false;
};

/// With no incumbent yet the winner is adopted without a duel; otherwise it
/// must beat the incumbent. The patience counter resets on a change and
/// increments otherwise.
IncumbentUpdate update_incumbent(OptimizationState state, Gateway& gateway, const Candidate& iteration_winner,
                                 const UserPrompt& user_prompt, int n, double temperature, std::uint64_t seed);

}  // namespace t2iopt
