#include "t2iopt/compare.hpp"

#include <stdexcept>

#include "t2iopt/hash.hpp"
#include "t2iopt/parallel.hpp"

namespace t2iopt {

VoteTally tally_votes(const std::vector<JudgeVote>& votes, int n) {
  VoteTally t;
  for (std::size_t i = 0; i < votes.size(); ++i) {
    const bool challenger_first = static_cast<int>(i) < n;
    switch (votes[i].chosen) {
      case Choice::First: ++(challenger_first ? t.challenger : t.incumbent); break;
      case Choice::Second: ++(challenger_first ? t.incumbent : t.challenger); break;
      case Choice::Invalid: ++t.invalid; break;
    }
  }
  return t;
}

DuelOutcome decide(std::vector<JudgeVote> votes, int n, const std::string& challenger, const std::string& incumbent,
                   std::uint64_t seed) {
  DuelOutcome out;
  out.challenger = challenger;
  out.incumbent = incumbent;
  out.tally = tally_votes(votes, n);
  out.votes = std::move(votes);
  if (out.tally.challenger > out.tally.incumbent) {
    out.winner = challenger;
  } else if (out.tally.challenger < out.tally.incumbent) {
    out.winner = incumbent;
  } else if (out.tally.challenger == 0) {
    out.degenerate = true;
    out.winner = incumbent;
  } else {
    out.tie_broken_randomly = true;
    out.winner = SplitMix64(derive_seed(seed, "tie")).coin() ? challenger : incumbent;
  }
  return out;
}

DuelOutcome duel(Gateway& gateway, const UserPrompt& user_prompt, const Candidate& challenger,
                 const Candidate& incumbent, int n, double temperature, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("duel needs n >= 1");
  auto votes = parallel_map(static_cast<std::size_t>(2 * n), [&](std::size_t i) {
    const bool challenger_first = static_cast<int>(i) < n;
    const auto& a = challenger_first ? challenger.image : incumbent.image;
    const auto& b = challenger_first ? incumbent.image : challenger.image;
    try {
      return gateway.judge_choice(user_prompt, a, b, temperature, derive_seed(seed, "vote", i));
    } catch (const TransportError& e) {
      JudgeVote v;
      v.first_image = a.id;
      v.second_image = b.id;
      v.chosen = Choice::Invalid;
      v.raw_text = std::string("transport failure: ") + e.what();
      v.temperature = temperature;
      return v;
    }
  });
  return decide(std::move(votes), n, challenger.proposal.id, incumbent.proposal.id, seed);
}

TournamentResult tournament(Gateway& gateway, const UserPrompt& user_prompt, const std::vector<Candidate>& entrants,
                            int n, double temperature, std::uint64_t seed) {
  if (entrants.empty()) throw std::invalid_argument("tournament needs at least one entrant");
  TournamentResult result;
  std::vector<std::size_t> alive(entrants.size());
  for (std::size_t i = 0; i < alive.size(); ++i) alive[i] = i;
  std::uint64_t duel_index = 0;
  while (alive.size() > 1) {
    const std::size_t pairs = alive.size() / 2;
    const std::uint64_t base = duel_index;
    auto outcomes = parallel_map(pairs, [&](std::size_t k) {
      return duel(gateway, user_prompt, entrants[alive[2 * k]], entrants[alive[2 * k + 1]], n, temperature,
                  derive_seed(seed, "bracket", base + k));
    });
    duel_index += pairs;
    std::vector<std::size_t> next;
    for (std::size_t k = 0; k < pairs; ++k) {
      next.push_back(outcomes[k].challenger_won() ? alive[2 * k] : alive[2 * k + 1]);
      result.duels.push_back(std::move(outcomes[k]));
    }
    if (alive.size() % 2 == 1) next.push_back(alive.back());
    alive = std::move(next);
  }
  result.winner = alive.front();
  return result;
}

IncumbentUpdate update_incumbent(OptimizationState state, Gateway& gateway, const Candidate& iteration_winner,
                                 const UserPrompt& user_prompt, int n, double temperature, std::uint64_t seed) {
  IncumbentUpdate out;
  if (!state.incumbent) {
    state.incumbent = iteration_winner;
    state.non_improving_steps = 0;
    out.changed = true;
    out.state = std::move(state);
    return out;
  }
  out.duel = duel(gateway, user_prompt, iteration_winner, *state.incumbent, n, temperature, seed);
  out.changed = out.duel->challenger_won();
  if (out.changed) {
    state.incumbent = iteration_winner;
    state.non_improving_steps = 0;
  } else {
    ++state.non_improving_steps;
  }
  out.state = std::move(state);
  return out;
}

}  // namespace t2iopt
