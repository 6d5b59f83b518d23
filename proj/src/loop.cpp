#include "t2iopt/loop.hpp"

#include <future>

#include "t2iopt/compare.hpp"
#include "t2iopt/hash.hpp"
#include "t2iopt/init.hpp"
#include "t2iopt/parallel.hpp"
#include "t2iopt/propose.hpp"
#include "t2iopt/score.hpp"
#include "t2iopt/verify.hpp"

namespace t2iopt {

std::string_view to_string(StopReason reason) {
  switch (reason) {
    case StopReason::None: return "none";
    case StopReason::Budget: return "budget";
    case StopReason::Patience: return "patience";
    case StopReason::Starvation: return "starvation";
    case StopReason::VariantComplete: return "variant_complete";
    case StopReason::NoChange: return "no_change";
    case StopReason::NoProposal: return "no_proposal";
    case StopReason::InitFailure: return "init_failure";
  }
  return "?";
}

Termination should_terminate(const OptimizationState& state, const RunConfig& config, int next_iteration_cost) {
  if (state.t2i_calls_used + next_iteration_cost > config.max_t2i_calls) return {true, StopReason::Budget};
  if (config.patience && state.non_improving_steps >= *config.patience) return {true, StopReason::Patience};
  if (state.starved_iterations >= 2) return {true, StopReason::Starvation};
  return {};
}

std::uint64_t run_seed(const RunConfig& config, const UserPrompt& user_prompt) {
  return derive_seed(config.seed, user_prompt.id);
}

nlohmann::json record_config(const RunConfig& config) {
  nlohmann::json j = config.backends_snapshot.is_object() ? config.backends_snapshot : nlohmann::json::object();
  j["run"] = to_json(config);
  return j;
}

namespace {

struct Scored {
  std::optional<Candidate> candidate;
  Warnings warnings;
};

/// Generates and scores one image per proposal. Each proposal consumes one
/// budget unit whether or not the call succeeds.
std::vector<Scored> render_and_score(Gateway& gateway, const std::vector<PromptProposal>& proposals,
                                     const DvqSet& dvqs, const RunConfig& config, std::uint64_t seed,
                                     int first_call_index) {
  return parallel_map(proposals.size(), [&](std::size_t k) {
    Scored s;
    const auto call = static_cast<std::uint64_t>(first_call_index) + k;
    try {
      ImageArtifact img = gateway.generate_image(proposals[k], derive_seed(seed, "t2i", call));
      ResponseVector rv = answer_dvqs(gateway, img, dvqs, config, derive_seed(seed, "score", call), s.warnings);
      s.candidate = Candidate{proposals[k], std::move(img), std::move(rv)};
    } catch (const TransportError& e) {
      warn(s.warnings, "image generation failed for proposal " + proposals[k].id + ": " + e.what());
    }
    return s;
  });
}

void record_candidates(IterationEntry& entry, const std::vector<Candidate>& candidates) {
  for (const auto& c : candidates) {
    entry.images.push_back(c.image);
    entry.responses.push_back(c.responses);
    entry.scores.push_back(c.responses.values.empty() ? 0.0 : dsg_score(c.responses));
  }
}

void finish(RunRecord& rec, const OptimizationState& state, const RunConfig& config, StopReason reason) {
  rec.stop_reason = std::string(to_string(reason));
  rec.t2i_calls_used = state.t2i_calls_used;
  if (state.incumbent) {
    rec.final = state.incumbent;
    if (!state.incumbent->responses.values.empty()) rec.final_score = dsg_score(state.incumbent->responses);
  }
  for (const auto& v : validate_state(state, config)) warn(rec.warnings, "state invariant violated: " + v);
  rec.finished_at = timestamp_now(config.deterministic_clock);
}

}  // namespace

RunRecord optimize(Gateway& gateway, const UserPrompt& user_prompt, const RunConfig& config, DvqSetPtr dvqs) {
  config.check();
  RunRecord rec;
  rec.method = std::string(to_string(config.variant));
  rec.user_prompt = user_prompt;
  rec.config = record_config(config);
  rec.started_at = timestamp_now(config.deterministic_clock);

  const std::uint64_t seed = run_seed(config, user_prompt);
  OptimizationState state;
  state.rng_seed = seed;

  // Step 0: questions and p(0) are independent.
  IterationEntry e0;
  Warnings dvq_warnings;
  Warnings rewrite_warnings;
  auto rewrite_future = std::async(std::launch::async, [&] {
    return initial_rewrite(gateway, user_prompt, config, derive_seed(seed, "initial_rewrite"), rewrite_warnings);
  });
  std::string init_error;
  try {
    if (!dvqs) dvqs = generate_dvqs(gateway, user_prompt, config, derive_seed(seed, "dvq"), dvq_warnings);
  } catch (const std::exception& e) {
    init_error = std::string("question generation failed: ") + e.what();
  }
  std::optional<PromptProposal> p0;
  try {
    p0 = rewrite_future.get();
  } catch (const std::exception& e) {
    if (init_error.empty()) init_error = std::string("initial rewrite failed: ") + e.what();
  }
  append(e0.warnings, dvq_warnings);
  append(e0.warnings, rewrite_warnings);
  if (!init_error.empty()) {
    rec.status = "failed";
    rec.error = init_error;
    rec.iterations.push_back(std::move(e0));
    finish(rec, state, config, StopReason::InitFailure);
    return rec;
  }
  rec.dvqs = *dvqs;
  e0.proposals.push_back(*p0);
  e0.generators.push_back({"initial_rewrite", "proposed", p0->id});
  if (config.uses_verifier()) {
    auto vr = verify_and_correct(gateway, user_prompt, *p0, *dvqs, config, derive_seed(seed, "verify", 0), e0.warnings);
    for (auto& c : vr.corrections) e0.proposals.push_back(c);
    e0.verifier.push_back(std::move(vr.transcript));
    p0 = std::move(vr.proposal);
  }
  auto first = render_and_score(gateway, {*p0}, *dvqs, config, seed, state.t2i_calls_used);
  state.t2i_calls_used += 1;
  append(e0.warnings, first[0].warnings);
  e0.t2i_calls_used = state.t2i_calls_used;
  if (!first[0].candidate) {
    rec.status = "failed";
    rec.error = "initial image generation failed";
    rec.iterations.push_back(std::move(e0));
    finish(rec, state, config, StopReason::InitFailure);
    return rec;
  }
  record_candidates(e0, {*first[0].candidate});
  state = update_incumbent(std::move(state), gateway, *first[0].candidate, user_prompt, config.judge_n,
                           config.temperatures.judge, 0)
              .state;
  e0.incumbent_after = state.incumbent->proposal.id;
  rec.iterations.push_back(std::move(e0));

  if (!config.iterates()) {
    finish(rec, state, config, StopReason::VariantComplete);
    return rec;
  }

  StopReason reason = StopReason::None;
  for (int t = 1;; ++t) {
    const Termination term = should_terminate(state, config, kIterationCost);
    if (term.stop) {
      reason = term.reason;
      break;
    }
    state.iteration = t;
    const std::uint64_t it_seed = derive_seed(seed, "iteration", static_cast<std::uint64_t>(t));
    const Candidate incumbent = *state.incumbent;
    IterationEntry entry;
    entry.iteration = t;
    entry.incumbent_before = incumbent.proposal.id;

    // Both generators condition on the incumbent and run concurrently.
    Warnings targeted_warnings;
    Warnings implicit_warnings;
    std::vector<FailureDossier> dossiers;
    auto targeted = std::async(std::launch::async, [&]() -> std::optional<PromptProposal> {
      dossiers = build_dossiers(gateway, user_prompt, incumbent, *dvqs, config, derive_seed(it_seed, "dossiers"),
                                targeted_warnings);
      return targeted_edit(gateway, user_prompt, incumbent.proposal, dossiers, t, config.temperatures.text,
                           derive_seed(it_seed, "targeted"), targeted_warnings);
    });
    auto implicit = std::async(std::launch::async, [&]() -> std::optional<PromptProposal> {
      return implicit_improve(gateway, user_prompt, incumbent.proposal, incumbent.image, t,
                              config.temperatures.critic, derive_seed(it_seed, "implicit"), implicit_warnings);
    });
    const auto te = targeted.get();
    const auto ii = implicit.get();
    append(entry.warnings, targeted_warnings);
    append(entry.warnings, implicit_warnings);
    entry.dossiers = std::move(dossiers);

    std::vector<PromptProposal> proposals;
    auto note = [&](const char* name, const std::optional<PromptProposal>& p) {
      entry.generators.push_back({name, p ? "proposed" : "absent", p ? std::optional<std::string>(p->id) : std::nullopt});
      if (p) {
        entry.proposals.push_back(*p);
        proposals.push_back(*p);
      }
    };
    note("targeted_edit", te);
    note("implicit_improve", ii);

    if (proposals.empty()) {
      ++state.starved_iterations;
      ++state.non_improving_steps;
    } else {
      state.starved_iterations = 0;
      if (config.uses_verifier()) {
        auto verified = parallel_map(proposals.size(), [&](std::size_t k) {
          Warnings w;
          auto vr = verify_and_correct(gateway, user_prompt, proposals[k], *dvqs, config,
                                       derive_seed(it_seed, "verify", k), w);
          return std::make_pair(std::move(vr), std::move(w));
        });
        for (std::size_t k = 0; k < verified.size(); ++k) {
          auto& [vr, w] = verified[k];
          append(entry.warnings, w);
          for (auto& c : vr.corrections) entry.proposals.push_back(c);
          entry.verifier.push_back(std::move(vr.transcript));
          proposals[k] = std::move(vr.proposal);
        }
      }

      auto scored = render_and_score(gateway, proposals, *dvqs, config, seed, state.t2i_calls_used);
      state.t2i_calls_used += static_cast<int>(proposals.size());
      std::vector<Candidate> candidates;
      for (auto& s : scored) {
        append(entry.warnings, s.warnings);
        if (s.candidate) candidates.push_back(std::move(*s.candidate));
      }
      record_candidates(entry, candidates);

      if (candidates.empty()) {
        ++state.non_improving_steps;
      } else if (config.uses_comparator()) {
        auto bracket = tournament(gateway, user_prompt, candidates, config.judge_n, config.temperatures.judge,
                                  derive_seed(it_seed, "tournament"));
        entry.tournament = std::move(bracket.duels);
        auto update = update_incumbent(std::move(state), gateway, candidates[bracket.winner], user_prompt,
                                       config.judge_n, config.temperatures.judge, derive_seed(it_seed, "duel"));
        state = std::move(update.state);
        entry.incumbent_duel = std::move(update.duel);
      } else {
        // Without a comparator the latest generation always takes over.
        state.incumbent = candidates.back();
        state.non_improving_steps = 0;
      }
    }
    entry.incumbent_after = state.incumbent->proposal.id;
    entry.t2i_calls_used = state.t2i_calls_used;
    entry.non_improving_steps = state.non_improving_steps;
    rec.iterations.push_back(std::move(entry));
  }
  finish(rec, state, config, reason);
  return rec;
}

}  // namespace t2iopt
