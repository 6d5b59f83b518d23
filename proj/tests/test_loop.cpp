#include <doctest.h>

#include "support.hpp"
#include "t2iopt/loop.hpp"
#include "t2iopt/score.hpp"

using namespace t2iopt;
using namespace t2iopt::testing;

namespace {

// "fox" needs two mentions, so the plain prompt renders without it.
ScriptedWorldSpec planted() {
  ScriptedWorldSpec spec;
  spec.required_mentions = {{"fox", 2}};
  return spec;
}

RunConfig deterministic(Variant v = Variant::VPIR) {
  RunConfig c;
  c.variant = v;
  c.deterministic_clock = true;
  return c;
}

}  // namespace

TEST_CASE("termination checks budget, then patience, then starvation") {
  RunConfig c;
  c.max_t2i_calls = 8;
  c.patience = 2;
  OptimizationState s;
  s.t2i_calls_used = 7;
  s.non_improving_steps = 5;
  s.starved_iterations = 5;
  CHECK(should_terminate(s, c, 2).reason == StopReason::Budget);
  s.t2i_calls_used = 6;
  CHECK(should_terminate(s, c, 2).reason == StopReason::Patience);
  s.non_improving_steps = 1;
  CHECK(should_terminate(s, c, 2).reason == StopReason::Starvation);
  s.starved_iterations = 1;
  CHECK_FALSE(should_terminate(s, c, 2).stop);
  c.patience.reset();
  s.non_improving_steps = 100;
  CHECK_FALSE(should_terminate(s, c, 2).stop);
}

TEST_CASE("stop reasons have stable names") {
  CHECK(to_string(StopReason::Budget) == "budget");
  CHECK(to_string(StopReason::VariantComplete) == "variant_complete");
  CHECK(to_string(StopReason::InitFailure) == "init_failure");
}

TEST_CASE("the full method fixes a planted deficiency within budget") {
  World w(planted());
  const auto user = UserPrompt::make("a red fox in the snow");
  const auto rec = optimize(w.gateway, user, deterministic());
  REQUIRE(rec.ok());
  REQUIRE(rec.final_score.has_value());
  CHECK(rec.iterations.front().scores.front() < 1.0);
  CHECK(*rec.final_score == 1.0);
  CHECK(rec.t2i_calls_used <= 8);
  CHECK(rec.t2i_calls_used == w.backend->render_calls());
  CHECK(validate_record(rec).empty());
  CHECK(rec.method == "VPIR");
  CHECK(rec.started_at == "1970-01-01T00:00:00Z");
}

TEST_CASE("step 0 runs one render and adopts the incumbent without a duel") {
  World w(planted());
  const auto rec = optimize(w.gateway, UserPrompt::make("a red fox"), deterministic());
  const auto& e0 = rec.iterations.front();
  CHECK(e0.iteration == 0);
  CHECK(e0.images.size() == 1);
  CHECK(e0.t2i_calls_used == 1);
  CHECK_FALSE(e0.incumbent_duel.has_value());
  CHECK_FALSE(e0.incumbent_before.has_value());
  CHECK(e0.incumbent_after == e0.images.front().prompt_ref);
  CHECK(e0.generators.front().name == "initial_rewrite");
}

TEST_CASE("later steps propose from both generators and duel the incumbent") {
  World w(planted());
  const auto rec = optimize(w.gateway, UserPrompt::make("a red fox"), deterministic());
  REQUIRE(rec.iterations.size() >= 2);
  const auto& e1 = rec.iterations[1];
  REQUIRE(e1.generators.size() == 2);
  CHECK(e1.generators[0].name == "targeted_edit");
  CHECK(e1.generators[1].name == "implicit_improve");
  CHECK(e1.images.size() == 2);
  CHECK(e1.tournament.size() == 1);
  REQUIRE(e1.incumbent_duel.has_value());
  CHECK(e1.incumbent_duel->votes.size() == 6);
  CHECK(e1.t2i_calls_used == 3);
}

TEST_CASE("R stops after the initial rewrite") {
  World w(planted());
  const auto rec = optimize(w.gateway, UserPrompt::make("a red fox"), deterministic(Variant::R));
  CHECK(rec.iterations.size() == 1);
  CHECK(rec.t2i_calls_used == 1);
  CHECK(rec.stop_reason == "variant_complete");
  CHECK(w.backend->calls(CallKind::Verify) == 0);
  CHECK(validate_record(rec).empty());
}

TEST_CASE("IR takes the last generation and never calls the judge") {
  World w(planted());
  const auto rec = optimize(w.gateway, UserPrompt::make("a red fox"), deterministic(Variant::IR));
  CHECK(w.backend->calls(CallKind::Judge) == 0);
  CHECK(w.backend->calls(CallKind::Verify) == 0);
  REQUIRE(rec.iterations.size() >= 2);
  const auto& e1 = rec.iterations[1];
  CHECK(e1.incumbent_after == e1.images.back().prompt_ref);
  CHECK(validate_record(rec).empty());
}

TEST_CASE("PIR never calls the verifier") {
  World w(planted());
  const auto rec = optimize(w.gateway, UserPrompt::make("a red fox"), deterministic(Variant::PIR));
  CHECK(w.backend->calls(CallKind::Verify) == 0);
  CHECK(w.backend->calls(CallKind::Judge) > 0);
  CHECK(validate_record(rec).empty());
}

TEST_CASE("two starved steps stop the run") {
  ScriptedWorldSpec spec;
  spec.behavior.editor = ScriptedBehavior::Editor::NoChange;
  spec.behavior.implicit = ScriptedBehavior::Implicit::NoChange;
  World w(spec);
  RunConfig c = deterministic();
  c.max_t2i_calls = 50;
  const auto rec = optimize(w.gateway, UserPrompt::make("a red fox"), c);
  CHECK(rec.stop_reason == "starvation");
  CHECK(rec.iterations.size() == 3);
  CHECK(rec.t2i_calls_used == 1);
  CHECK(rec.iterations.back().non_improving_steps == 2);
}

TEST_CASE("patience stops a run that stops improving") {
  ScriptedWorldSpec spec;
  spec.behavior.implicit = ScriptedBehavior::Implicit::Drift;
  spec.behavior.editor = ScriptedBehavior::Editor::Concat;
  spec.behavior.critic = ScriptedBehavior::Critic::Echo;
  World w(spec);
  RunConfig c = deterministic(Variant::PIR);
  c.max_t2i_calls = 50;
  c.patience = 2;
  const auto rec = optimize(w.gateway, UserPrompt::make("a red fox"), c);
  CHECK(rec.stop_reason == "patience");
  CHECK(rec.iterations.back().non_improving_steps == 2);
  CHECK(validate_record(rec).empty());
}

TEST_CASE("initialization failures produce a failed record") {
  ScriptedWorldSpec spec;
  spec.failing_kinds = {CallKind::DvqDecompose};
  World w(spec);
  const auto rec = optimize(w.gateway, UserPrompt::make("a red fox"), deterministic());
  CHECK_FALSE(rec.ok());
  CHECK(rec.stop_reason == "init_failure");
  CHECK_FALSE(rec.error.empty());
  CHECK_FALSE(rec.final.has_value());

  ScriptedWorldSpec broken;
  broken.render_fails = true;
  World w2(broken);
  const auto r2 = optimize(w2.gateway, UserPrompt::make("a red fox"), deterministic());
  CHECK_FALSE(r2.ok());
  CHECK(r2.t2i_calls_used == 1);
}

TEST_CASE("failed renders still spend budget") {
  // Renders after the first always fail; every attempt is charged.
  class FirstOnly final : public ImageModel {
   public:
    explicit FirstOnly(std::shared_ptr<ScriptedBackend> inner) : inner_(std::move(inner)) {}
    RenderedImage render(std::string_view prompt, std::uint64_t seed) override {
      if (calls++ > 0) throw TransportError("render outage");
      return inner_->render(prompt, seed);
    }
    std::atomic<int> calls{0};

   private:
    std::shared_ptr<ScriptedBackend> inner_;
  };
  auto backend = std::make_shared<ScriptedBackend>(planted());
  auto images = std::make_shared<FirstOnly>(backend);
  Gateway gw(endpoint(backend), endpoint(backend), {images, RetryPolicy{0, std::chrono::milliseconds(0)}});
  const auto rec = optimize(gw, UserPrompt::make("a red fox"), deterministic());
  REQUIRE(rec.ok());
  CHECK(rec.t2i_calls_used == images->calls.load());
  CHECK(rec.t2i_calls_used == 7);
  CHECK(rec.iterations[1].images.empty());
  CHECK(rec.iterations[1].t2i_calls_used == 3);
  CHECK(validate_record(rec).empty());
}

TEST_CASE("runs are deterministic and seeds matter") {
  ScriptedWorldSpec spec = planted();
  spec.noise = 0.3;
  spec.behavior.judge = ScriptedBehavior::Judge::Coin;
  const auto user = UserPrompt::make("a red fox on a green hill under the moon");
  World a(spec);
  World b(spec);
  const auto ra = to_json(optimize(a.gateway, user, deterministic())).dump();
  const auto rb = to_json(optimize(b.gateway, user, deterministic())).dump();
  CHECK(ra == rb);
  RunConfig other = deterministic();
  other.seed = 1234;
  World c(spec);
  CHECK(to_json(optimize(c.gateway, user, other)).dump() != ra);
}

TEST_CASE("budget holds for any configured maximum") {
  for (int budget = 1; budget <= 9; ++budget) {
    World w(planted());
    RunConfig c = deterministic();
    c.max_t2i_calls = budget;
    const auto rec = optimize(w.gateway, UserPrompt::make("a red fox"), c);
    CHECK(rec.t2i_calls_used <= budget);
    CHECK(w.backend->render_calls() <= budget);
    CHECK(validate_record(rec).empty());
  }
}
