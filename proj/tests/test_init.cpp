#include <doctest.h>

#include "support.hpp"
#include "t2iopt/init.hpp"

using namespace t2iopt;
using namespace t2iopt::testing;

TEST_CASE("questions come from decomposition then refinement") {
  World w({});
  Warnings warnings;
  const auto user = UserPrompt::make("a red fox under a tree");
  const auto dvqs = generate_dvqs(w.gateway, user, RunConfig{}, 1, warnings);
  REQUIRE(dvqs);
  CHECK(dvqs->user_prompt_id == user.id);
  REQUIRE(dvqs->size() == 3);
  CHECK(dvqs->questions[0].question == "Is there red in the image?");
  CHECK(dvqs->questions[2].question == "Is there tree in the image?");
  CHECK(dvqs->questions[2].index == 3);
  CHECK(w.backend->calls(CallKind::DvqDecompose) == 1);
  CHECK(w.backend->calls(CallKind::DvqRefine) == 1);
  CHECK(warnings.empty());
}

TEST_CASE("an unusable refinement falls back to the draft list") {
  ScriptedWorldSpec spec;
  spec.behavior.refine = ScriptedBehavior::Refine::Garbage;
  World w(spec);
  Warnings warnings;
  const auto dvqs = generate_dvqs(w.gateway, UserPrompt::make("a red fox"), RunConfig{}, 1, warnings);
  CHECK(dvqs->size() == 2);
  CHECK(warnings.size() == 1);
}

TEST_CASE("no questions at all is a parse error") {
  ScriptedWorldSpec spec;
  spec.replies["dvq_decompose:*"] = {"I refuse."};
  spec.replies["dvq_refine:*"] = {"Still no."};
  World w(spec);
  Warnings warnings;
  CHECK_THROWS_AS(generate_dvqs(w.gateway, UserPrompt::make("a red fox"), RunConfig{}, 1, warnings), ParseError);
}

TEST_CASE("large question sets raise a warning") {
  ScriptedWorldSpec spec;
  World w(spec);
  Warnings warnings;
  RunConfig c;
  c.dvq_warn_threshold = 2;
  generate_dvqs(w.gateway, UserPrompt::make("red fox tree moon"), c, 1, warnings);
  CHECK(warnings.size() == 1);
}

TEST_CASE("initial rewrite") {
  const auto user = UserPrompt::make("a red fox");
  SUBCASE("enriches the user prompt") {
    World w({});
    Warnings warnings;
    const auto p = initial_rewrite(w.gateway, user, RunConfig{}, 1, warnings);
    CHECK(p.text == "a red fox, highly detailed, professional lighting");
    CHECK(p.origin == Origin::InitialRewrite);
    CHECK(p.iteration == 0);
    CHECK_FALSE(p.parent.has_value());
  }
  SUBCASE("NO_CHANGE keeps the user text") {
    ScriptedWorldSpec spec;
    spec.behavior.rewrite = ScriptedBehavior::Rewrite::NoChange;
    World w(spec);
    Warnings warnings;
    CHECK(initial_rewrite(w.gateway, user, RunConfig{}, 1, warnings).text == "a red fox");
    CHECK(w.backend->calls(CallKind::Rewrite) == 1);
  }
  SUBCASE("a parse failure is retried once, then falls back") {
    ScriptedWorldSpec spec;
    spec.behavior.rewrite = ScriptedBehavior::Rewrite::Garbage;
    World w(spec);
    Warnings warnings;
    CHECK(initial_rewrite(w.gateway, user, RunConfig{}, 1, warnings).text == "a red fox");
    CHECK(w.backend->calls(CallKind::Rewrite) == 2);
    CHECK_FALSE(warnings.empty());
  }
  SUBCASE("the retry reply is used when it parses") {
    ScriptedWorldSpec spec;
    spec.replies["rewrite:*"] = {"no block", "<PROMPT> second try </PROMPT> <PROMPT> ignored </PROMPT>"};
    World w(spec);
    Warnings warnings;
    CHECK(initial_rewrite(w.gateway, user, RunConfig{}, 1, warnings).text == "second try");
  }
  SUBCASE("transport failure falls back") {
    ScriptedWorldSpec spec;
    spec.failing_kinds = {CallKind::Rewrite};
    World w(spec);
    Warnings warnings;
    CHECK(initial_rewrite(w.gateway, user, RunConfig{}, 1, warnings).text == "a red fox");
  }
}
