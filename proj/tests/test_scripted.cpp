#include <doctest.h>

#include "support.hpp"

using namespace t2iopt;
using namespace t2iopt::testing;

TEST_CASE("tokens are lowercased, singularized and stopword-free") {
  ScriptedWorld w({});
  CHECK(w.tokens("Two Cats on the Boxes with Berries") ==
        std::vector<std::string>{"two", "cat", "box", "berry"});
  CHECK(w.stem("leaves") == "leaf");
  CHECK(w.stem("glass") == "glass");
  CHECK(w.stem("bus") == "bus");
}

TEST_CASE("vocabulary restricts tokens") {
  ScriptedWorldSpec spec;
  spec.vocabulary = {"Cats", "tree"};
  ScriptedWorld w(spec);
  CHECK(w.tokens("a cat under a big tree") == std::vector<std::string>{"cat", "tree"});
}

TEST_CASE("required mentions gate rendering") {
  ScriptedWorldSpec spec;
  spec.required_mentions = {{"fox", 2}};
  ScriptedWorld w(spec);
  CHECK(w.prompt_features("a red fox") == std::set<std::string>{"red"});
  CHECK(w.prompt_features("a red fox, the fox is clearly visible") == std::set<std::string>{"fox", "red"});
  CHECK(w.topic_features("a red fox") == std::set<std::string>{"fox", "red"});
}

TEST_CASE("render is a pure function of prompt and seed") {
  ScriptedWorldSpec spec;
  spec.noise = 0.5;
  spec.seed = 11;
  ScriptedWorld w(spec);
  const std::string prompt = "apple banana cherry grape lemon mango olive peach plum";
  for (std::uint64_t s = 0; s < 50; ++s) CHECK(w.render(prompt, s) == w.render(prompt, s));

  ScriptedWorld clean({});
  CHECK(clean.render(prompt, 3) == clean.prompt_features(prompt));
}

TEST_CASE("dropout rate tracks noise") {
  ScriptedWorldSpec spec;
  spec.noise = 0.25;
  ScriptedWorld w(spec);
  const std::string prompt = "apple banana cherry grape lemon mango olive peach plum kiwi";
  int kept = 0;
  int total = 0;
  for (std::uint64_t s = 0; s < 2000; ++s) {
    kept += static_cast<int>(w.render(prompt, s).size());
    total += 10;
  }
  CHECK(static_cast<double>(kept) / total == doctest::Approx(0.75).epsilon(0.03));
}

TEST_CASE("question predicates") {
  ScriptedWorldSpec spec;
  spec.dvq_predicates = {{"Is the sky stormy?", "clouds"}};
  ScriptedWorld w(spec);
  CHECK(w.predicate_for("Is the sky stormy?") == "cloud");
  CHECK(w.predicate_for("Is there apples in the image?") == "apple");
  CHECK(w.predicate_for("Is the bicycle red?") == "red");
  CHECK_FALSE(w.predicate_for("Is it?").has_value());
}

TEST_CASE("feature sets round trip through bytes") {
  const std::set<std::string> f = {"cat", "dog", "tree"};
  CHECK(ScriptedWorld::deserialize(ScriptedWorld::serialize(f)) == f);
  CHECK(ScriptedWorld::deserialize("").empty());
}

TEST_CASE("spec JSON round trip") {
  const auto j = nlohmann::json::parse(R"({
    "vocabulary": ["cat"], "required_mentions": {"cat": 2}, "noise": 0.25, "seed": 5,
    "dvq_predicates": {"Is it dark?": "night"},
    "behavior": {"judge": "always_a", "verifier": "never_converge", "vqa": "text"},
    "replies": {"rewrite:*": "<PROMPT> x </PROMPT>", "judge:k": ["a", "b"]},
    "fail": ["rationalize", "render"]
  })");
  const auto spec = scripted_world_from_json(j);
  CHECK(spec.behavior.judge == ScriptedBehavior::Judge::AlwaysA);
  CHECK(spec.behavior.verifier == ScriptedBehavior::Verifier::NeverConverge);
  CHECK(spec.behavior.vqa == ScriptedBehavior::Vqa::Text);
  CHECK(spec.replies.at("judge:k").size() == 2);
  CHECK(spec.failing_kinds.count(CallKind::Rationalize) == 1);
  CHECK(spec.render_fails);
  CHECK(to_json(scripted_world_from_json(to_json(spec))) == to_json(spec));

  CHECK_THROWS_AS(scripted_world_from_json({{"noise", 1.0}}), ConfigError);
  CHECK_THROWS_AS(scripted_world_from_json({{"behavior", {{"judge", "psychic"}}}}), ConfigError);
  CHECK_THROWS_AS(scripted_world_from_json({{"fail", {"teleport"}}}), ConfigError);
}

TEST_CASE("scripted vqa behaviours") {
  const auto img = feature_image("i", {"cat"});
  const Dvq yes{1, "Is there cat in the image?"};
  const Dvq no{2, "Is there dog in the image?"};
  {
    World w({});
    CHECK(w.gateway.vqa_yes_probability(img, yes, 0, 1) == 1.0);
    CHECK(w.gateway.vqa_yes_probability(img, no, 0, 1) == 0.0);
    CHECK(w.backend->calls(CallKind::Vqa) == 2);
  }
  {
    ScriptedWorldSpec spec;
    spec.behavior.vqa = ScriptedBehavior::Vqa::Text;
    World w(spec);
    CHECK(w.gateway.vqa_yes_probability(img, yes, 0, 1) == 1.0);
    CHECK(w.gateway.vqa_yes_probability(img, no, 0, 1) == 0.0);
  }
  {
    ScriptedWorldSpec spec;
    spec.behavior.vqa = ScriptedBehavior::Vqa::Garbage;
    World w(spec);
    CHECK(w.gateway.vqa_yes_probability(img, yes, 0, 1) == 0.5);
  }
}

TEST_CASE("failing kinds throw transport errors and are counted") {
  ScriptedWorldSpec spec;
  spec.failing_kinds = {CallKind::Judge};
  spec.render_fails = true;
  World w(spec, 2);
  const auto img = feature_image("i", {});
  CHECK_THROWS_AS(w.gateway.judge_choice(UserPrompt::make("x"), img, img, 0.7, 1), TransportError);
  CHECK(w.backend->calls(CallKind::Judge) == 3);
  const auto p = PromptProposal::make("u", "x", Origin::InitialRewrite, 0, std::nullopt);
  CHECK_THROWS_AS(w.gateway.generate_image(p, 0), TransportError);
  CHECK(w.backend->render_calls() == 3);
}

TEST_CASE("identical requests give byte-identical replies") {
  World w({});
  ModelRequest r;
  r.kind = CallKind::Verify;
  r.seed = 4;
  r.context = {{"key", "k"}, {"prompt", "a cat"}, {"constraints", {"Is there dog in the image?"}}};
  const auto first = w.gateway.generate_text(Role::TextLLM, r);
  CHECK(first == w.gateway.generate_text(Role::TextLLM, r));
  CHECK(first.find("<answer> a cat, dog </answer>") != std::string::npos);
}
