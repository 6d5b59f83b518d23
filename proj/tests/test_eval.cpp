#include <doctest.h>

#include "support.hpp"
#include "t2iopt/config.hpp"
#include "t2iopt/eval.hpp"
#include "t2iopt/loop.hpp"

using namespace t2iopt;
using namespace t2iopt::testing;

namespace {

JudgeVote vote(Choice c) {
  JudgeVote v;
  v.chosen = c;
  return v;
}

MethodOutput output(const std::string& id, const std::string& text, std::optional<std::set<std::string>> features) {
  MethodOutput m{UserPrompt::make(text, id), std::nullopt};
  if (features) m.image = feature_image("img-" + id + "-" + std::to_string(features->size()), *features);
  return m;
}

RunRecord scored(const std::string& method, const std::string& prompt, double score) {
  RunRecord r;
  r.method = method;
  r.user_prompt = UserPrompt::make("text " + prompt, prompt);
  Candidate c;
  c.proposal = PromptProposal::make(prompt, "x", Origin::InitialRewrite, 0, std::nullopt);
  c.responses = {"i", {score}};
  r.final = c;
  r.final_score = score;
  return r;
}

RunConfig deterministic() {
  RunConfig c;
  c.deterministic_clock = true;
  return c;
}

}  // namespace

TEST_CASE("verdicts follow the sign of the advantage") {
  CHECK(verdict_for(3) == Verdict::Win);
  CHECK(verdict_for(0) == Verdict::Tie);
  CHECK(verdict_for(-1) == Verdict::Lose);
  CHECK(advantage_for(12, 0, 10) == 10);
  CHECK(advantage_for(0, 12, 10) == -10);
  CHECK(advantage_for(6, 4, 10) == 2);
}

TEST_CASE("sample scoring alternates which side is Image A") {
  // Trials 0 and 2 show left as A; trials 1 and 3 show right as A.
  const auto s = score_sample("p", "L", "R",
                              {vote(Choice::First), vote(Choice::First), vote(Choice::Second), vote(Choice::Invalid)},
                              4);
  CHECK(s.left_votes == 1);
  CHECK(s.right_votes == 2);
  CHECK(s.invalid == 1);
  CHECK(s.advantage == -1);
  CHECK(s.verdict == Verdict::Lose);
}

TEST_CASE("auto_sxs against an overlap judge") {
  World w({});
  const std::vector<MethodOutput> left = {output("a", "cat dog", std::set<std::string>{"cat", "dog"}),
                                          output("b", "sun moon", std::set<std::string>{"sun"}),
                                          output("c", "tree", std::nullopt)};
  const std::vector<MethodOutput> right = {output("a", "cat dog", std::set<std::string>{"cat"}),
                                           output("b", "sun moon", std::set<std::string>{"sun", "moon"}),
                                           output("c", "tree", std::set<std::string>{"tree"}),
                                           output("d", "lamp", std::set<std::string>{"lamp"})};
  const auto report = auto_sxs(w.gateway, left, right, 10, 0.7, 1);
  REQUIRE(report.samples.size() == 2);
  CHECK(report.samples[0].advantage == 10);
  CHECK(report.samples[1].advantage == -10);
  CHECK(report.wins == 1);
  CHECK(report.losses == 1);
  CHECK(report.ties == 0);
  CHECK(report.mean_advantage == 0.0);
  CHECK(report.skipped == std::vector<std::string>{"c", "d"});
  CHECK(report.histogram.size() == 21);
  CHECK(report.histogram[20] == 1);
  CHECK(report.histogram[0] == 1);
  CHECK(w.backend->calls(CallKind::Judge) == 20);

  const auto csv = histogram_csv(report);
  CHECK(csv.rfind("advantage,count\n-10,1\n-9,0\n", 0) == 0);
  CHECK(csv.find("\n10,1\n") != std::string::npos);
  CHECK(samples_csv(report) ==
        "user_prompt_id,left_votes,right_votes,invalid,advantage,verdict\na,10,0,0,10,win\nb,0,10,0,-10,lose\n");
  const auto j = to_json(report);
  CHECK(j["samples"][0]["votes"].size() == 10);
  CHECK(j["wins"] == 1);
}

TEST_CASE("an always-A judge yields ties in side-by-side") {
  ScriptedWorldSpec spec;
  spec.behavior.judge = ScriptedBehavior::Judge::AlwaysA;
  World w(spec);
  const std::vector<MethodOutput> left = {output("a", "cat", std::set<std::string>{"cat"})};
  const std::vector<MethodOutput> right = {output("a", "cat", std::set<std::string>{})};
  const auto report = auto_sxs(w.gateway, left, right, 10, 0.7, 1);
  CHECK(report.samples[0].advantage == 0);
  CHECK(report.ties == 1);
  CHECK_THROWS_AS(auto_sxs(w.gateway, left, right, 0, 0.7, 1), std::invalid_argument);
}

TEST_CASE("filter keeps prompts no sample renders perfectly") {
  ScriptedWorldSpec spec;
  spec.required_mentions = {{"fox", 2}};
  spec.replies["dvq_decompose:broken"] = {"nothing useful"};
  spec.replies["dvq_refine:broken"] = {"nothing useful"};
  World w(spec);
  const std::vector<UserPrompt> prompts = {UserPrompt::make("a red fox", "hard"), UserPrompt::make("a red cat", "easy"),
                                           UserPrompt::make("a blue fox", "broken")};
  Warnings warnings;
  const auto out = filter_dataset(w.gateway, prompts, deterministic(), 3, warnings);
  REQUIRE(out.size() == 2);
  CHECK(out[0].prompt.id == "hard");
  CHECK(out[0].kept);
  CHECK(out[0].max_score == 0.5);
  CHECK(out[1].prompt.id == "easy");
  CHECK_FALSE(out[1].kept);
  CHECK(w.backend->render_calls() == 6);
  CHECK(warnings.size() == 1);
}

TEST_CASE("baselines") {
  ScriptedWorldSpec spec;
  spec.required_mentions = {{"fox", 2}};
  const auto user = UserPrompt::make("a red fox");

  SUBCASE("original renders the user prompt once") {
    World w(spec);
    const auto r = run_baseline(w.gateway, Baseline::Original, user, deterministic());
    CHECK(r.method == "baseline:original");
    CHECK(r.t2i_calls_used == 1);
    CHECK(r.final->proposal.text == "a red fox");
    CHECK(r.final->proposal.origin == Origin::Baseline);
    CHECK(r.final->proposal.baseline_name == "original");
    CHECK(*r.final_score == 0.5);
    CHECK(validate_record(r).empty());
  }
  SUBCASE("rewrite renders the rewritten prompt once") {
    World w(spec);
    const auto r = run_baseline(w.gateway, Baseline::Rewrite, user, deterministic());
    CHECK(r.t2i_calls_used == 1);
    CHECK(r.final->proposal.text == "a red fox, highly detailed, professional lighting");
    CHECK(validate_record(r).empty());
  }
  SUBCASE("lm_bbo iterates on its last generation until NO_CHANGE") {
    World w(spec);
    const auto r = run_baseline(w.gateway, Baseline::LmBbo, user, deterministic());
    CHECK(r.t2i_calls_used == 2);
    CHECK(r.final->proposal.text == "a red fox, featuring fox");
    CHECK(*r.final_score == 1.0);
    CHECK(r.stop_reason == "no_change");
    CHECK(validate_record(r).empty());
  }
  SUBCASE("pointwise greedy spends the budget and keeps the best score") {
    World w(spec);
    RunConfig c = deterministic();
    c.max_t2i_calls = 5;
    const auto r = run_baseline(w.gateway, Baseline::PointwiseGreedy, user, c);
    CHECK(r.t2i_calls_used == 5);
    CHECK(r.stop_reason == "budget");
    CHECK(r.final->proposal.text == "a red fox");
    CHECK(validate_record(r).empty());
  }
  SUBCASE("baselines never exceed the budget") {
    for (auto b : {Baseline::Original, Baseline::Rewrite, Baseline::LmBbo, Baseline::PointwiseGreedy}) {
      for (int budget : {1, 2, 8}) {
        ScriptedWorldSpec drift = spec;
        drift.behavior.implicit = ScriptedBehavior::Implicit::Generic;
        World w(drift);
        RunConfig c = deterministic();
        c.max_t2i_calls = budget;
        const auto r = run_baseline(w.gateway, b, user, c);
        CHECK(r.t2i_calls_used <= budget);
        CHECK(w.backend->render_calls() <= budget);
      }
    }
  }
  CHECK(baseline_from_string("lm_bbo") == Baseline::LmBbo);
  CHECK_THROWS_AS(baseline_from_string("magic"), std::invalid_argument);
}

TEST_CASE("report aggregates means, population std and shared ranks") {
  const std::vector<RunRecord> records = {scored("A", "p1", 1.0), scored("B", "p1", 0.5), scored("C", "p1", 0.5),
                                          scored("A", "p2", 0.5), scored("B", "p2", 1.0), scored("C", "p2", 0.0)};
  Warnings warnings;
  auto failed = scored("C", "p3", 1.0);
  failed.status = "failed";
  auto with_failed = records;
  with_failed.push_back(failed);
  const auto rows = aggregate_report(with_failed, warnings);
  REQUIRE(rows.size() == 3);
  CHECK(warnings.size() == 1);
  CHECK(rows[0].method == "A");
  CHECK(rows[0].prompts == 2);
  CHECK(rows[0].mean == 0.75);
  CHECK(rows[0].stddev == 0.25);
  // p1: A=1, B and C tie for 2nd and 3rd -> 2.5. p2: B=1, A=2, C=3.
  CHECK(rows[0].mean_rank == 1.5);
  CHECK(rows[1].mean_rank == 1.75);
  CHECK(rows[2].mean_rank == 2.75);
  CHECK(report_csv(rows).rfind("method,prompts,dsg_mean,dsg_std,mean_rank\nA,2,0.750000,0.250000,1.500000\n", 0) == 0);
}

TEST_CASE("pairs are exported in a seeded order with an answer key") {
  const auto dir = fresh_dir("pairs");
  const std::vector<MethodOutput> left = {output("a", "cat", std::set<std::string>{"cat"}),
                                          output("b", "dog", std::set<std::string>{"dog"})};
  const std::vector<MethodOutput> right = {output("a", "cat", std::set<std::string>{}),
                                           output("b", "dog", std::nullopt)};
  Warnings warnings;
  CHECK(export_pairs(left, right, dir, 7, warnings) == 1);
  CHECK(warnings.size() == 1);
  const auto pairs = read_file(dir / "pairs.csv");
  const auto key = read_file(dir / "key.csv");
  CHECK(pairs.find("pair0000,a,cat,images/pair0000_1.features,images/pair0000_2.features") != std::string::npos);
  CHECK((key.find("pair0000,left,right") != std::string::npos || key.find("pair0000,right,left") != std::string::npos));
  const bool swapped = key.find("right,left") != std::string::npos;
  CHECK(read_file(dir / "images" / "pair0000_1.features") == (swapped ? "" : "cat"));
}

TEST_CASE("records rerun from their own config snapshot") {
  const auto app = app_config_from_json(nlohmann::json::parse(R"({
    "backends": {"text_llm": {}, "multimodal_llm": {}, "text_to_image": {}},
    "scripted_world": {"required_mentions": {"fox": 2}, "noise": 0.2},
    "run": {"seed": 5}
  })"));
  auto built = make_gateway(app);
  const auto user = UserPrompt::make("a red fox near a river");
  const auto first = optimize(built.gateway, user, app.run);
  CHECK(to_json(rerun_record(first)).dump() == to_json(first).dump());
  const auto base = run_baseline(built.gateway, Baseline::LmBbo, user, app.run);
  CHECK(to_json(rerun_record(base)).dump() == to_json(base).dump());
}
