#include <doctest.h>

#include <cstdlib>
#include <fstream>

#include "support.hpp"
#include "t2iopt/config.hpp"

using namespace t2iopt;

namespace {

nlohmann::json scripted_config() {
  return nlohmann::json::parse(R"({
    "backends": {
      "text_llm": {"endpoint": "scripted", "temperature": 0.3},
      "multimodal_llm": {"endpoint": "scripted", "temperature": 0.9},
      "text_to_image": {"endpoint": "scripted"}
    },
    "scripted_world": {"noise": 0.25, "seed": 2},
    "run": {"max_t2i_calls": 6, "judge_n": 2, "variant": "PIR", "patience": 2, "seed": 17},
    "workers": 3,
    "out_dir": "somewhere"
  })");
}

}  // namespace

TEST_CASE("run config defaults and validation") {
  RunConfig c;
  CHECK(c.max_t2i_calls == 8);
  CHECK(c.judge_n == 3);
  CHECK(c.verifier_patience == 3);
  CHECK_FALSE(c.patience.has_value());
  CHECK(c.variant == Variant::VPIR);
  CHECK_NOTHROW(c.check());
  c.max_t2i_calls = 0;
  CHECK_THROWS_AS(c.check(), std::invalid_argument);
  c = RunConfig{};
  c.judge_n = 0;
  CHECK_THROWS_AS(c.check(), std::invalid_argument);
  c = RunConfig{};
  c.patience = 0;
  CHECK_THROWS_AS(c.check(), std::invalid_argument);
  c = RunConfig{};
  c.temperatures.judge = -1;
  CHECK_THROWS_AS(c.check(), std::invalid_argument);
}

TEST_CASE("variant capabilities") {
  RunConfig c;
  c.variant = Variant::R;
  CHECK_FALSE(c.iterates());
  c.variant = Variant::IR;
  CHECK(c.iterates());
  CHECK_FALSE(c.uses_comparator());
  c.variant = Variant::PIR;
  CHECK(c.uses_comparator());
  CHECK_FALSE(c.uses_verifier());
  c.variant = Variant::VPIR;
  CHECK(c.uses_verifier());
  for (auto v : {Variant::R, Variant::IR, Variant::PIR, Variant::VPIR}) CHECK(variant_from_string(to_string(v)) == v);
  CHECK_THROWS_AS(variant_from_string("XYZ"), std::invalid_argument);
}

TEST_CASE("run config JSON round trip") {
  RunConfig c;
  c.patience = 4;
  c.seed = 99;
  c.variant = Variant::IR;
  c.temperatures.vqa = 0.1;
  const auto back = run_config_from_json(to_json(c));
  CHECK(to_json(back) == to_json(c));
}

TEST_CASE("app config parses backends and overrides temperatures") {
  const auto app = app_config_from_json(scripted_config());
  REQUIRE(app.text.has_value());
  CHECK(app.text->scripted());
  CHECK(app.run.max_t2i_calls == 6);
  CHECK(app.run.variant == Variant::PIR);
  CHECK(app.run.temperatures.text == 0.3);
  CHECK(app.run.temperatures.critic == 0.9);
  CHECK(app.workers == 3);
  CHECK(app.out_dir == "somewhere");
  CHECK(app.all_scripted());
  CHECK(app.run.deterministic_clock);
  CHECK(app.run.backends_snapshot["scripted_world"]["noise"] == 0.25);
  const auto snap = config_snapshot(app);
  CHECK(snap["run"]["seed"] == 17);
  CHECK(snap.contains("backends"));
}

TEST_CASE("config errors") {
  CHECK_THROWS_AS(app_config_from_json(nlohmann::json::array()), ConfigError);
  auto j = scripted_config();
  j["run"]["max_t2i_calls"] = 0;
  CHECK_THROWS_AS(app_config_from_json(j), ConfigError);
  j = scripted_config();
  j["backends"]["text_llm"] = {{"endpoint", "http://localhost:1"}, {"provider", "acme"}, {"model", "m"}};
  CHECK_THROWS_AS(app_config_from_json(j), ConfigError);
  j = scripted_config();
  j["backends"]["text_llm"] = {{"endpoint", "http://localhost:1"}};
  CHECK_THROWS_AS(app_config_from_json(j), ConfigError);
  j = scripted_config();
  j["workers"] = 0;
  CHECK_THROWS_AS(app_config_from_json(j), ConfigError);
  j = scripted_config();
  j["scripted_world"]["noise"] = 2;
  CHECK_THROWS_AS(app_config_from_json(j), ConfigError);
  CHECK_THROWS_AS(load_app_config("/definitely/not/here.json"), ConfigError);
}

TEST_CASE("missing roles are named") {
  auto j = scripted_config();
  j["backends"].erase("text_to_image");
  const auto app = app_config_from_json(j);
  CHECK_NOTHROW(require_roles(app, {Role::TextLLM, Role::MultimodalLLM}));
  try {
    require_roles(app, {Role::TextLLM, Role::TextToImage});
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("text_to_image") != std::string::npos);
  }
}

TEST_CASE("config files may carry comments") {
  const auto dir = t2iopt::testing::fresh_dir("config");
  std::ofstream(dir / "c.json") << "{\n  // scripted everything\n  \"backends\": {\"text_llm\": {}},\n  \"run\": "
                                   "{\"seed\": 3}\n}\n";
  const auto app = load_app_config(dir / "c.json");
  CHECK(app.run.seed == 3);
  REQUIRE(app.text.has_value());
  CHECK(app.text->scripted());
}

TEST_CASE("gateways share one scripted backend and need auth variables") {
  const auto built = make_gateway(app_config_from_json(scripted_config()));
  REQUIRE(built.scripted);
  CHECK(built.gateway.has(Role::TextLLM));
  CHECK(built.gateway.has(Role::TextToImage));
  CHECK(built.scripted->world().spec().noise == 0.25);

  auto j = scripted_config();
  j["backends"]["text_llm"] = {{"endpoint", "http://127.0.0.1:9/v1"},
                               {"model", "m"},
                               {"auth_env", "T2IOPT_TEST_KEY_THAT_IS_UNSET"}};
  const auto app = app_config_from_json(j);
  CHECK_FALSE(app.all_scripted());
  CHECK_FALSE(app.run.deterministic_clock);
  CHECK_THROWS_AS(make_gateway(app), ConfigError);
}
