#include <doctest.h>

#include "support.hpp"
#include "t2iopt/dataset.hpp"

using namespace t2iopt;
using namespace t2iopt::testing;

TEST_CASE("JSONL lines carry id, prompt and split") {
  const auto prompts = parse_dataset(
      "{\"id\": \"p1\", \"prompt\": \"a red fox\", \"split\": \"dev\"}\n"
      "\n"
      "{\"id\": 7, \"prompt\": \"two cats\"}\n");
  REQUIRE(prompts.size() == 2);
  CHECK(prompts[0].id == "p1");
  CHECK(prompts[0].text == "a red fox");
  CHECK(prompts[0].split == "dev");
  CHECK(prompts[1].id == "7");
  CHECK(prompts[1].split.empty());
}

TEST_CASE("plain text lines get ids derived from their text") {
  const auto prompts = parse_dataset("a red fox\n   \n  two cats  \na red fox\n");
  REQUIRE(prompts.size() == 3);
  CHECK(prompts[1].text == "two cats");
  CHECK_FALSE(prompts[0].id.empty());
  CHECK(prompts[0].id == prompts[2].id);
  CHECK(prompts[0].id != prompts[1].id);
}

TEST_CASE("malformed lines report their line number") {
  auto message = [](std::string_view text) {
    try {
      parse_dataset(text);
    } catch (const DomainError& e) {
      return std::string(e.what());
    }
    return std::string{};
  };
  CHECK(message("ok\n\n{\"prompt\": \n").find("dataset line 3") != std::string::npos);
  CHECK(message("{\"id\": \"x\"}\n").find("dataset line 1") != std::string::npos);
  CHECK(message("{\"prompt\": \"   \"}\n").find("dataset line 1") != std::string::npos);
}

TEST_CASE("datasets round trip through JSONL files") {
  const auto dir = fresh_dir("dataset");
  const std::vector<UserPrompt> prompts = {UserPrompt::make("a red fox", "a", "test"), UserPrompt::make("a \"quoted\" cat")};
  write_dataset_jsonl(dir / "d.jsonl", prompts);
  const auto back = load_dataset(dir / "d.jsonl");
  REQUIRE(back.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(back[i].id == prompts[i].id);
    CHECK(back[i].text == prompts[i].text);
    CHECK(back[i].split == prompts[i].split);
  }
  CHECK_THROWS_AS(load_dataset(dir / "missing.jsonl"), DomainError);
}
