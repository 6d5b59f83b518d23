#include <doctest.h>

#include "support.hpp"
#include "t2iopt/cli.hpp"
#include "t2iopt/record.hpp"

using namespace t2iopt;
using namespace t2iopt::testing;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result cli(std::vector<std::string> args) {
  args.insert(args.begin(), "t2iopt");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::filesystem::path write(const std::filesystem::path& path, const std::string& text) {
  std::ofstream(path) << text;
  return path;
}

std::string scripted_config(const std::filesystem::path& dir) {
  return write(dir / "config.json", R"({
    // every role answered by the in-process world
    "backends": {"text_llm": {}, "multimodal_llm": {}, "text_to_image": {}},
    "scripted_world": {"required_mentions": {"fox": 2}},
    "workers": 2
  })")
      .string();
}

}  // namespace

TEST_CASE("usage errors exit with code 2") {
  CHECK(cli({}).code == 2);
  CHECK(cli({"optimize"}).code == 2);
  CHECK(cli({"optimize", "--config", "/no/such/file.json", "--prompt", "x"}).code == 2);
  CHECK(cli({"--help"}).code == 0);
}

TEST_CASE("a config missing a role is rejected") {
  const auto dir = fresh_dir("cli_roles");
  const auto config = write(dir / "c.json", R"({"backends": {"text_llm": {}, "multimodal_llm": {}}})");
  const auto r = cli({"optimize", "--config", config.string(), "--prompt", "a red fox"});
  CHECK(r.code == 2);
  CHECK(r.err.find("text_to_image") != std::string::npos);
}

TEST_CASE("optimizing a single prompt prints the result and writes a record") {
  const auto dir = fresh_dir("cli_single");
  const auto r = cli({"optimize", "--config", scripted_config(dir), "--prompt", "a red fox", "--out",
                      (dir / "runs").string(), "--max-t2i", "8"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("best prompt: ") != std::string::npos);
  CHECK(r.out.find("dsg score: 1\n") != std::string::npos);
  CHECK(r.out.find("t2i calls: ") != std::string::npos);
  CHECK(r.out.find("record: ") != std::string::npos);
  const auto runs = list_runs(dir / "runs");
  REQUIRE(runs.size() == 1);
  CHECK(validate_record(load_run(runs[0])).empty());

  const auto validated = cli({"validate", (dir / "runs").string()});
  CHECK(validated.code == 0);
  CHECK(validated.out.find(": ok") != std::string::npos);
  const auto replayed = cli({"replay", runs[0].string()});
  CHECK(replayed.code == 0);
  CHECK(replayed.out.find("replay identical") != std::string::npos);
}

TEST_CASE("prompt and dataset are mutually exclusive") {
  const auto dir = fresh_dir("cli_exclusive");
  const auto config = scripted_config(dir);
  CHECK(cli({"optimize", "--config", config}).code == 2);
  const auto data = write(dir / "d.txt", "a red fox\n");
  CHECK(cli({"optimize", "--config", config, "--prompt", "x", "--dataset", data.string()}).code == 2);
  CHECK(cli({"optimize", "--config", config, "--prompt", "x", "--variant", "XYZ"}).code == 2);
}

TEST_CASE("batches, baselines and the evaluation commands") {
  const auto dir = fresh_dir("cli_batch");
  const auto config = scripted_config(dir);
  const auto data = write(dir / "d.jsonl",
                          "{\"id\": \"fox\", \"prompt\": \"a red fox\"}\n"
                          "{\"id\": \"cat\", \"prompt\": \"a grey cat on a sofa\"}\n"
                          "{\"id\": \"owl\", \"prompt\": \"a fox and an owl\"}\n");
  const auto opt = dir / "opt";
  const auto base = dir / "base";
  const auto a = cli({"optimize", "--config", config, "--dataset", data.string(), "--out", opt.string()});
  REQUIRE(a.code == 0);
  CHECK(a.out.find("summary: 3 prompts, 3 succeeded, 0 failed") != std::string::npos);
  CHECK(a.out.find("fox\tok\t") != std::string::npos);
  const auto b = cli({"optimize", "--config", config, "--dataset", data.string(), "--out", base.string(),
                      "--method", "original"});
  REQUIRE(b.code == 0);
  CHECK(list_runs(base).size() == 3);
  CHECK(load_run(list_runs(base)[0]).method == "baseline:original");

  SUBCASE("report") {
    const auto r = cli({"eval", "report", "--runs", opt.string(), base.string()});
    REQUIRE(r.code == 0);
    CHECK(r.out.rfind("method,prompts,dsg_mean,dsg_std,mean_rank\n", 0) == 0);
    CHECK(r.out.find("VPIR,3,1.000000,0.000000,") != std::string::npos);
    CHECK(r.out.find("baseline:original,3,") != std::string::npos);

    const auto manifest = write(dir / "manifest.json", R"({"runs": {"ours": "opt", "orig": "base"}})");
    const auto m = cli({"eval", "report", "--runs", manifest.string(), "--out", (dir / "table.csv").string()});
    REQUIRE(m.code == 0);
    const auto table = read_file(dir / "table.csv");
    CHECK(table.find("ours,3,") != std::string::npos);
    CHECK(table.find("orig,3,") != std::string::npos);
  }
  SUBCASE("sxs") {
    const auto r = cli({"eval", "sxs", "--config", config, "--left", opt.string(), "--right", base.string(), "--out",
                        (dir / "sxs").string(), "--trials", "4"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("samples: 3") != std::string::npos);
    CHECK(std::filesystem::exists(dir / "sxs" / "sxs_report.json"));
    CHECK(read_file(dir / "sxs" / "sxs_histogram.csv").rfind("advantage,count\n-4,", 0) == 0);
    CHECK(read_file(dir / "sxs" / "sxs_samples.csv").find("fox,") != std::string::npos);
    CHECK(cli({"eval", "sxs", "--config", config, "--left", opt.string(), "--right", base.string(), "--out",
               (dir / "sxs").string(), "--trials", "0"})
              .code == 2);
  }
  SUBCASE("pairs") {
    const auto r = cli({"eval", "pairs", "--left", opt.string(), "--right", base.string(), "--out",
                        (dir / "pairs").string(), "--seed", "3"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("exported 3 pairs") != std::string::npos);
    CHECK(std::filesystem::exists(dir / "pairs" / "key.csv"));
  }
  SUBCASE("filter") {
    const auto out = dir / "hard.jsonl";
    const auto r = cli({"eval", "filter", "--config", config, "--dataset", data.string(), "--samples", "2", "--out",
                        out.string()});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("kept 2 of 3 prompts") != std::string::npos);
    const auto kept = read_file(out);
    CHECK(kept.find("\"fox\"") != std::string::npos);
    CHECK(kept.find("\"owl\"") != std::string::npos);
    CHECK(kept.find("\"cat\"") == std::string::npos);
  }
  SUBCASE("validate flags a tampered record") {
    const auto run = list_runs(opt)[0];
    auto j = nlohmann::json::parse(read_file(run / "record.json"));
    j["t2i_calls_used"] = 99;
    std::ofstream(run / "record.json") << j.dump();
    const auto r = cli({"validate", opt.string()});
    CHECK(r.code == 1);
    CHECK_FALSE(r.err.empty());
  }
  CHECK(cli({"eval", "report", "--runs", (dir / "empty").string()}).code == 2);
}
