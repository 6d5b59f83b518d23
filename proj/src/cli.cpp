#include "t2iopt/cli.hpp"

#include <atomic>
#include <fstream>
#include <optional>
#include <thread>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "t2iopt/config.hpp"
#include "t2iopt/dataset.hpp"
#include "t2iopt/eval.hpp"
#include "t2iopt/loop.hpp"
#include "t2iopt/record.hpp"

namespace t2iopt {

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailed = 1;
constexpr int kExitConfig = 2;

struct OptimizeArgs {
  std::string config;
  std::string prompt;
  std::string dataset;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> max_t2i;
  std::optional<int> patience;
  std::optional<int> judge_n;
  std::string variant;
  std::string method = "optimizer";
  std::optional<int> workers;
};

struct EvalArgs {
  std::string config;
  std::string dataset;
  std::string out;
  std::string left;
  std::string right;
  std::vector<std::string> runs;
  int samples = 8;
  int trials = 10;
  std::uint64_t seed = 0;
};

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path);
  f << text;
  if (!f) throw std::runtime_error("failed to write " + path.string());
}

std::vector<RunRecord> load_runs(const fs::path& root) {
  std::vector<RunRecord> out;
  for (const auto& dir : list_runs(root)) out.push_back(load_run(dir));
  if (out.empty()) throw ConfigError("no run records found under " + root.string());
  return out;
}

AppConfig load_with_overrides(const OptimizeArgs& a) {
  AppConfig app = load_app_config(a.config);
  if (a.seed) app.run.seed = *a.seed;
  if (a.max_t2i) app.run.max_t2i_calls = *a.max_t2i;
  if (a.patience) app.run.patience = *a.patience;
  if (a.judge_n) app.run.judge_n = *a.judge_n;
  if (!a.variant.empty()) app.run.variant = variant_from_string(a.variant);
  if (a.workers) app.workers = *a.workers;
  if (!a.out.empty()) app.out_dir = a.out;
  try {
    app.run.check();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (app.workers < 1) throw ConfigError("workers must be >= 1");
  return app;
}

struct PromptResult {
  RunRecord record;
  fs::path dir;
  std::string error;
};

int command_optimize(const OptimizeArgs& a, std::ostream& out, std::ostream& err) {
  AppConfig app = load_with_overrides(a);
  require_roles(app, {Role::TextLLM, Role::MultimodalLLM, Role::TextToImage});
  std::optional<Baseline> baseline;
  if (a.method != "optimizer") baseline = baseline_from_string(a.method);
  if (a.prompt.empty() == a.dataset.empty()) throw ConfigError("give exactly one of --prompt or --dataset");
  const bool batch = !a.dataset.empty();
  std::vector<UserPrompt> prompts;
  try {
    prompts = batch ? load_dataset(a.dataset) : std::vector<UserPrompt>{UserPrompt::make(a.prompt)};
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  BuiltGateway built = make_gateway(app);

  std::vector<PromptResult> results(prompts.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < prompts.size(); i = next++) {
      PromptResult& r = results[i];
      try {
        r.record = baseline ? run_baseline(built.gateway, *baseline, prompts[i], app.run)
                            : optimize(built.gateway, prompts[i], app.run);
        r.dir = write_run(r.record, app.out_dir);
      } catch (const std::exception& e) {
        r.error = e.what();
      }
    }
  };
  const std::size_t n_workers = std::min<std::size_t>(static_cast<std::size_t>(app.workers), prompts.size());
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  int ok = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    const bool success = r.error.empty() && r.record.ok();
    ok += success ? 1 : 0;
    const std::string why = !r.error.empty() ? r.error : r.record.error;
    if (!batch) {
      if (!success) {
        err << "run failed for " << prompts[i].id << ": " << why << '\n';
        if (!r.dir.empty()) err << "record: " << r.dir.string() << '\n';
        return kExitFailed;
      }
      out << "best prompt: " << r.record.final->proposal.text << '\n';
      out << "dsg score: " << r.record.final_score.value_or(0.0) << '\n';
      out << "t2i calls: " << r.record.t2i_calls_used << '\n';
      out << "record: " << r.dir.string() << '\n';
      return kExitOk;
    }
    out << prompts[i].id << '\t' << (success ? "ok" : "failed") << '\t';
    if (success) {
      out << r.record.final->proposal.text << '\t' << r.dir.string();
    } else {
      out << why;
    }
    out << '\n';
  }
  out << "summary: " << results.size() << " prompts, " << ok << " succeeded, " << results.size() - ok << " failed\n";
  return kExitOk;
}

int command_filter(const EvalArgs& a, std::ostream& out) {
  AppConfig app = load_app_config(a.config);
  require_roles(app, {Role::TextLLM, Role::MultimodalLLM, Role::TextToImage});
  if (a.samples < 1) throw ConfigError("--samples must be >= 1");
  std::vector<UserPrompt> prompts;
  try {
    prompts = load_dataset(a.dataset);
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  BuiltGateway built = make_gateway(app);
  Warnings warnings;
  const auto outcomes = filter_dataset(built.gateway, prompts, app.run, a.samples, warnings);
  std::vector<UserPrompt> kept;
  for (const auto& o : outcomes) {
    if (o.kept) kept.push_back(o.prompt);
  }
  write_dataset_jsonl(a.out, kept);
  out << "kept " << kept.size() << " of " << prompts.size() << " prompts -> " << a.out << '\n';
  if (!warnings.empty()) out << "warnings: " << warnings.size() << '\n';
  return kExitOk;
}

int command_sxs(const EvalArgs& a, std::ostream& out) {
  AppConfig app = load_app_config(a.config);
  require_roles(app, {Role::MultimodalLLM});
  if (a.trials < 1) throw ConfigError("--trials must be >= 1");
  const auto left = outputs_from_records(load_runs(a.left));
  const auto right = outputs_from_records(load_runs(a.right));
  BuiltGateway built = make_gateway(app);
  const SxsReport report = auto_sxs(built.gateway, left, right, a.trials, app.run.temperatures.judge, a.seed);
  const fs::path dir = a.out;
  fs::create_directories(dir);
  write_text(dir / "sxs_report.json", to_json(report).dump(2) + "\n");
  write_text(dir / "sxs_histogram.csv", histogram_csv(report));
  write_text(dir / "sxs_samples.csv", samples_csv(report));
  out << "samples: " << report.samples.size() << " (win " << report.wins << ", tie " << report.ties << ", lose "
      << report.losses << ")\n";
  out << "mean advantage: " << report.mean_advantage << '\n';
  if (!report.skipped.empty()) {
    out << "skipped prompts:";
    for (const auto& id : report.skipped) out << ' ' << id;
    out << '\n';
  }
  out << "warnings: " << report.warnings.size() << '\n';
  out << "report: " << (dir / "sxs_report.json").string() << '\n';
  return kExitOk;
}

int command_report(const EvalArgs& a, std::ostream& out) {
  std::vector<RunRecord> records;
  for (const auto& spec : a.runs) {
    const fs::path p = spec;
    if (p.extension() == ".json" && fs::is_regular_file(p) && p.filename() != "record.json") {
      std::ifstream in(p);
      const auto manifest = nlohmann::json::parse(in);
      const auto& runs = manifest.contains("runs") ? manifest["runs"] : manifest;
      if (!runs.is_object()) throw ConfigError("manifest must map method labels to run directories");
      for (const auto& [label, dir] : runs.items()) {
        fs::path d = dir.get<std::string>();
        if (d.is_relative()) d = p.parent_path() / d;
        for (auto& r : load_runs(d)) {
          r.method = label;
          records.push_back(std::move(r));
        }
      }
    } else {
      for (auto& r : load_runs(p)) records.push_back(std::move(r));
    }
  }
  Warnings warnings;
  const auto rows = aggregate_report(records, warnings);
  const std::string csv = report_csv(rows);
  if (a.out.empty()) {
    out << csv;
  } else {
    write_text(a.out, csv);
    out << "report: " << a.out << '\n';
  }
  if (!warnings.empty()) out << "warnings: " << warnings.size() << '\n';
  return kExitOk;
}

int command_pairs(const EvalArgs& a, std::ostream& out) {
  const auto left = outputs_from_records(load_runs(a.left));
  const auto right = outputs_from_records(load_runs(a.right));
  Warnings warnings;
  const int n = export_pairs(left, right, a.out, a.seed, warnings);
  out << "exported " << n << " pairs -> " << a.out << '\n';
  if (!warnings.empty()) out << "warnings: " << warnings.size() << '\n';
  return kExitOk;
}

int command_replay(const std::string& dir, std::ostream& out, std::ostream& err) {
  const RunRecord original = load_run(dir);
  const RunRecord again = rerun_record(original);
  const auto a = to_json(original);
  const auto b = to_json(again);
  if (a == b) {
    out << "replay identical: " << dir << '\n';
    return kExitOk;
  }
  err << "replay differs from " << dir << '\n';
  for (const auto& op : nlohmann::json::diff(a, b)) err << "  " << op.dump() << '\n';
  return kExitFailed;
}

int command_validate(const std::vector<std::string>& dirs, std::ostream& out, std::ostream& err) {
  int bad = 0;
  for (const auto& d : dirs) {
    for (const auto& run : list_runs(d)) {
      const auto violations = validate_record(load_run(run));
      if (violations.empty()) {
        out << run.string() << ": ok\n";
        continue;
      }
      ++bad;
      for (const auto& v : violations) err << run.string() << ": " << v << '\n';
    }
  }
  return bad == 0 ? kExitOk : kExitFailed;
}

void setup_logging(bool verbose) {
  static const auto logger = [] {
    auto l = spdlog::stderr_color_mt("t2iopt");
    spdlog::set_default_logger(l);
    return l;
  }();
  logger->set_level(verbose ? spdlog::level::info : spdlog::level::warn);
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Iterative prompt optimizer for text-to-image models"};
  app.require_subcommand(1);
  bool verbose = false;
  bool quiet = false;
  app.add_flag("-v,--verbose", verbose, "Log progress");
  app.add_flag("-q,--quiet", quiet, "Suppress warnings on stderr");

  OptimizeArgs opt;
  auto* optimize_cmd = app.add_subcommand("optimize", "Optimize one prompt or a dataset");
  optimize_cmd->add_option("--config", opt.config, "Config file (JSON)")->required()->check(CLI::ExistingFile);
  optimize_cmd->add_option("--prompt", opt.prompt, "User prompt");
  optimize_cmd->add_option("--dataset", opt.dataset, "JSONL or text file of prompts")->check(CLI::ExistingFile);
  optimize_cmd->add_option("--out", opt.out, "Output directory for run records");
  optimize_cmd->add_option("--seed", opt.seed, "Run seed");
  optimize_cmd->add_option("--max-t2i", opt.max_t2i, "Text-to-image call budget");
  optimize_cmd->add_option("--patience", opt.patience, "Stop after this many non-improving steps");
  optimize_cmd->add_option("--judge-n", opt.judge_n, "Judge votes per position in a duel");
  optimize_cmd->add_option("--variant", opt.variant, "R, IR, PIR or VPIR")
      ->check(CLI::IsMember({"R", "IR", "PIR", "VPIR"}));
  optimize_cmd->add_option("--method", opt.method, "optimizer, original, rewrite, lm_bbo or pointwise_greedy")
      ->check(CLI::IsMember({"optimizer", "original", "rewrite", "lm_bbo", "pointwise_greedy"}));
  optimize_cmd->add_option("--workers", opt.workers, "Concurrent prompts in a batch");

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluation tools");
  eval_cmd->require_subcommand(1);
  auto* filter_cmd = eval_cmd->add_subcommand("filter", "Keep prompts that never reach a perfect score");
  filter_cmd->add_option("--config", ev.config)->required()->check(CLI::ExistingFile);
  filter_cmd->add_option("--dataset", ev.dataset)->required()->check(CLI::ExistingFile);
  filter_cmd->add_option("--samples", ev.samples, "Images per prompt");
  filter_cmd->add_option("--out", ev.out, "Filtered JSONL")->required();
  auto* sxs_cmd = eval_cmd->add_subcommand("sxs", "Judge two methods side by side");
  sxs_cmd->add_option("--config", ev.config)->required()->check(CLI::ExistingFile);
  sxs_cmd->add_option("--left", ev.left)->required();
  sxs_cmd->add_option("--right", ev.right)->required();
  sxs_cmd->add_option("--trials", ev.trials, "Judge calls per prompt");
  sxs_cmd->add_option("--seed", ev.seed);
  sxs_cmd->add_option("--out", ev.out, "Report directory")->required();
  auto* report_cmd = eval_cmd->add_subcommand("report", "Score table across methods");
  report_cmd->add_option("--runs", ev.runs, "Run directories or a manifest JSON")->required();
  report_cmd->add_option("--out", ev.out, "CSV path (stdout when omitted)");
  auto* pairs_cmd = eval_cmd->add_subcommand("pairs", "Export image pairs for human rating");
  pairs_cmd->add_option("--left", ev.left)->required();
  pairs_cmd->add_option("--right", ev.right)->required();
  pairs_cmd->add_option("--out", ev.out)->required();
  pairs_cmd->add_option("--seed", ev.seed);

  std::string replay_dir;
  auto* replay_cmd = app.add_subcommand("replay", "Rerun a record from its config snapshot and compare");
  replay_cmd->add_option("run", replay_dir, "Run directory")->required();

  std::vector<std::string> validate_dirs;
  auto* validate_cmd = app.add_subcommand("validate", "Check run records for invariant violations");
  validate_cmd->add_option("runs", validate_dirs, "Run directories or their parents")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }
  setup_logging(verbose);
  if (quiet) spdlog::set_level(spdlog::level::err);

  try {
    if (*optimize_cmd) return command_optimize(opt, out, err);
    if (*filter_cmd) return command_filter(ev, out);
    if (*sxs_cmd) return command_sxs(ev, out);
    if (*report_cmd) return command_report(ev, out);
    if (*pairs_cmd) return command_pairs(ev, out);
    if (*replay_cmd) return command_replay(replay_dir, out, err);
    if (*validate_cmd) return command_validate(validate_dirs, out, err);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailed;
  }
  return kExitConfig;
}

}  // namespace t2iopt
