#include "t2iopt/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "t2iopt/config.hpp"
#include "t2iopt/hash.hpp"
#include "t2iopt/init.hpp"
#include "t2iopt/loop.hpp"
#include "t2iopt/parallel.hpp"
#include "t2iopt/propose.hpp"
#include "t2iopt/score.hpp"

namespace t2iopt {

namespace fs = std::filesystem;

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

const MethodOutput* find_output(const std::vector<MethodOutput>& xs, const std::string& id) {
  for (const auto& x : xs) {
    if (x.user_prompt.id == id) return &x;
  }
  return nullptr;
}

}  // namespace

// ---------------------------------------------------------------------------

std::vector<FilterOutcome> filter_dataset(Gateway& gateway, const std::vector<UserPrompt>& prompts,
                                          const RunConfig& config, int samples, Warnings& warnings) {
  struct Task {
    std::optional<FilterOutcome> outcome;
    Warnings warnings;
  };
  auto tasks = parallel_map(prompts.size(), [&](std::size_t i) {
    Task task;
    const UserPrompt& p = prompts[i];
    const std::uint64_t seed = derive_seed(run_seed(config, p), "filter");
    DvqSetPtr dvqs;
    try {
      dvqs = generate_dvqs(gateway, p, config, derive_seed(seed, "dvq"), task.warnings);
    } catch (const std::exception& e) {
      warn(task.warnings, "dropping prompt " + p.id + ": question generation failed: " + e.what());
      return task;
    }
    const PromptProposal proposal = PromptProposal::make(p.id, p.text, Origin::Baseline, 0, std::nullopt, "original");
    FilterOutcome out{p, 0.0, false};
    for (int k = 0; k < samples; ++k) {
      double score = 0.0;
      try {
        const auto img = gateway.generate_image(proposal, derive_seed(seed, "t2i", static_cast<std::uint64_t>(k)));
        score = dsg_score(answer_dvqs(gateway, img, *dvqs, config, derive_seed(seed, "score", static_cast<std::uint64_t>(k)),
                                      task.warnings));
      } catch (const TransportError& e) {
        warn(task.warnings, "sample " + std::to_string(k) + " of prompt " + p.id + " failed: " + e.what());
      }
      out.max_score = std::max(out.max_score, score);
    }
    out.kept = out.max_score < 1.0;
    task.outcome = out;
    return task;
  });
  std::vector<FilterOutcome> out;
  for (auto& t : tasks) {
    append(warnings, t.warnings);
    if (t.outcome) out.push_back(std::move(*t.outcome));
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string_view to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::Win: return "win";
    case Verdict::Tie: return "tie";
    case Verdict::Lose: return "lose";
  }
  return "?";
}

Verdict verdict_for(int advantage) {
  if (advantage > 0) return Verdict::Win;
  if (advantage < 0) return Verdict::Lose;
  return Verdict::Tie;
}

int advantage_for(int left_votes, int right_votes, int trials) {
  return std::clamp(left_votes - right_votes, -trials, trials);
}

SxsSample score_sample(std::string user_prompt_id, const std::string& left_image, const std::string& right_image,
                       std::vector<JudgeVote> votes, int trials) {
  SxsSample s;
  s.user_prompt_id = std::move(user_prompt_id);
  s.image_left = left_image;
  s.image_right = right_image;
  s.trials = trials;
  for (std::size_t t = 0; t < votes.size(); ++t) {
    const bool left_first = t % 2 == 0;
    switch (votes[t].chosen) {
      case Choice::First: ++(left_first ? s.left_votes : s.right_votes); break;
      case Choice::Second: ++(left_first ? s.right_votes : s.left_votes); break;
      case Choice::Invalid: ++s.invalid; break;
    }
  }
  s.votes = std::move(votes);
  s.advantage = advantage_for(s.left_votes, s.right_votes, trials);
  s.verdict = verdict_for(s.advantage);
  return s;
}

void summarize(SxsReport& r) {
  r.wins = r.ties = r.losses = 0;
  r.histogram.assign(static_cast<std::size_t>(2 * r.trials + 1), 0);
  double sum = 0.0;
  for (const auto& s : r.samples) {
    switch (s.verdict) {
      case Verdict::Win: ++r.wins; break;
      case Verdict::Tie: ++r.ties; break;
      case Verdict::Lose: ++r.losses; break;
    }
    ++r.histogram[static_cast<std::size_t>(s.advantage + r.trials)];
    sum += s.advantage;
  }
  r.mean_advantage = r.samples.empty() ? 0.0 : sum / static_cast<double>(r.samples.size());
}

SxsReport auto_sxs(Gateway& gateway, const std::vector<MethodOutput>& left, const std::vector<MethodOutput>& right,
                   int trials, double temperature, std::uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  SxsReport report;
  report.trials = trials;
  std::vector<std::pair<const MethodOutput*, const MethodOutput*>> pairs;
  for (const auto& l : left) {
    const MethodOutput* r = find_output(right, l.user_prompt.id);
    if (!r || !l.image || !r->image) {
      report.skipped.push_back(l.user_prompt.id);
      warn(report.warnings, "prompt " + l.user_prompt.id + " lacks an image on one side; skipped");
      continue;
    }
    pairs.emplace_back(&l, r);
  }
  for (const auto& r : right) {
    if (!find_output(left, r.user_prompt.id)) {
      report.skipped.push_back(r.user_prompt.id);
      warn(report.warnings, "prompt " + r.user_prompt.id + " only present on the right; skipped");
    }
  }
  report.samples = parallel_map(pairs.size(), [&](std::size_t i) {
    const auto& [l, r] = pairs[i];
    const std::uint64_t sample_seed = derive_seed(seed, l->user_prompt.id);
    std::vector<JudgeVote> votes;
    for (int t = 0; t < trials; ++t) {
      const bool left_first = t % 2 == 0;
      const ImageArtifact& a = left_first ? *l->image : *r->image;
      const ImageArtifact& b = left_first ? *r->image : *l->image;
      try {
        votes.push_back(gateway.judge_choice(l->user_prompt, a, b, temperature,
                                             derive_seed(sample_seed, "sxs", static_cast<std::uint64_t>(t))));
      } catch (const TransportError& e) {
        votes.push_back({a.id, b.id, Choice::Invalid, std::string("transport failure: ") + e.what(), temperature});
      }
    }
    return score_sample(l->user_prompt.id, l->image->id, r->image->id, std::move(votes), trials);
  });
  summarize(report);
  return report;
}

nlohmann::json to_json(const SxsReport& r) {
  nlohmann::json samples = nlohmann::json::array();
  for (const auto& s : r.samples) {
    nlohmann::json votes = nlohmann::json::array();
    for (const auto& v : s.votes) {
      votes.push_back({{"first_image", v.first_image},
                       {"second_image", v.second_image},
                       {"chosen", std::string(to_string(v.chosen))},
                       {"raw_text", v.raw_text},
                       {"temperature", v.temperature}});
    }
    samples.push_back({{"user_prompt_id", s.user_prompt_id},
                       {"image_left", s.image_left},
                       {"image_right", s.image_right},
                       {"trials", s.trials},
                       {"left_votes", s.left_votes},
                       {"right_votes", s.right_votes},
                       {"invalid", s.invalid},
                       {"advantage", s.advantage},
                       {"verdict", std::string(to_string(s.verdict))},
                       {"votes", votes}});
  }
  return {{"trials", r.trials},   {"wins", r.wins},           {"ties", r.ties},
          {"losses", r.losses},   {"mean_advantage", r.mean_advantage},
          {"histogram", r.histogram}, {"skipped", r.skipped}, {"warnings", r.warnings},
          {"samples", samples}};
}

std::string histogram_csv(const SxsReport& r) {
  std::string out = "advantage,count\n";
  for (std::size_t i = 0; i < r.histogram.size(); ++i) {
    out += std::to_string(static_cast<int>(i) - r.trials) + "," + std::to_string(r.histogram[i]) + "\n";
  }
  return out;
}

std::string samples_csv(const SxsReport& r) {
  std::string out = "user_prompt_id,left_votes,right_votes,invalid,advantage,verdict\n";
  for (const auto& s : r.samples) {
    out += csv_field(s.user_prompt_id) + "," + std::to_string(s.left_votes) + "," + std::to_string(s.right_votes) +
           "," + std::to_string(s.invalid) + "," + std::to_string(s.advantage) + "," +
           std::string(to_string(s.verdict)) + "\n";
  }
  return out;
}

std::vector<MethodOutput> outputs_from_records(const std::vector<RunRecord>& records) {
  std::vector<MethodOutput> out;
  for (const auto& r : records) {
    MethodOutput m{r.user_prompt, std::nullopt};
    if (r.ok() && r.final) m.image = r.final->image;
    out.push_back(std::move(m));
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string_view to_string(Baseline baseline) {
  switch (baseline) {
    case Baseline::Original: return "original";
    case Baseline::Rewrite: return "rewrite";
    case Baseline::LmBbo: return "lm_bbo";
    case Baseline::PointwiseGreedy: return "pointwise_greedy";
  }
  return "?";
}

Baseline baseline_from_string(std::string_view text) {
  for (auto b : {Baseline::Original, Baseline::Rewrite, Baseline::LmBbo, Baseline::PointwiseGreedy}) {
    if (to_string(b) == text) return b;
  }
  throw std::invalid_argument("unknown baseline: " + std::string(text));
}

namespace {

/// Shared bookkeeping for the single-trajectory baselines.
class BaselineRun {
 public:
  BaselineRun(Gateway& gateway, Baseline baseline, const UserPrompt& user, const RunConfig& config)
      : gateway_(gateway), name_(to_string(baseline)), user_(user), config_(config) {
    rec.method = "baseline:" + name_;
    rec.user_prompt = user;
    rec.config = record_config(config);
    rec.started_at = timestamp_now(config.deterministic_clock);
    seed_ = derive_seed(run_seed(config, user), name_);
  }

  std::uint64_t seed() const { return seed_; }
  bool affordable() const { return calls_ + 1 <= config_.max_t2i_calls; }

  PromptProposal proposal(std::string text, int iteration, std::optional<std::string> parent) const {
    return PromptProposal::make(user_.id, std::move(text), Origin::Baseline, iteration, std::move(parent), name_);
  }

  /// Renders and scores `p` as a new step. Returns nullopt on render failure.
  std::optional<Candidate> step(IterationEntry entry, const PromptProposal& p, const DvqSet& dvqs) {
    entry.proposals.push_back(p);
    entry.incumbent_before = current_ ? std::optional<std::string>(current_->proposal.id) : std::nullopt;
    const auto call = static_cast<std::uint64_t>(calls_++);
    std::optional<Candidate> c;
    try {
      ImageArtifact img = gateway_.generate_image(p, derive_seed(seed_, "t2i", call));
      ResponseVector rv = answer_dvqs(gateway_, img, dvqs, config_, derive_seed(seed_, "score", call), entry.warnings);
      c = Candidate{p, std::move(img), std::move(rv)};
      entry.images.push_back(c->image);
      entry.responses.push_back(c->responses);
      entry.scores.push_back(dsg_score(c->responses));
    } catch (const TransportError& e) {
      warn(entry.warnings, "image generation failed for proposal " + p.id + ": " + e.what());
    }
    pending_ = std::move(entry);
    return c;
  }

  /// Closes the pending step with `current` as the returned candidate.
  void commit(const std::optional<Candidate>& current) {
    current_ = current;
    pending_.incumbent_after = current_ ? std::optional<std::string>(current_->proposal.id) : std::nullopt;
    pending_.t2i_calls_used = calls_;
    rec.iterations.push_back(std::move(pending_));
    pending_ = {};
  }

  void record_only(IterationEntry entry) {
    entry.incumbent_before = entry.incumbent_after =
        current_ ? std::optional<std::string>(current_->proposal.id) : std::nullopt;
    entry.t2i_calls_used = calls_;
    rec.iterations.push_back(std::move(entry));
  }

  const std::optional<Candidate>& current() const { return current_; }

  RunRecord finish(StopReason reason) {
    rec.stop_reason = std::string(to_string(reason));
    rec.t2i_calls_used = calls_;
    if (current_) {
      rec.final = current_;
      rec.final_score = dsg_score(current_->responses);
    } else if (rec.ok()) {
      rec.status = "failed";
      rec.error = "no image was generated";
    }
    rec.finished_at = timestamp_now(config_.deterministic_clock);
    return std::move(rec);
  }

  RunRecord fail(std::string error) {
    rec.status = "failed";
    rec.error = std::move(error);
    return finish(StopReason::InitFailure);
  }

  RunRecord rec;

 private:
  Gateway& gateway_;
  std::string name_;
  const UserPrompt& user_;
  const RunConfig& config_;
  std::uint64_t seed_ = 0;
  int calls_ = 0;
  std::optional<Candidate> current_;
  IterationEntry pending_;
};

}  // namespace

RunRecord run_baseline(Gateway& gateway, Baseline baseline, const UserPrompt& user_prompt, const RunConfig& config,
                       DvqSetPtr dvqs) {
  config.check();
  BaselineRun run(gateway, baseline, user_prompt, config);
  IterationEntry e0;
  if (!dvqs) {
    try {
      dvqs = generate_dvqs(gateway, user_prompt, config, derive_seed(run.seed(), "dvq"), e0.warnings);
    } catch (const std::exception& e) {
      run.record_only(std::move(e0));
      return run.fail(std::string("question generation failed: ") + e.what());
    }
  }
  run.rec.dvqs = *dvqs;

  const std::string name(to_string(baseline));
  std::string first_text = user_prompt.text;
  if (baseline == Baseline::Rewrite) {
    first_text = initial_rewrite(gateway, user_prompt, config, derive_seed(run.seed(), "rewrite"), e0.warnings).text;
  }
  const PromptProposal p0 = run.proposal(first_text, 0, std::nullopt);
  e0.generators.push_back({name, "proposed", p0.id});
  auto c0 = run.step(std::move(e0), p0, *dvqs);
  run.commit(c0);
  if (!c0) return run.finish(StopReason::InitFailure);
  if (baseline == Baseline::Original || baseline == Baseline::Rewrite) return run.finish(StopReason::VariantComplete);

  for (int t = 1;; ++t) {
    if (!run.affordable()) return run.finish(StopReason::Budget);
    const Candidate base = *run.current();
    IterationEntry entry;
    entry.iteration = t;
    const std::uint64_t it_seed = derive_seed(run.seed(), "iteration", static_cast<std::uint64_t>(t));
    std::optional<PromptProposal> next;
    if (baseline == Baseline::LmBbo) {
      // Conditions on the latest generation, not the best one.
      next = implicit_improve(gateway, user_prompt, base.proposal, base.image, t, config.temperatures.critic,
                              derive_seed(it_seed, "implicit"), entry.warnings, Origin::Baseline, name);
      if (!next) {
        entry.generators.push_back({name, "absent", std::nullopt});
        run.record_only(std::move(entry));
        return run.finish(StopReason::NoChange);
      }
    } else {
      std::optional<std::string> text;
      try {
        text = rewrite_prompt(gateway, user_prompt, base.proposal.text, config.temperatures.text,
                              derive_seed(it_seed, "rewrite"), t - 1, entry.warnings);
      } catch (const TransportError& e) {
        warn(entry.warnings, std::string("rewrite failed: ") + e.what());
      }
      if (!text) {
        entry.generators.push_back({name, "absent", std::nullopt});
        run.record_only(std::move(entry));
        return run.finish(StopReason::NoProposal);
      }
      next = run.proposal(*text, t, base.proposal.id);
    }
    entry.generators.push_back({name, "proposed", next->id});
    auto c = run.step(std::move(entry), *next, *dvqs);
    if (baseline == Baseline::LmBbo) {
      run.commit(c ? c : run.current());
    } else {
      const bool better = c && dsg_score(c->responses) > dsg_score(base.responses);
      run.commit(better ? c : run.current());
    }
  }
}

// ---------------------------------------------------------------------------

std::vector<ReportRow> aggregate_report(const std::vector<RunRecord>& records, Warnings& warnings) {
  std::vector<std::string> methods;
  std::map<std::string, std::map<std::string, double>> by_prompt;  // prompt -> method -> score
  std::map<std::string, std::vector<double>> scores;
  for (const auto& r : records) {
    if (!r.ok() || !r.final || r.final->responses.values.empty()) {
      warn(warnings, "skipping failed run " + r.method + " / " + r.user_prompt.id);
      continue;
    }
    if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) methods.push_back(r.method);
    const double s = r.final_score ? *r.final_score : dsg_score(r.final->responses);
    if (by_prompt[r.user_prompt.id].count(r.method)) {
      warn(warnings, "duplicate run for " + r.method + " / " + r.user_prompt.id + "; keeping the first");
      continue;
    }
    by_prompt[r.user_prompt.id][r.method] = s;
    scores[r.method].push_back(s);
  }
  std::map<std::string, std::vector<double>> ranks;
  for (const auto& [prompt, per_method] : by_prompt) {
    for (const auto& [m, s] : per_method) {
      int higher = 0;
      int equal = 0;
      for (const auto& [m2, s2] : per_method) {
        if (s2 > s) ++higher;
        if (s2 == s) ++equal;
      }
      // Tied entries share the mean of the positions they occupy.
      ranks[m].push_back(higher + (equal + 1) / 2.0);
    }
  }
  std::vector<ReportRow> rows;
  for (const auto& m : methods) {
    const auto& xs = scores[m];
    ReportRow row;
    row.method = m;
    row.prompts = static_cast<int>(xs.size());
    double sum = 0.0;
    for (double x : xs) sum += x;
    row.mean = sum / static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - row.mean) * (x - row.mean);
    row.stddev = std::sqrt(var / static_cast<double>(xs.size()));
    double rank_sum = 0.0;
    for (double r : ranks[m]) rank_sum += r;
    row.mean_rank = rank_sum / static_cast<double>(ranks[m].size());
    rows.push_back(row);
  }
  return rows;
}

std::string report_csv(const std::vector<ReportRow>& rows) {
  std::string out = "method,prompts,dsg_mean,dsg_std,mean_rank\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{:.6f},{:.6f},{:.6f}\n", csv_field(r.method), r.prompts, r.mean, r.stddev, r.mean_rank);
  }
  return out;
}

int export_pairs(const std::vector<MethodOutput>& left, const std::vector<MethodOutput>& right, const fs::path& out_dir,
                 std::uint64_t seed, Warnings& warnings) {
  fs::create_directories(out_dir / "images");
  std::ofstream pairs(out_dir / "pairs.csv");
  std::ofstream key(out_dir / "key.csv");
  pairs << "pair_id,user_prompt_id,prompt,image_1,image_2\n";
  key << "pair_id,image_1_side,image_2_side\n";
  int count = 0;
  for (const auto& l : left) {
    const MethodOutput* r = find_output(right, l.user_prompt.id);
    if (!r || !l.image || !r->image) {
      warn(warnings, "prompt " + l.user_prompt.id + " lacks an image on one side; not exported");
      continue;
    }
    const bool swap = SplitMix64(derive_seed(seed, l.user_prompt.id)).coin();
    const ImageArtifact& one = swap ? *r->image : *l.image;
    const ImageArtifact& two = swap ? *l.image : *r->image;
    const std::string pair_id = fmt::format("pair{:04d}", count);
    auto dump = [&](const ImageArtifact& img, int slot) {
      const std::string ext = img.format == ImageFormat::Png ? ".png" : ".features";
      const std::string file = "images/" + pair_id + "_" + std::to_string(slot) + ext;
      std::ofstream f(out_dir / file, std::ios::binary);
      f.write(img.bytes.data(), static_cast<std::streamsize>(img.bytes.size()));
      return file;
    };
    const std::string f1 = dump(one, 1);
    const std::string f2 = dump(two, 2);
    pairs << pair_id << ',' << csv_field(l.user_prompt.id) << ',' << csv_field(l.user_prompt.text) << ',' << f1 << ','
          << f2 << '\n';
    key << pair_id << ',' << (swap ? "right,left" : "left,right") << '\n';
    ++count;
  }
  return count;
}

RunRecord rerun_record(const RunRecord& record) {
  AppConfig app = app_config_from_json(record.config);
  BuiltGateway built = make_gateway(app);
  constexpr std::string_view kPrefix = "baseline:";
  if (record.method.rfind(kPrefix, 0) == 0) {
    const auto b = baseline_from_string(std::string_view(record.method).substr(kPrefix.size()));
    return run_baseline(built.gateway, b, record.user_prompt, app.run);
  }
  return optimize(built.gateway, record.user_prompt, app.run);
}

}  // namespace t2iopt
