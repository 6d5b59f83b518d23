#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "t2iopt/domain.hpp"
#include "t2iopt/gateway.hpp"
#include "t2iopt/record.hpp"
#include "t2iopt/run_config.hpp"
#include "t2iopt/warnings.hpp"

namespace t2iopt {

// ---------------------------------------------------------------------------
// Dataset filtering

struct FilterOutcome {
  UserPrompt prompt;
  double max_score = 0.0;
  bool kept = false;
};

/// Renders each prompt `samples` times and keeps it iff no sample reaches a
/// perfect score. A failed render scores 0; a prompt whose questions cannot be
/// generated is dropped with a warning.
std::vector<FilterOutcome> filter_dataset(Gateway& gateway, const std::vector<UserPrompt>& prompts,
                                          const RunConfig& config, int samples, Warnings& warnings);

// ---------------------------------------------------------------------------
// Side-by-side

enum class Verdict { Win, Tie, Lose };

std::string_view to_string(Verdict verdict);
Verdict verdict_for(int advantage);
/// (left - right) clamped to [-trials, trials].
int advantage_for(int left_votes, int right_votes, int trials);

struct MethodOutput {
  UserPrompt user_prompt;
  std::optional<ImageArtifact> image;
};

struct SxsSample {
  std::string user_prompt_id;
  std::string image_left;
  std::string image_right;
  int trials = 10;
  std::vector<JudgeVote> votes;  // trial order; left is Image A on even trials
  int left_votes = 0;
  int right_votes = 0;
  int invalid = 0;
  int advantage = 0;
  Verdict verdict = Verdict::Tie;
};

struct SxsReport {
  int trials = 10;
  std::vector<SxsSample> samples;
  int wins = 0;
  int ties = 0;
  int losses = 0;
  std::vector<int> histogram;  // index advantage + trials
  double mean_advantage = 0.0;
  std::vector<std::string> skipped;  // prompt ids missing on one side
  Warnings warnings;
};

/// Tallies votes for one sample given the trial schedule.
SxsSample score_sample(std::string user_prompt_id, const std::string& left_image, const std::string& right_image,
                       std::vector<JudgeVote> votes, int trials);

/// Samples are ordered like `left`; prompts missing on either side are skipped.
SxsReport auto_sxs(Gateway& gateway, const std::vector<MethodOutput>& left, const std::vector<MethodOutput>& right,
                   int trials, double temperature, std::uint64_t seed);

/// Recomputes counts, histogram and mean from `report.samples`.
void summarize(SxsReport& report);

nlohmann::json to_json(const SxsReport& report);
std::string histogram_csv(const SxsReport& report);
std::string samples_csv(const SxsReport& report);

/// Final image of each successful run.
std::vector<MethodOutput> outputs_from_records(const std::vector<RunRecord>& records);

// ---------------------------------------------------------------------------
// Baselines

enum class Baseline { Original, Rewrite, LmBbo, PointwiseGreedy };

std::string_view to_string(Baseline baseline);
Baseline baseline_from_string(std::string_view text);

/// Every baseline spends at most config.max_t2i_calls renders. LmBbo returns
/// its last generation; PointwiseGreedy its best-scoring one (earliest on ties).
RunRecord run_baseline(Gateway& gateway, Baseline baseline, const UserPrompt& user_prompt, const RunConfig& config,
                       DvqSetPtr dvqs = nullptr);

// ---------------------------------------------------------------------------
// Reporting

struct ReportRow {
  std::string method;
  int prompts = 0;
  double mean = 0.0;
  double stddev = 0.0;  // population
  double mean_rank = 0.0;
};

/// Per method: mean and population std of final scores, and the mean of
/// per-prompt ranks (1 = best; ties share the average rank). Failed records
/// are skipped with a warning. Rows follow first appearance of each method.
std::vector<ReportRow> aggregate_report(const std::vector<RunRecord>& records, Warnings& warnings);
std::string report_csv(const std::vector<ReportRow>& rows);

/// Copies each shared prompt's two final images into `out_dir` in a
/// seeded random order, with pairs.csv for raters and key.csv for the answer.
int export_pairs(const std::vector<MethodOutput>& left, const std::vector<MethodOutput>& right,
                 const std::filesystem::path& out_dir, std::uint64_t seed, Warnings& warnings);

/// Reruns a record from its stored config snapshot.
RunRecord rerun_record(const RunRecord& record);

}  // namespace t2iopt
