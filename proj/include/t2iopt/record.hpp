#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "t2iopt/compare.hpp"
#include "t2iopt/domain.hpp"
#include "t2iopt/propose.hpp"
#include "t2iopt/verify.hpp"

namespace t2iopt {

inline constexpr int kRecordSchemaVersion = 1;

struct GeneratorEntry {
  std::string name;    // "targeted_edit", "implicit_improve", or a baseline step
  std::string status;  // "proposed", "absent", "skipped"
  std::optional<std::string> proposal;
};

struct IterationEntry {
  int iteration = 0;
  std::vector<GeneratorEntry> generators;
  std::vector<FailureDossier> dossiers;
  std::vector<PromptProposal> proposals;  // everything created this step, corrections included
  std::vector<VerifierTranscript> verifier;
  std::vector<ImageArtifact> images;
  std::vector<ResponseVector> responses;  // aligned with images
  std::vector<double> scores;             // aligned with images
  std::vector<DuelOutcome> tournament;
  std::optional<DuelOutcome> incumbent_duel;
  std::optional<std::string> incumbent_before;  // proposal ids
  std::optional<std::string> incumbent_after;
  int t2i_calls_used = 0;  // cumulative, after this step
  int non_improving_steps = 0;
  std::vector<std::string> warnings;
};

struct RunRecord {
  int schema_version = kRecordSchemaVersion;
  std::string method;  // variant name, or "baseline:<name>"
  UserPrompt user_prompt;
  std::optional<DvqSet> dvqs;
  std::vector<IterationEntry> iterations;
  std::optional<Candidate> final;
  std::optional<double> final_score;
  std::string status = "ok";  // "ok" or "failed"
  std::string error;
  std::string stop_reason;
  int t2i_calls_used = 0;
  nlohmann::json config = nlohmann::json::object();
  std::vector<std::string> warnings;
  std::string started_at;
  std::string finished_at;

  bool ok() const { return status == "ok"; }
  /// Looks a proposal up across all iterations.
  const PromptProposal* find_proposal(const std::string& id) const;
  const ImageArtifact* find_image(const std::string& id) const;
};

/// Image bytes are inlined for feature sets and referenced by file for PNGs.
nlohmann::json to_json(const RunRecord& record);
/// `base_dir` resolves PNG file references; without it PNG bytes stay empty.
RunRecord record_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});

/// Checks budget, provenance, response ranges, vote scheduling and that every
/// incumbent change is backed by a won duel. Empty means consistent.
std::vector<std::string> validate_record(const RunRecord& record);

/// ISO-8601 UTC; the epoch when `deterministic`.
std::string timestamp_now(bool deterministic);

/// "<prompt id>_<compact timestamp>" with unsafe characters replaced.
std::string run_directory_name(const RunRecord& record);

/// Writes record.json and images/ under out_root/<run_directory_name>.
std::filesystem::path write_run(const RunRecord& record, const std::filesystem::path& out_root);
RunRecord load_run(const std::filesystem::path& run_dir);
/// Every run directory (containing record.json) directly below `root`, sorted.
std::vector<std::filesystem::path> list_runs(const std::filesystem::path& root);

std::string image_file_name(const ImageArtifact& image);

}  // namespace t2iopt
