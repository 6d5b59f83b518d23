#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace t2iopt {

struct RunConfig;

class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The prompt as typed by the user. `id` is the dataset key when one exists,
/// otherwise a content hash of the text.
struct UserPrompt {
  std::string id;
  std::string text;
  std::string split;

  /// Throws DomainError when `text` is blank after trimming.
  static UserPrompt make(std::string text, std::string dataset_key = {}, std::string split = {});
};

enum class Origin { InitialRewrite, TargetedEdit, ImplicitImprove, VerifierCorrection, Baseline };

std::string_view to_string(Origin origin);
Origin origin_from_string(std::string_view text);

struct PromptProposal {
  std::string id;
  std::string text;
  Origin origin = Origin::InitialRewrite;
  std::string baseline_name;  // only for Origin::Baseline
  int iteration = 0;
  std::optional<std::string> parent;

  /// Builds a proposal with a content-hash id over the user prompt id, text,
  /// origin, iteration and parent. Throws DomainError on blank text or on an
  /// iteration-0 proposal that is not InitialRewrite/Baseline/VerifierCorrection.
  static PromptProposal make(std::string_view user_prompt_id, std::string text, Origin origin, int iteration,
                             std::optional<std::string> parent, std::string baseline_name = {});
};

enum class ImageFormat { Png, FeatureSet };

std::string_view to_string(ImageFormat format);
ImageFormat image_format_from_string(std::string_view text);

struct ImageArtifact {
  std::string id;
  ImageFormat format = ImageFormat::FeatureSet;
  std::string bytes;
  std::string prompt_ref;
  std::optional<std::uint64_t> seed;
};

struct Dvq {
  int index = 0;
  std::string question;
};

/// Generated once per user prompt and shared read-only for the whole run.
struct DvqSet {
  std::string user_prompt_id;
  std::vector<Dvq> questions;

  std::size_t size() const { return questions.size(); }
  bool empty() const { return questions.empty(); }

  /// Numbers the questions 1..n. Throws DomainError on a question not ending in '?'.
  static DvqSet make(std::string user_prompt_id, const std::vector<std::string>& questions);
};

using DvqSetPtr = std::shared_ptr<const DvqSet>;

/// Per-question probability of an affirmative answer, aligned with the DvqSet.
struct ResponseVector {
  std::string image_ref;
  std::vector<double> values;
};

/// A proposal, the image generated from it, and that image's DVQ responses.
struct Candidate {
  PromptProposal proposal;
  ImageArtifact image;
  ResponseVector responses;
};

enum class Choice { First, Second, Invalid };

std::string_view to_string(Choice choice);
Choice choice_from_string(std::string_view text);

struct JudgeVote {
  std::string first_image;   // shown as "Image A"
  std::string second_image;  // shown as "Image B"
  Choice chosen = Choice::Invalid;
  std::string raw_text;
  double temperature = 0.0;
};

struct OptimizationState {
  int iteration = 0;
  std::optional<Candidate> incumbent;
  int t2i_calls_used = 0;
  int non_improving_steps = 0;
  int starved_iterations = 0;  // consecutive iterations where both generators returned nothing
  std::uint64_t rng_seed = 0;
};

/// Lists every broken invariant; empty means the state is consistent.
std::vector<std::string> validate_state(const OptimizationState& state, const RunConfig& config);

std::string trim(std::string_view text);

}  // namespace t2iopt
