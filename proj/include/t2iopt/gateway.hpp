#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "t2iopt/domain.hpp"

namespace t2iopt {

enum class Role { TextLLM, MultimodalLLM, TextToImage };

std::string_view to_string(Role role);

enum class CallKind {
  DvqDecompose,
  DvqRefine,
  Rewrite,
  Vqa,
  Rationalize,
  TargetedEdit,
  ImplicitImprove,
  Verify,
  Judge,
};

inline constexpr std::size_t kCallKindCount = 9;

std::string_view to_string(CallKind kind);
CallKind call_kind_from_string(std::string_view text);

class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One call to a text or multimodal model. `prompt` is the fully rendered
/// template; `context` carries the same slot values in structured form (plus
/// "key", the user prompt id) for simulators and logs. Real adapters only
/// send `prompt` and `images`.
struct ModelRequest {
  CallKind kind = CallKind::Rewrite;
  std::string prompt;
  std::vector<ImageArtifact> images;
  double temperature = 0.0;
  std::uint64_t seed = 0;
  nlohmann::json context = nlohmann::json::object();
};

struct ModelReply {
  std::string text;
  std::optional<double> yes_probability;  // only when the backend exposes token probabilities
};

class LanguageModel {
 public:
  virtual ~LanguageModel() = default;
  /// Throws TransportError on network/service failure.
  virtual ModelReply complete(const ModelRequest& request) = 0;
};

struct RenderedImage {
  std::string bytes;
  ImageFormat format = ImageFormat::Png;
};

class ImageModel {
 public:
  virtual ~ImageModel() = default;
  virtual RenderedImage render(std::string_view prompt, std::uint64_t seed) = 0;
};

struct RetryPolicy {
  int max_retries = 2;
  std::chrono::milliseconds initial_backoff{500};
  double multiplier = 2.0;
  std::chrono::milliseconds max_backoff{8000};
};

/// Calls `fn` up to 1 + max_retries times, sleeping with exponential backoff
/// between attempts. Only TransportError is retried.
template <class Fn>
auto with_retries(const RetryPolicy& policy, Fn&& fn) -> decltype(fn());

/// Uniform front for the three model roles. Thread-safe as long as the
/// backends are; it holds no mutable state of its own.
class Gateway {
 public:
  struct Endpoint {
    std::shared_ptr<LanguageModel> model;
    RetryPolicy retry;
  };
  struct ImageEndpoint {
    std::shared_ptr<ImageModel> model;
    RetryPolicy retry;
  };

  Gateway() = default;
  Gateway(Endpoint text, Endpoint multimodal, ImageEndpoint t2i)
      : text_(std::move(text)), multimodal_(std::move(multimodal)), t2i_(std::move(t2i)) {}

  bool has(Role role) const;

  /// Raw completion with retries. Role must be TextLLM or MultimodalLLM.
  ModelReply complete(Role role, const ModelRequest& request);
  std::string generate_text(Role role, const ModelRequest& request) { return complete(role, request).text; }

  /// P("yes") for one question. Token probability when the backend exposes it,
  /// else yes/no text mapped to 1/0, else 0.5. Throws TransportError.
  double vqa_yes_probability(const ImageArtifact& image, const Dvq& question, double temperature, std::uint64_t seed,
                             const std::string& key = {});

  /// Fills the judge template with `image_a` as Image A and parses the
  /// trailing answer marker. Throws TransportError; Invalid is a value.
  JudgeVote judge_choice(const UserPrompt& user_prompt, const ImageArtifact& image_a, const ImageArtifact& image_b,
                         double temperature, std::uint64_t seed);

  /// One T2I invocation (retries included). The artifact references `proposal`.
  ImageArtifact generate_image(const PromptProposal& proposal, std::uint64_t seed);

 private:
  Endpoint& endpoint(Role role);

  Endpoint text_;
  Endpoint multimodal_;
  ImageEndpoint t2i_;
};

// ---------------------------------------------------------------------------

void sleep_backoff(const RetryPolicy& policy, int attempt);

template <class Fn>
auto with_retries(const RetryPolicy& policy, Fn&& fn) -> decltype(fn()) {
  for (int attempt = 0;; ++attempt) {
    try {
      return fn();
    } catch (const TransportError&) {
      if (attempt >= policy.max_retries) throw;
      sleep_backoff(policy, attempt);
    }
  }
}

}  // namespace t2iopt
