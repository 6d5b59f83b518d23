#pragma once

#include <chrono>
#include <string>

#include "t2iopt/gateway.hpp"

namespace t2iopt {

struct HttpSettings {
  std::string base_url;  // e.g. "https://api.openai.com/v1"
  std::string model;
  std::string api_key;   // empty: no Authorization header
  std::chrono::milliseconds timeout{60000};
};

/// Chat-completions client. `<image_N>` placeholders in the prompt are replaced
/// by inline PNG parts in order; VQA requests ask for logprobs so the yes
/// probability can be read from the first token.
class HttpChatModel final : public LanguageModel {
 public:
  explicit HttpChatModel(HttpSettings settings) : settings_(std::move(settings)) {}
  ModelReply complete(const ModelRequest& request) override;

  /// Request body for `request`; exposed for tests.
  nlohmann::json build_body(const ModelRequest& request) const;
  /// Reply text plus P("yes") when logprobs are present.
  static ModelReply parse_body(const nlohmann::json& body);

 private:
  HttpSettings settings_;
};

/// Image-generation client returning base64 PNG payloads.
class HttpImageModel final : public ImageModel {
 public:
  explicit HttpImageModel(HttpSettings settings) : settings_(std::move(settings)) {}
  RenderedImage render(std::string_view prompt, std::uint64_t seed) override;

 private:
  HttpSettings settings_;
};

std::string base64_encode(std::string_view bytes);
std::string base64_decode(std::string_view text);

}  // namespace t2iopt
