#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "t2iopt/gateway.hpp"

namespace t2iopt {

/// How each scripted agent behaves. Every mode is a pure function of the
/// request, so repeated calls give byte-identical replies.
struct ScriptedBehavior {
  enum class Refine { Echo, Garbage };
  enum class Rewrite { Echo, Enrich, NoChange, Garbage };
  enum class Critic { Suggest, Echo };
  enum class Editor { Follow, Concat, NoChange, Garbage };
  enum class Implicit { Fix, Generic, Drift, NoChange, Garbage };
  enum class Verifier { Aware, NoChange, NeverConverge, Garbage };
  enum class Judge { Overlap, AlwaysA, AlwaysB, Coin, Invalid };
  enum class Vqa { Probability, Text, Garbage };

  Refine refine = Refine::Echo;
  Rewrite rewrite = Rewrite::Enrich;
  Critic critic = Critic::Suggest;
  Editor editor = Editor::Follow;
  Implicit implicit = Implicit::Fix;
  Verifier verifier = Verifier::Aware;
  Judge judge = Judge::Overlap;
  Vqa vqa = Vqa::Probability;
};

/// Deterministic stand-in for the T2I model and the (M)LLM agents. Images are
/// sets of feature tokens; a token is rendered when the prompt mentions it at
/// least `required_mentions` times (default 1) and it survives seeded dropout.
struct ScriptedWorldSpec {
  std::vector<std::string> vocabulary;  // empty: every non-stopword token counts
  std::map<std::string, int> required_mentions;
  std::map<std::string, std::string> dvq_predicates;  // question text -> token
  double noise = 0.0;                                 // per-feature dropout in [0, 1)
  std::uint64_t seed = 0;
  ScriptedBehavior behavior;
  /// Canned replies keyed "<call kind>:<user prompt id>" or "<call kind>:*".
  /// A list is indexed by the request's "round" (clamped to the last entry).
  std::map<std::string, std::vector<std::string>> replies;
  std::set<CallKind> failing_kinds;  // always throw TransportError
  bool render_fails = false;
};

ScriptedWorldSpec scripted_world_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ScriptedWorldSpec& spec);

class ScriptedWorld {
 public:
  explicit ScriptedWorld(ScriptedWorldSpec spec);

  const ScriptedWorldSpec& spec() const { return spec_; }

  /// Lowercased, singularized, stopword-free tokens in order of appearance,
  /// restricted to the vocabulary when one is set.
  std::vector<std::string> tokens(std::string_view text) const;
  int mentions(std::string_view text, const std::string& token) const;

  /// Every token the text mentions at least once (the judge's target set).
  std::set<std::string> topic_features(std::string_view text) const;
  /// Tokens mentioned often enough to be rendered, before dropout.
  std::set<std::string> prompt_features(std::string_view text) const;
  /// prompt_features minus seeded dropout.
  std::set<std::string> render(std::string_view prompt, std::uint64_t seed) const;

  /// Feature token a question checks: explicit map, then the scripted
  /// "Is there X in the image?" form, then the last vocabulary token.
  std::optional<std::string> predicate_for(std::string_view question) const;

  static std::string serialize(const std::set<std::string>& features);
  static std::set<std::string> deserialize(std::string_view bytes);
  static std::string question_for(const std::string& token);

  std::string stem(std::string word) const;

 private:
  bool in_vocabulary(const std::string& token) const;

  ScriptedWorldSpec spec_;
  std::set<std::string> vocabulary_;
};

class ScriptedBackend final : public LanguageModel, public ImageModel {
 public:
  explicit ScriptedBackend(ScriptedWorldSpec spec) : world_(std::move(spec)) {}

  ModelReply complete(const ModelRequest& request) override;
  RenderedImage render(std::string_view prompt, std::uint64_t seed) override;

  const ScriptedWorld& world() const { return world_; }

  int calls(CallKind kind) const { return counts_[static_cast<std::size_t>(kind)].load(); }
  int render_calls() const { return renders_.load(); }

 private:
  std::optional<std::string> canned(const ModelRequest& request) const;
  std::string reply_for(const ModelRequest& request) const;
  ModelReply vqa(const ModelRequest& request) const;
  std::string judge(const ModelRequest& request) const;

  ScriptedWorld world_;
  std::array<std::atomic<int>, kCallKindCount> counts_{};
  std::atomic<int> renders_{0};
};

}  // namespace t2iopt
