#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace t2iopt {

/// Ablation variants: R = initial rewrite only; IR = iterate on the last
/// generation; PIR = add the pairwise comparator; VPIR = add self-verification.
enum class Variant { R, IR, PIR, VPIR };

std::string_view to_string(Variant variant);
Variant variant_from_string(std::string_view text);

struct Temperatures {
  double text = 0.7;
  double vqa = 0.0;
  double judge = 0.7;
  double critic = 0.7;  // rationalization and implicit improvement
};

struct RunConfig {
  int max_t2i_calls = 8;
  std::optional<int> patience;
  int judge_n = 3;
  int verifier_patience = 3;
  int dossier_cap = 8;
  int dvq_warn_threshold = 25;
  std::uint64_t seed = 0;
  Variant variant = Variant::VPIR;
  Temperatures temperatures;
  /// Use the epoch for timestamps so scripted runs serialize byte-identically.
  bool deterministic_clock = false;
  /// Backend section of the config file, copied into every RunRecord.
  nlohmann::json backends_snapshot = nlohmann::json::object();

  bool uses_comparator() const { return variant == Variant::PIR || variant == Variant::VPIR; }
  bool uses_verifier() const { return variant == Variant::VPIR; }
  bool iterates() const { return variant != Variant::R; }

  /// Throws std::invalid_argument when max_t2i_calls < 1, judge_n < 1, etc.
  void check() const;
};

nlohmann::json to_json(const RunConfig& config);
RunConfig run_config_from_json(const nlohmann::json& j);

}  // namespace t2iopt
