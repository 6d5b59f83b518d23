#include "t2iopt/scripted.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "t2iopt/hash.hpp"

namespace t2iopt {

namespace {

const std::set<std::string>& stopwords() {
  static const std::set<std::string> words = {
      "a",     "an",      "the",    "of",        "on",       "in",     "with",  "and",   "or",     "to",
      "at",    "by",      "for",    "from",      "is",       "are",    "be",    "there", "this",   "that",
      "it",    "its",     "as",     "into",      "onto",     "over",   "under", "image", "does",   "do",
      "picture", "show",  "shown",  "clearly",   "visible",  "featuring", "emphasize", "has", "have", "very",
  };
  return words;
}

bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

template <class E>
struct ModeName {
  E value;
  std::string_view name;
};

template <class E, std::size_t N>
E parse_mode(const nlohmann::json& j, const char* key, E fallback, const ModeName<E> (&table)[N]) {
  if (!j.contains(key)) return fallback;
  const std::string text = j.at(key).get<std::string>();
  for (const auto& entry : table) {
    if (entry.name == text) return entry.value;
  }
  throw ConfigError(std::string("unknown scripted behavior for ") + key + ": " + text);
}

template <class E, std::size_t N>
std::string_view mode_name(E value, const ModeName<E> (&table)[N]) {
  for (const auto& entry : table) {
    if (entry.value == value) return entry.name;
  }
  return "?";
}

using B = ScriptedBehavior;
constexpr ModeName<B::Refine> kRefine[] = {{B::Refine::Echo, "echo"}, {B::Refine::Garbage, "garbage"}};
constexpr ModeName<B::Rewrite> kRewrite[] = {{B::Rewrite::Echo, "echo"},
                                             {B::Rewrite::Enrich, "enrich"},
                                             {B::Rewrite::NoChange, "no_change"},
                                             {B::Rewrite::Garbage, "garbage"}};
constexpr ModeName<B::Critic> kCritic[] = {{B::Critic::Suggest, "suggest"}, {B::Critic::Echo, "echo"}};
constexpr ModeName<B::Editor> kEditor[] = {{B::Editor::Follow, "follow"},
                                           {B::Editor::Concat, "concat"},
                                           {B::Editor::NoChange, "no_change"},
                                           {B::Editor::Garbage, "garbage"}};
constexpr ModeName<B::Implicit> kImplicit[] = {{B::Implicit::Fix, "fix"},
                                               {B::Implicit::Generic, "generic"},
                                               {B::Implicit::Drift, "drift"},
                                               {B::Implicit::NoChange, "no_change"},
                                               {B::Implicit::Garbage, "garbage"}};
constexpr ModeName<B::Verifier> kVerifier[] = {{B::Verifier::Aware, "aware"},
                                               {B::Verifier::NoChange, "no_change"},
                                               {B::Verifier::NeverConverge, "never_converge"},
                                               {B::Verifier::Garbage, "garbage"}};
constexpr ModeName<B::Judge> kJudge[] = {{B::Judge::Overlap, "overlap"},
                                         {B::Judge::AlwaysA, "always_a"},
                                         {B::Judge::AlwaysB, "always_b"},
                                         {B::Judge::Coin, "coin"},
                                         {B::Judge::Invalid, "invalid"}};
constexpr ModeName<B::Vqa> kVqa[] = {
    {B::Vqa::Probability, "probability"}, {B::Vqa::Text, "text"}, {B::Vqa::Garbage, "garbage"}};

std::string wrap_prompt(const std::string& text) { return "<PROMPT> " + text + " </PROMPT>"; }
std::string wrap_answer(const std::string& text) { return "<answer> " + text + " </answer>"; }

std::vector<std::string> string_list(const nlohmann::json& context, const char* key) {
  std::vector<std::string> out;
  if (context.contains(key)) {
    for (const auto& v : context.at(key)) out.push_back(v.get<std::string>());
  }
  return out;
}

std::string str(const nlohmann::json& context, const char* key) { return context.value(key, std::string{}); }

}  // namespace

// ---------------------------------------------------------------------------
// Spec (de)serialization

ScriptedWorldSpec scripted_world_from_json(const nlohmann::json& j) {
  ScriptedWorldSpec spec;
  if (!j.is_object()) return spec;
  spec.vocabulary = j.value("vocabulary", std::vector<std::string>{});
  spec.required_mentions = j.value("required_mentions", std::map<std::string, int>{});
  spec.dvq_predicates = j.value("dvq_predicates", std::map<std::string, std::string>{});
  spec.noise = j.value("noise", 0.0);
  if (!(spec.noise >= 0.0 && spec.noise < 1.0)) throw ConfigError("scripted_world.noise must be in [0, 1)");
  spec.seed = j.value("seed", std::uint64_t{0});
  if (j.contains("behavior")) {
    const auto& b = j.at("behavior");
    spec.behavior.refine = parse_mode(b, "refine", spec.behavior.refine, kRefine);
    spec.behavior.rewrite = parse_mode(b, "rewrite", spec.behavior.rewrite, kRewrite);
    spec.behavior.critic = parse_mode(b, "critic", spec.behavior.critic, kCritic);
    spec.behavior.editor = parse_mode(b, "editor", spec.behavior.editor, kEditor);
    spec.behavior.implicit = parse_mode(b, "implicit", spec.behavior.implicit, kImplicit);
    spec.behavior.verifier = parse_mode(b, "verifier", spec.behavior.verifier, kVerifier);
    spec.behavior.judge = parse_mode(b, "judge", spec.behavior.judge, kJudge);
    spec.behavior.vqa = parse_mode(b, "vqa", spec.behavior.vqa, kVqa);
  }
  if (j.contains("replies")) {
    for (const auto& [key, value] : j.at("replies").items()) {
      if (value.is_array()) {
        spec.replies[key] = value.get<std::vector<std::string>>();
      } else {
        spec.replies[key] = {value.get<std::string>()};
      }
    }
  }
  if (j.contains("fail")) {
    for (const auto& v : j.at("fail")) {
      const auto name = v.get<std::string>();
      if (name == "render") {
        spec.render_fails = true;
      } else {
        spec.failing_kinds.insert(call_kind_from_string(name));
      }
    }
  }
  return spec;
}

nlohmann::json to_json(const ScriptedWorldSpec& spec) {
  nlohmann::json fail = nlohmann::json::array();
  for (auto k : spec.failing_kinds) fail.push_back(std::string(to_string(k)));
  if (spec.render_fails) fail.push_back("render");
  nlohmann::json replies = nlohmann::json::object();
  for (const auto& [k, v] : spec.replies) replies[k] = v;
  return {
      {"vocabulary", spec.vocabulary},
      {"required_mentions", spec.required_mentions},
      {"dvq_predicates", spec.dvq_predicates},
      {"noise", spec.noise},
      {"seed", spec.seed},
      {"behavior",
       {{"refine", mode_name(spec.behavior.refine, kRefine)},
        {"rewrite", mode_name(spec.behavior.rewrite, kRewrite)},
        {"critic", mode_name(spec.behavior.critic, kCritic)},
        {"editor", mode_name(spec.behavior.editor, kEditor)},
        {"implicit", mode_name(spec.behavior.implicit, kImplicit)},
        {"verifier", mode_name(spec.behavior.verifier, kVerifier)},
        {"judge", mode_name(spec.behavior.judge, kJudge)},
        {"vqa", mode_name(spec.behavior.vqa, kVqa)}}},
      {"replies", replies},
      {"fail", fail},
  };
}

// ---------------------------------------------------------------------------
// World

ScriptedWorld::ScriptedWorld(ScriptedWorldSpec spec) : spec_(std::move(spec)) {
  for (const auto& word : spec_.vocabulary) {
    std::string w;
    for (char c : word) w += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    vocabulary_.insert(stem(w));
  }
  std::map<std::string, int> stemmed;
  for (const auto& [tok, n] : spec_.required_mentions) stemmed[stem(tok)] = n;
  spec_.required_mentions = std::move(stemmed);
}

std::string ScriptedWorld::stem(std::string w) const {
  if (w.size() > 4 && ends_with(w, "ies")) return w.substr(0, w.size() - 3) + "y";
  if (w.size() > 4 && ends_with(w, "ves")) return w.substr(0, w.size() - 3) + "f";
  if (w.size() > 4 && (ends_with(w, "ches") || ends_with(w, "shes") || ends_with(w, "xes") || ends_with(w, "sses"))) {
    return w.substr(0, w.size() - 2);
  }
  if (w.size() > 3 && w.back() == 's' && !ends_with(w, "ss") && !ends_with(w, "us") && !ends_with(w, "is")) {
    return w.substr(0, w.size() - 1);
  }
  return w;
}

bool ScriptedWorld::in_vocabulary(const std::string& token) const {
  if (stopwords().count(token)) return false;
  return vocabulary_.empty() || vocabulary_.count(token) > 0;
}

std::vector<std::string> ScriptedWorld::tokens(std::string_view text) const {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (cur.empty()) return;
    std::string s = stem(cur);
    if (in_vocabulary(s)) out.push_back(std::move(s));
    cur.clear();
  };
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else {
      flush();
    }
  }
  flush();
  return out;
}

int ScriptedWorld::mentions(std::string_view text, const std::string& token) const {
  const auto toks = tokens(text);
  return static_cast<int>(std::count(toks.begin(), toks.end(), token));
}

std::set<std::string> ScriptedWorld::topic_features(std::string_view text) const {
  const auto toks = tokens(text);
  return {toks.begin(), toks.end()};
}

std::set<std::string> ScriptedWorld::prompt_features(std::string_view text) const {
  std::map<std::string, int> counts;
  for (auto& t : tokens(text)) ++counts[t];
  std::set<std::string> out;
  for (const auto& [tok, n] : counts) {
    auto it = spec_.required_mentions.find(tok);
    const int need = it == spec_.required_mentions.end() ? 1 : it->second;
    if (n >= need) out.insert(tok);
  }
  return out;
}

std::set<std::string> ScriptedWorld::render(std::string_view prompt, std::uint64_t seed) const {
  std::set<std::string> out;
  SplitMix64 rng(derive_seed(spec_.seed ^ fnv1a64(prompt), "render", seed));
  for (const auto& f : prompt_features(prompt)) {
    if (rng.uniform() >= spec_.noise) out.insert(f);
  }
  return out;
}

std::string ScriptedWorld::question_for(const std::string& token) { return "Is there " + token + " in the image?"; }

std::optional<std::string> ScriptedWorld::predicate_for(std::string_view question) const {
  const std::string q(question);
  if (auto it = spec_.dvq_predicates.find(q); it != spec_.dvq_predicates.end()) return stem(it->second);
  constexpr std::string_view kHead = "Is there ";
  constexpr std::string_view kTail = " in the image?";
  if (q.rfind(kHead, 0) == 0 && ends_with(q, kTail)) {
    return stem(q.substr(kHead.size(), q.size() - kHead.size() - kTail.size()));
  }
  const auto toks = tokens(q);
  if (toks.empty()) return std::nullopt;
  return toks.back();
}

std::string ScriptedWorld::serialize(const std::set<std::string>& features) {
  std::string out;
  for (const auto& f : features) {
    if (!out.empty()) out += '\n';
    out += f;
  }
  return out;
}

std::set<std::string> ScriptedWorld::deserialize(std::string_view bytes) {
  std::set<std::string> out;
  std::istringstream in{std::string(bytes)};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.insert(line);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Backend

RenderedImage ScriptedBackend::render(std::string_view prompt, std::uint64_t seed) {
  ++renders_;
  if (world_.spec().render_fails) throw TransportError("scripted text-to-image failure");
  return {ScriptedWorld::serialize(world_.render(prompt, seed)), ImageFormat::FeatureSet};
}

ModelReply ScriptedBackend::complete(const ModelRequest& request) {
  ++counts_[static_cast<std::size_t>(request.kind)];
  if (world_.spec().failing_kinds.count(request.kind)) {
    throw TransportError("scripted failure for " + std::string(to_string(request.kind)));
  }
  if (auto c = canned(request)) return {*c, std::nullopt};
  if (request.kind == CallKind::Vqa) return vqa(request);
  return {reply_for(request), std::nullopt};
}

std::optional<std::string> ScriptedBackend::canned(const ModelRequest& request) const {
  const auto& replies = world_.spec().replies;
  const std::string kind(to_string(request.kind));
  auto it = replies.find(kind + ":" + str(request.context, "key"));
  if (it == replies.end()) it = replies.find(kind + ":*");
  if (it == replies.end() || it->second.empty()) return std::nullopt;
  const std::size_t round = request.context.value("round", std::size_t{0});
  return it->second[std::min(round, it->second.size() - 1)];
}

ModelReply ScriptedBackend::vqa(const ModelRequest& request) const {
  const auto features =
      request.images.empty() ? std::set<std::string>{} : ScriptedWorld::deserialize(request.images.front().bytes);
  const auto pred = world_.predicate_for(str(request.context, "question"));
  const bool yes = pred && features.count(*pred) > 0;
  switch (world_.spec().behavior.vqa) {
    case B::Vqa::Probability: return {yes ? "yes" : "no", yes ? 1.0 : 0.0};
    case B::Vqa::Text: return {yes ? "Yes." : "No.", std::nullopt};
    case B::Vqa::Garbage: return {"It is hard to say.", std::nullopt};
  }
  return {};
}

std::string ScriptedBackend::judge(const ModelRequest& request) const {
  const auto& b = world_.spec().behavior;
  SplitMix64 rng(request.seed);
  switch (b.judge) {
    case B::Judge::AlwaysA: return "Image A looks better to me.\n<answer> A </answer>";
    case B::Judge::AlwaysB: return "Image B looks better to me.\n<answer> B </answer>";
    case B::Judge::Coin: return rng.coin() ? "Hard call.\n<answer> A </answer>" : "Hard call.\n<answer> B </answer>";
    case B::Judge::Invalid: return "Both images have merits; I cannot decide.";
    case B::Judge::Overlap: break;
  }
  if (request.images.size() < 2) return "Missing image.";
  const auto target = world_.topic_features(str(request.context, "user_prompt"));
  auto overlap = [&](const ImageArtifact& img) {
    int n = 0;
    for (const auto& f : ScriptedWorld::deserialize(img.bytes)) n += static_cast<int>(target.count(f));
    return n;
  };
  const int a = overlap(request.images[0]);
  const int b2 = overlap(request.images[1]);
  std::string letter;
  if (a != b2) {
    letter = a > b2 ? "A" : "B";
  } else {
    letter = rng.coin() ? "A" : "B";
  }
  return "Image A covers " + std::to_string(a) + " requested elements and Image B covers " + std::to_string(b2) +
         ".\n<answer> " + letter + " </answer>";
}

std::string ScriptedBackend::reply_for(const ModelRequest& request) const {
  const auto& ctx = request.context;
  const auto& b = world_.spec().behavior;
  switch (request.kind) {
    case CallKind::DvqDecompose: {
      std::vector<std::string> seen;
      for (auto& t : world_.tokens(str(ctx, "user_prompt"))) {
        if (std::find(seen.begin(), seen.end(), t) == seen.end()) seen.push_back(t);
      }
      if (seen.empty()) return "I could not find anything to ask about.";
      std::string out;
      for (std::size_t i = 0; i < seen.size(); ++i) {
        out += std::to_string(i + 1) + ". " + ScriptedWorld::question_for(seen[i]) + "\n";
      }
      return out;
    }
    case CallKind::DvqRefine: {
      if (b.refine == B::Refine::Garbage) return "Sorry, I cannot help with that.";
      std::string out;
      const auto qs = string_list(ctx, "questions");
      for (std::size_t i = 0; i < qs.size(); ++i) out += std::to_string(i + 1) + ". " + qs[i] + "\n";
      return out;
    }
    case CallKind::Rewrite: {
      const std::string cur = str(ctx, "current_prompt");
      switch (b.rewrite) {
        case B::Rewrite::Echo: return wrap_prompt(cur);
        case B::Rewrite::Enrich: return wrap_prompt(cur + ", highly detailed, professional lighting");
        case B::Rewrite::NoChange: return wrap_prompt("NO_CHANGE");
        case B::Rewrite::Garbage: return "Here is a better prompt: " + cur;
      }
      break;
    }
    case CallKind::Rationalize: {
      const std::string q = str(ctx, "question");
      if (b.critic == B::Critic::Echo) return q;
      const auto pred = world_.predicate_for(q);
      if (!pred) return "The reviewer answered \"No\" to: " + q + "\nSuggestion: describe this property more explicitly.";
      return "The reviewer likely answered \"No\" because the image does not clearly show " + *pred +
             ".\nSuggestion: emphasize " + *pred + " in the prompt.";
    }
    case CallKind::TargetedEdit: {
      const std::string best = str(ctx, "best_prompt_so_far");
      const auto suggestions = string_list(ctx, "suggestions");
      switch (b.editor) {
        case B::Editor::NoChange: return wrap_prompt("NO_CHANGE");
        case B::Editor::Garbage: return "I would change a few words.";
        case B::Editor::Follow: {
          std::string out = best;
          bool any = false;
          for (const auto& s : suggestions) {
            constexpr std::string_view kHead = "emphasize ";
            const auto h = s.find(kHead);
            const auto t = s.find(" in the prompt");
            if (h == std::string::npos || t == std::string::npos || t <= h + kHead.size()) continue;
            out += ", with clearly visible " + s.substr(h + kHead.size(), t - h - kHead.size());
            any = true;
          }
          if (any) return wrap_prompt(out);
          [[fallthrough]];
        }
        case B::Editor::Concat: {
          std::string out = best;
          for (const auto& s : suggestions) out += " " + s;
          return wrap_prompt(out);
        }
      }
      break;
    }
    case CallKind::ImplicitImprove: {
      const std::string best = str(ctx, "best_prompt_so_far");
      const std::string user = str(ctx, "user_prompt");
      const auto features =
          request.images.empty() ? std::set<std::string>{} : ScriptedWorld::deserialize(request.images.front().bytes);
      std::vector<std::string> missing;
      for (auto& t : world_.tokens(user)) {
        if (!features.count(t) && std::find(missing.begin(), missing.end(), t) == missing.end()) missing.push_back(t);
      }
      switch (b.implicit) {
        case B::Implicit::NoChange: return wrap_prompt("NO_CHANGE");
        case B::Implicit::Garbage: return "The image mostly reflects the topic.";
        case B::Implicit::Fix: {
          if (missing.empty()) return "Yes, it does.\n" + wrap_prompt("NO_CHANGE");
          std::string out = best;
          for (const auto& m : missing) out += ", featuring " + m;
          return wrap_prompt(out);
        }
        case B::Implicit::Generic:
          if (missing.empty()) return wrap_prompt("NO_CHANGE");
          return wrap_prompt(best + ", sharp focus");
        case B::Implicit::Drift: {
          const auto topic = world_.tokens(user);
          if (topic.empty()) return wrap_prompt(best + ", cinematic mood");
          const std::string drop = topic.back();
          std::string out;
          std::string word;
          auto flush = [&] {
            if (word.empty()) return;
            std::string low;
            for (char c : word) low += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            if (world_.stem(low) != drop) out += word;
            word.clear();
          };
          for (char c : best) {
            if (std::isalnum(static_cast<unsigned char>(c))) {
              word += c;
            } else {
              flush();
              out += c;
            }
          }
          flush();
          return wrap_prompt(trim(out) + ", cinematic mood");
        }
      }
      break;
    }
    case CallKind::Verify: {
      const std::string prompt = str(ctx, "prompt");
      switch (b.verifier) {
        case B::Verifier::NoChange: return "All constraints are met.\n" + wrap_answer("NO_CHANGE");
        case B::Verifier::Garbage: return "1. Yes, it is fine.";
        case B::Verifier::NeverConverge: return "Some constraints could be stronger.\n" + wrap_answer(prompt + ", refined");
        case B::Verifier::Aware: {
          std::string out = prompt;
          bool changed = false;
          for (const auto& c : string_list(ctx, "constraints")) {
            const auto pred = world_.predicate_for(c);
            if (pred && world_.mentions(out, *pred) == 0) {
              out += ", " + *pred;
              changed = true;
            }
          }
          if (!changed) return "Every constraint is satisfied.\n" + wrap_answer("NO_CHANGE");
          return "At least one constraint is unmet.\n" + wrap_answer(out);
        }
      }
      break;
    }
    case CallKind::Judge: return judge(request);
    case CallKind::Vqa: break;
  }
  return {};
}

}  // namespace t2iopt
