#include "t2iopt/record.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "t2iopt/run_config.hpp"

namespace t2iopt {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json opt_string(const std::optional<std::string>& s) { return s ? json(*s) : json(nullptr); }

std::optional<std::string> get_opt_string(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<std::string>();
}

json proposal_json(const PromptProposal& p) {
  json j = {{"id", p.id},
            {"text", p.text},
            {"origin", std::string(to_string(p.origin))},
            {"iteration", p.iteration},
            {"parent", opt_string(p.parent)}};
  if (!p.baseline_name.empty()) j["baseline_name"] = p.baseline_name;
  return j;
}

PromptProposal proposal_from(const json& j) {
  PromptProposal p;
  p.id = j.at("id").get<std::string>();
  p.text = j.at("text").get<std::string>();
  p.origin = origin_from_string(j.at("origin").get<std::string>());
  p.iteration = j.at("iteration").get<int>();
  p.parent = get_opt_string(j, "parent");
  p.baseline_name = j.value("baseline_name", std::string{});
  return p;
}

json image_json(const ImageArtifact& img) {
  json j = {{"id", img.id},
            {"format", std::string(to_string(img.format))},
            {"prompt_ref", img.prompt_ref},
            {"seed", img.seed ? json(*img.seed) : json(nullptr)},
            {"file", "images/" + image_file_name(img)}};
  if (img.format == ImageFormat::FeatureSet) j["bytes"] = img.bytes;
  return j;
}

ImageArtifact image_from(const json& j, const fs::path& base_dir) {
  ImageArtifact img;
  img.id = j.at("id").get<std::string>();
  img.format = image_format_from_string(j.at("format").get<std::string>());
  img.prompt_ref = j.at("prompt_ref").get<std::string>();
  if (j.contains("seed") && !j["seed"].is_null()) img.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("bytes")) {
    img.bytes = j["bytes"].get<std::string>();
  } else if (!base_dir.empty() && j.contains("file")) {
    std::ifstream in(base_dir / j["file"].get<std::string>(), std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    img.bytes = ss.str();
  }
  return img;
}

json responses_json(const ResponseVector& r) { return {{"image_ref", r.image_ref}, {"values", r.values}}; }

ResponseVector responses_from(const json& j) {
  return {j.at("image_ref").get<std::string>(), j.at("values").get<std::vector<double>>()};
}

json candidate_json(const Candidate& c) {
  return {{"proposal", proposal_json(c.proposal)}, {"image", image_json(c.image)}, {"responses", responses_json(c.responses)}};
}

Candidate candidate_from(const json& j, const fs::path& base_dir) {
  return {proposal_from(j.at("proposal")), image_from(j.at("image"), base_dir), responses_from(j.at("responses"))};
}

json vote_json(const JudgeVote& v) {
  return {{"first_image", v.first_image},
          {"second_image", v.second_image},
          {"chosen", std::string(to_string(v.chosen))},
          {"raw_text", v.raw_text},
          {"temperature", v.temperature}};
}

JudgeVote vote_from(const json& j) {
  JudgeVote v;
  v.first_image = j.at("first_image").get<std::string>();
  v.second_image = j.at("second_image").get<std::string>();
  v.chosen = choice_from_string(j.at("chosen").get<std::string>());
  v.raw_text = j.at("raw_text").get<std::string>();
  v.temperature = j.at("temperature").get<double>();
  return v;
}

json duel_json(const DuelOutcome& d) {
  json votes = json::array();
  for (const auto& v : d.votes) votes.push_back(vote_json(v));
  return {{"challenger", d.challenger},
          {"incumbent", d.incumbent},
          {"winner", d.winner},
          {"tally", {{"challenger", d.tally.challenger}, {"incumbent", d.tally.incumbent}, {"invalid", d.tally.invalid}}},
          {"tie_broken_randomly", d.tie_broken_randomly},
          {"degenerate", d.degenerate},
          {"votes", votes}};
}

DuelOutcome duel_from(const json& j) {
  DuelOutcome d;
  d.challenger = j.at("challenger").get<std::string>();
  d.incumbent = j.at("incumbent").get<std::string>();
  d.winner = j.at("winner").get<std::string>();
  const auto& t = j.at("tally");
  d.tally = {t.at("challenger").get<int>(), t.at("incumbent").get<int>(), t.at("invalid").get<int>()};
  d.tie_broken_randomly = j.at("tie_broken_randomly").get<bool>();
  d.degenerate = j.at("degenerate").get<bool>();
  for (const auto& v : j.at("votes")) d.votes.push_back(vote_from(v));
  return d;
}

json dossier_json(const FailureDossier& d) {
  return {{"question_index", d.dvq.index},
          {"question", d.dvq.question},
          {"response", d.response},
          {"rationalization", d.rationalization},
          {"suggestion", d.suggestion},
          {"feedback", d.feedback}};
}

FailureDossier dossier_from(const json& j) {
  FailureDossier d;
  d.dvq = {j.at("question_index").get<int>(), j.at("question").get<std::string>()};
  d.response = j.at("response").get<double>();
  d.rationalization = j.at("rationalization").get<std::string>();
  d.suggestion = j.at("suggestion").get<std::string>();
  d.feedback = j.at("feedback").get<std::string>();
  return d;
}

json transcript_json(const VerifierTranscript& t) {
  json steps = json::array();
  for (const auto& s : t.steps) {
    json step = {{"outcome", std::string(to_string(s.outcome))}, {"raw_reply", s.raw_reply}};
    if (!s.revised_proposal.empty()) step["revised_proposal"] = s.revised_proposal;
    steps.push_back(step);
  }
  return {{"input_proposal", t.input_proposal}, {"output_proposal", t.output_proposal}, {"steps", steps}};
}

VerifierTranscript transcript_from(const json& j) {
  VerifierTranscript t;
  t.input_proposal = j.at("input_proposal").get<std::string>();
  t.output_proposal = j.at("output_proposal").get<std::string>();
  for (const auto& s : j.at("steps")) {
    VerifierStep step;
    step.outcome = verifier_outcome_from_string(s.at("outcome").get<std::string>());
    step.raw_reply = s.at("raw_reply").get<std::string>();
    step.revised_proposal = s.value("revised_proposal", std::string{});
    t.steps.push_back(std::move(step));
  }
  return t;
}

template <class T, class F>
json array_of(const std::vector<T>& xs, F&& f) {
  json out = json::array();
  for (const auto& x : xs) out.push_back(f(x));
  return out;
}

json iteration_json(const IterationEntry& it) {
  json generators = json::array();
  for (const auto& g : it.generators) {
    generators.push_back({{"name", g.name}, {"status", g.status}, {"proposal", opt_string(g.proposal)}});
  }
  return {
      {"iteration", it.iteration},
      {"generators", generators},
      {"dossiers", array_of(it.dossiers, dossier_json)},
      {"proposals", array_of(it.proposals, proposal_json)},
      {"verifier", array_of(it.verifier, transcript_json)},
      {"images", array_of(it.images, image_json)},
      {"responses", array_of(it.responses, responses_json)},
      {"scores", it.scores},
      {"tournament", array_of(it.tournament, duel_json)},
      {"incumbent_duel", it.incumbent_duel ? duel_json(*it.incumbent_duel) : json(nullptr)},
      {"incumbent_before", opt_string(it.incumbent_before)},
      {"incumbent_after", opt_string(it.incumbent_after)},
      {"t2i_calls_used", it.t2i_calls_used},
      {"non_improving_steps", it.non_improving_steps},
      {"warnings", it.warnings},
  };
}

IterationEntry iteration_from(const json& j, const fs::path& base_dir) {
  IterationEntry it;
  it.iteration = j.at("iteration").get<int>();
  for (const auto& g : j.at("generators")) {
    it.generators.push_back({g.at("name").get<std::string>(), g.at("status").get<std::string>(),
                             get_opt_string(g, "proposal")});
  }
  for (const auto& d : j.at("dossiers")) it.dossiers.push_back(dossier_from(d));
  for (const auto& p : j.at("proposals")) it.proposals.push_back(proposal_from(p));
  for (const auto& t : j.at("verifier")) it.verifier.push_back(transcript_from(t));
  for (const auto& i : j.at("images")) it.images.push_back(image_from(i, base_dir));
  for (const auto& r : j.at("responses")) it.responses.push_back(responses_from(r));
  it.scores = j.at("scores").get<std::vector<double>>();
  for (const auto& d : j.at("tournament")) it.tournament.push_back(duel_from(d));
  if (!j.at("incumbent_duel").is_null()) it.incumbent_duel = duel_from(j["incumbent_duel"]);
  it.incumbent_before = get_opt_string(j, "incumbent_before");
  it.incumbent_after = get_opt_string(j, "incumbent_after");
  it.t2i_calls_used = j.at("t2i_calls_used").get<int>();
  it.non_improving_steps = j.at("non_improving_steps").get<int>();
  it.warnings = j.at("warnings").get<std::vector<std::string>>();
  return it;
}

std::string sanitize(std::string s) {
  for (char& c : s) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
    if (!ok) c = '_';
  }
  return s;
}

void check_duel(const DuelOutcome& d, const RunRecord& r, const std::string& where, std::vector<std::string>& out) {
  const std::size_t total = d.votes.size();
  if (total == 0 || total % 2 != 0) {
    out.push_back(where + ": duel has " + std::to_string(total) + " votes, expected 2n");
    return;
  }
  const int n = static_cast<int>(total / 2);
  const ImageArtifact* ci = nullptr;
  const ImageArtifact* ii = nullptr;
  for (const auto* img : {r.find_image(d.votes.front().first_image), r.find_image(d.votes.front().second_image)}) {
    if (!img) continue;
    if (img->prompt_ref == d.challenger) ci = img;
    if (img->prompt_ref == d.incumbent) ii = img;
  }
  if (!ci || !ii) {
    out.push_back(where + ": duel images do not resolve to its participants");
  } else {
    for (std::size_t i = 0; i < total; ++i) {
      const bool challenger_first = static_cast<int>(i) < n;
      const auto& want_a = challenger_first ? ci->id : ii->id;
      const auto& want_b = challenger_first ? ii->id : ci->id;
      if (d.votes[i].first_image != want_a || d.votes[i].second_image != want_b) {
        out.push_back(where + ": vote " + std::to_string(i) + " breaks the position schedule");
      }
    }
  }
  const VoteTally t = tally_votes(d.votes, n);
  if (t.challenger != d.tally.challenger || t.incumbent != d.tally.incumbent || t.invalid != d.tally.invalid) {
    out.push_back(where + ": stored tally does not match the votes");
  }
  if (d.winner != d.challenger && d.winner != d.incumbent) out.push_back(where + ": winner is not a participant");
  if (t.challenger > t.incumbent && d.winner != d.challenger) out.push_back(where + ": majority winner overturned");
  if (t.challenger < t.incumbent && d.winner != d.incumbent) out.push_back(where + ": majority winner overturned");
  const bool all_invalid = t.challenger == 0 && t.incumbent == 0;
  if (all_invalid && (!d.degenerate || d.winner != d.incumbent)) {
    out.push_back(where + ": all-invalid duel must keep the incumbent");
  }
  if (d.tie_broken_randomly != (t.challenger == t.incumbent && !all_invalid)) {
    out.push_back(where + ": tie flag inconsistent with tally");
  }
}

}  // namespace

const PromptProposal* RunRecord::find_proposal(const std::string& id) const {
  for (const auto& it : iterations) {
    for (const auto& p : it.proposals) {
      if (p.id == id) return &p;
    }
  }
  return nullptr;
}

const ImageArtifact* RunRecord::find_image(const std::string& id) const {
  for (const auto& it : iterations) {
    for (const auto& img : it.images) {
      if (img.id == id) return &img;
    }
  }
  return nullptr;
}

std::string image_file_name(const ImageArtifact& image) {
  return image.id + (image.format == ImageFormat::Png ? ".png" : ".features");
}

json to_json(const RunRecord& r) {
  json dvqs = nullptr;
  if (r.dvqs) {
    dvqs = {{"user_prompt_id", r.dvqs->user_prompt_id},
            {"questions", array_of(r.dvqs->questions, [](const Dvq& q) {
               return json{{"index", q.index}, {"question", q.question}};
             })}};
  }
  return {
      {"schema_version", r.schema_version},
      {"method", r.method},
      {"user_prompt", {{"id", r.user_prompt.id}, {"text", r.user_prompt.text}, {"split", r.user_prompt.split}}},
      {"dvqs", dvqs},
      {"iterations", array_of(r.iterations, iteration_json)},
      {"final", r.final ? candidate_json(*r.final) : json(nullptr)},
      {"final_score", r.final_score ? json(*r.final_score) : json(nullptr)},
      {"status", r.status},
      {"error", r.error},
      {"stop_reason", r.stop_reason},
      {"t2i_calls_used", r.t2i_calls_used},
      {"config", r.config},
      {"warnings", r.warnings},
      {"started_at", r.started_at},
      {"finished_at", r.finished_at},
  };
}

RunRecord record_from_json(const json& j, const fs::path& base_dir) {
  RunRecord r;
  r.schema_version = j.value("schema_version", kRecordSchemaVersion);
  r.method = j.at("method").get<std::string>();
  const auto& up = j.at("user_prompt");
  r.user_prompt = {up.at("id").get<std::string>(), up.at("text").get<std::string>(), up.value("split", std::string{})};
  if (!j.at("dvqs").is_null()) {
    DvqSet set;
    set.user_prompt_id = j["dvqs"].at("user_prompt_id").get<std::string>();
    for (const auto& q : j["dvqs"].at("questions")) {
      set.questions.push_back({q.at("index").get<int>(), q.at("question").get<std::string>()});
    }
    r.dvqs = std::move(set);
  }
  for (const auto& it : j.at("iterations")) r.iterations.push_back(iteration_from(it, base_dir));
  if (!j.at("final").is_null()) r.final = candidate_from(j["final"], base_dir);
  if (!j.at("final_score").is_null()) r.final_score = j["final_score"].get<double>();
  r.status = j.at("status").get<std::string>();
  r.error = j.value("error", std::string{});
  r.stop_reason = j.value("stop_reason", std::string{});
  r.t2i_calls_used = j.at("t2i_calls_used").get<int>();
  r.config = j.value("config", json::object());
  r.warnings = j.value("warnings", std::vector<std::string>{});
  r.started_at = j.value("started_at", std::string{});
  r.finished_at = j.value("finished_at", std::string{});
  return r;
}

std::vector<std::string> validate_record(const RunRecord& r) {
  std::vector<std::string> out;
  const json run = r.config.value("run", json::object());
  const int budget = run.value("max_t2i_calls", 8);
  if (r.t2i_calls_used > budget) out.push_back("budget exceeded");
  int prev_calls = 0;
  for (const auto& it : r.iterations) {
    if (it.t2i_calls_used < prev_calls) out.push_back("t2i call counter decreased at step " + std::to_string(it.iteration));
    if (it.t2i_calls_used > budget) out.push_back("budget exceeded at step " + std::to_string(it.iteration));
    prev_calls = it.t2i_calls_used;
  }
  if (!r.iterations.empty() && r.iterations.back().t2i_calls_used != r.t2i_calls_used) {
    out.push_back("final t2i call count does not match the last step");
  }

  // Provenance.
  for (const auto& it : r.iterations) {
    for (const auto& p : it.proposals) {
      std::set<std::string> seen;
      const PromptProposal* cur = &p;
      while (cur->parent) {
        if (!seen.insert(cur->id).second) {
          out.push_back("proposal " + p.id + " has a cyclic parent chain");
          break;
        }
        const PromptProposal* parent = r.find_proposal(*cur->parent);
        if (!parent) {
          out.push_back("proposal " + cur->id + " references a missing parent");
          break;
        }
        if (parent->iteration > cur->iteration) out.push_back("proposal " + cur->id + " is older than its parent");
        cur = parent;
      }
      if (!cur->parent && cur->iteration != 0) out.push_back("proposal " + p.id + " does not descend from step 0");
    }
    for (const auto& img : it.images) {
      if (!r.find_proposal(img.prompt_ref)) out.push_back("image " + img.id + " references a missing proposal");
    }
    if (it.responses.size() != it.images.size() || it.scores.size() != it.images.size()) {
      out.push_back("step " + std::to_string(it.iteration) + ": responses/scores not aligned with images");
    }
    for (std::size_t i = 0; i < it.responses.size(); ++i) {
      const auto& rv = it.responses[i];
      if (i < it.images.size() && rv.image_ref != it.images[i].id) out.push_back("response vector misaligned");
      if (r.dvqs && rv.values.size() != r.dvqs->size()) out.push_back("response vector length mismatch");
      for (double v : rv.values) {
        if (!(v >= 0.0 && v <= 1.0)) out.push_back("response value outside [0, 1]");
      }
    }
  }

  // Incumbent trace.
  const bool comparator = r.method.rfind("baseline:", 0) != 0 && r.method != "IR" && r.method != "R";
  std::optional<std::string> prev;
  for (const auto& it : r.iterations) {
    const std::string where = "step " + std::to_string(it.iteration);
    for (const auto& d : it.tournament) check_duel(d, r, where + " tournament", out);
    if (it.incumbent_duel) check_duel(*it.incumbent_duel, r, where + " incumbent duel", out);
    if (it.incumbent_before != prev) out.push_back(where + ": incumbent_before does not continue the trace");
    if (it.incumbent_after && !r.find_proposal(*it.incumbent_after)) out.push_back(where + ": unknown incumbent");
    if (comparator && it.incumbent_after != it.incumbent_before) {
      if (!it.incumbent_before) {
        if (it.iteration != 0) out.push_back(where + ": incumbent assigned after step 0 without a duel");
      } else if (!it.incumbent_duel || !it.incumbent_duel->challenger_won() ||
                 it.incumbent_duel->challenger != it.incumbent_after.value_or("") ||
                 it.incumbent_duel->incumbent != *it.incumbent_before) {
        out.push_back(where + ": incumbent changed without a won duel");
      }
    }
    if (comparator && it.incumbent_duel && it.incumbent_duel->challenger_won() &&
        it.incumbent_after != it.incumbent_duel->challenger) {
      out.push_back(where + ": won duel did not replace the incumbent");
    }
    prev = it.incumbent_after;
  }
  if (r.final) {
    if (r.final->proposal.id != prev.value_or("")) out.push_back("final result differs from the last incumbent");
    if (r.final->image.prompt_ref != r.final->proposal.id) out.push_back("final image does not belong to final prompt");
  } else if (r.ok()) {
    out.push_back("successful run has no final result");
  }
  return out;
}

std::string timestamp_now(bool deterministic) {
  std::time_t t = 0;
  if (!deterministic) t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string run_directory_name(const RunRecord& record) {
  std::string ts;
  for (char c : record.started_at) {
    if (c != '-' && c != ':') ts += c;
  }
  return sanitize(record.user_prompt.id + "_" + ts);
}

fs::path write_run(const RunRecord& record, const fs::path& out_root) {
  const fs::path dir = out_root / run_directory_name(record);
  fs::create_directories(dir / "images");
  std::set<std::string> written;
  auto write_image = [&](const ImageArtifact& img) {
    if (!written.insert(img.id).second) return;
    std::ofstream f(dir / "images" / image_file_name(img), std::ios::binary);
    f.write(img.bytes.data(), static_cast<std::streamsize>(img.bytes.size()));
  };
  for (const auto& it : record.iterations) {
    for (const auto& img : it.images) write_image(img);
  }
  if (record.final) write_image(record.final->image);
  std::ofstream f(dir / "record.json");
  f << to_json(record).dump(2) << '\n';
  if (!f) throw std::runtime_error("failed to write " + (dir / "record.json").string());
  return dir;
}

RunRecord load_run(const fs::path& run_dir) {
  std::ifstream in(run_dir / "record.json");
  if (!in) throw std::runtime_error("no record.json in " + run_dir.string());
  return record_from_json(json::parse(in), run_dir);
}

std::vector<fs::path> list_runs(const fs::path& root) {
  std::vector<fs::path> out;
  if (fs::exists(root / "record.json")) return {root};
  if (!fs::is_directory(root)) return out;
  for (const auto& e : fs::directory_iterator(root)) {
    if (e.is_directory() && fs::exists(e.path() / "record.json")) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace t2iopt
