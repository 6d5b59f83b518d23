#include "t2iopt/score.hpp"

#include "t2iopt/hash.hpp"
#include "t2iopt/parallel.hpp"

namespace t2iopt {

ResponseVector answer_dvqs(Gateway& gateway, const ImageArtifact& image, const DvqSet& dvqs, const RunConfig& config,
                           std::uint64_t seed, Warnings& warnings) {
  struct Answer {
    double value;
    Warnings warnings;
  };
  auto answers = parallel_map(dvqs.size(), [&](std::size_t i) {
    Answer a{0.5, {}};
    const Dvq& q = dvqs.questions[i];
    try {
      a.value = gateway.vqa_yes_probability(image, q, config.temperatures.vqa, derive_seed(seed, "vqa", i),
                                            dvqs.user_prompt_id);
    } catch (const TransportError& e) {
      warn(a.warnings, "VQA failed for question " + std::to_string(q.index) + ": " + e.what() + "; using 0.5");
    }
    return a;
  });
  ResponseVector out;
  out.image_ref = image.id;
  for (auto& a : answers) {
    out.values.push_back(a.value);
    append(warnings, a.warnings);
  }
  return out;
}

double dsg_score(const std::vector<double>& responses) {
  if (responses.empty()) throw EmptyVectorError("dsg_score of an empty response vector");
  std::size_t yes = 0;
  for (double r : responses) yes += r >= kYesThreshold ? 1 : 0;
  return static_cast<double>(yes) / static_cast<double>(responses.size());
}

}  // namespace t2iopt
