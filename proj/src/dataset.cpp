#include "t2iopt/dataset.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace t2iopt {

std::vector<UserPrompt> parse_dataset(std::string_view contents) {
  std::vector<UserPrompt> out;
  std::istringstream in{std::string(contents)};
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t.front() != '{') {
      out.push_back(UserPrompt::make(t));
      continue;
    }
    try {
      const auto j = nlohmann::json::parse(t);
      const std::string id = j.contains("id") && !j["id"].is_null()
                                 ? (j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump())
                                 : std::string{};
      out.push_back(UserPrompt::make(j.at("prompt").get<std::string>(), id, j.value("split", std::string{})));
    } catch (const nlohmann::json::exception& e) {
      throw DomainError("dataset line " + std::to_string(number) + ": " + e.what());
    } catch (const DomainError& e) {
      throw DomainError("dataset line " + std::to_string(number) + ": " + e.what());
    }
  }
  return out;
}

std::vector<UserPrompt> load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open dataset " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_dataset(ss.str());
}

void write_dataset_jsonl(const std::filesystem::path& path, const std::vector<UserPrompt>& prompts) {
  std::ofstream out(path);
  for (const auto& p : prompts) {
    out << nlohmann::json{{"id", p.id}, {"prompt", p.text}, {"split", p.split}}.dump() << '\n';
  }
  if (!out) throw DomainError("failed to write " + path.string());
}

}  // namespace t2iopt
