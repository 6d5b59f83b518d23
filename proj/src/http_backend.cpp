#include "t2iopt/http_backend.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include <httplib.h>
#include <openssl/evp.h>

namespace t2iopt {

namespace {

struct Url {
  std::string origin;  // scheme://host[:port]
  std::string path;    // without trailing slash
};

Url split_url(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) throw ConfigError("endpoint is not a URL: " + url);
  const auto slash = url.find('/', scheme + 3);
  Url u;
  u.origin = url.substr(0, slash);
  u.path = slash == std::string::npos ? "" : url.substr(slash);
  while (!u.path.empty() && u.path.back() == '/') u.path.pop_back();
  return u;
}

nlohmann::json post(const HttpSettings& s, const std::string& route, const nlohmann::json& body) {
  const Url u = split_url(s.base_url);
  httplib::Client client(u.origin);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(s.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(s.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  httplib::Headers headers;
  if (!s.api_key.empty()) headers.emplace("Authorization", "Bearer " + s.api_key);
  auto res = client.Post(u.path + route, headers, body.dump(), "application/json");
  if (!res) throw TransportError("request to " + s.base_url + route + " failed: " + httplib::to_string(res.error()));
  if (res->status < 200 || res->status >= 300) {
    throw TransportError("HTTP " + std::to_string(res->status) + " from " + s.base_url + route);
  }
  try {
    return nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::parse_error&) {
    throw TransportError("non-JSON response from " + s.base_url + route);
  }
}

std::string lower_trim(std::string s) {
  s.erase(std::remove_if(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c) || std::ispunct(c); }),
          s.end());
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

}  // namespace

std::string base64_encode(std::string_view bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(bytes.data()), static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::string base64_decode(std::string_view text) {
  std::string clean;
  for (char c : text) {
    if (!std::isspace(static_cast<unsigned char>(c))) clean += c;
  }
  if (clean.size() % 4 != 0) throw TransportError("malformed base64 payload");
  std::string out(3 * clean.size() / 4, '\0');
  const int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(clean.data()), static_cast<int>(clean.size()));
  if (n < 0) throw TransportError("malformed base64 payload");
  std::size_t pad = 0;
  if (!clean.empty() && clean.back() == '=') ++pad;
  if (clean.size() > 1 && clean[clean.size() - 2] == '=') ++pad;
  out.resize(static_cast<std::size_t>(n) - pad);
  return out;
}

nlohmann::json HttpChatModel::build_body(const ModelRequest& request) const {
  nlohmann::json content = nlohmann::json::array();
  std::size_t pos = 0;
  const std::string& p = request.prompt;
  auto push_text = [&](std::string_view t) {
    if (!t.empty()) content.push_back({{"type", "text"}, {"text", std::string(t)}});
  };
  while (pos < p.size()) {
    const auto open = p.find("<image_", pos);
    if (open == std::string::npos) break;
    const auto close = p.find('>', open);
    if (close == std::string::npos) break;
    int index = 0;
    try {
      index = std::stoi(p.substr(open + 7, close - open - 7));
    } catch (const std::exception&) {
      index = 0;
    }
    if (index < 1 || static_cast<std::size_t>(index) > request.images.size()) {
      push_text(std::string_view(p).substr(pos, close + 1 - pos));
      pos = close + 1;
      continue;
    }
    push_text(std::string_view(p).substr(pos, open - pos));
    const auto& img = request.images[static_cast<std::size_t>(index - 1)];
    content.push_back({{"type", "image_url"},
                       {"image_url", {{"url", "data:image/png;base64," + base64_encode(img.bytes)}}}});
    pos = close + 1;
  }
  push_text(std::string_view(p).substr(std::min(pos, p.size())));

  nlohmann::json body = {
      {"model", settings_.model},
      {"messages", nlohmann::json::array({{{"role", "user"}, {"content", content}}})},
      {"temperature", request.temperature},
      {"seed", static_cast<std::int64_t>(request.seed & 0x7fffffffffffffffULL)},
  };
  if (request.kind == CallKind::Vqa) {
    body["logprobs"] = true;
    body["top_logprobs"] = 5;
    body["max_tokens"] = 1;
  }
  return body;
}

ModelReply HttpChatModel::parse_body(const nlohmann::json& body) {
  if (!body.contains("choices") || body["choices"].empty()) throw TransportError("reply has no choices");
  const auto& choice = body["choices"][0];
  ModelReply reply;
  reply.text = choice.value("/message/content"_json_pointer, std::string{});
  const auto lp = nlohmann::json::json_pointer("/logprobs/content/0/top_logprobs");
  if (choice.contains(lp) && choice.at(lp).is_array()) {
    double yes = 0.0;
    double no = 0.0;
    for (const auto& entry : choice.at(lp)) {
      const std::string tok = lower_trim(entry.value("token", std::string{}));
      const double prob = std::exp(entry.value("logprob", -1e9));
      if (tok == "yes") yes += prob;
      if (tok == "no") no += prob;
    }
    if (yes + no > 0.0) reply.yes_probability = yes / (yes + no);
  }
  return reply;
}

ModelReply HttpChatModel::complete(const ModelRequest& request) {
  return parse_body(post(settings_, "/chat/completions", build_body(request)));
}

RenderedImage HttpImageModel::render(std::string_view prompt, std::uint64_t) {
  const nlohmann::json body = {
      {"model", settings_.model}, {"prompt", std::string(prompt)}, {"n", 1}, {"response_format", "b64_json"}};
  const auto reply = post(settings_, "/images/generations", body);
  const auto ptr = nlohmann::json::json_pointer("/data/0/b64_json");
  if (!reply.contains(ptr)) throw TransportError("image reply has no b64_json payload");
  return {base64_decode(reply.at(ptr).get<std::string>()), ImageFormat::Png};
}

}  // namespace t2iopt
