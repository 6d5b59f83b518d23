#include "t2iopt/config.hpp"

#include <cstdlib>
#include <fstream>

#include "t2iopt/http_backend.hpp"

namespace t2iopt {

std::string_view to_string(Variant variant) {
  switch (variant) {
    case Variant::R: return "R";
    case Variant::IR: return "IR";
    case Variant::PIR: return "PIR";
    case Variant::VPIR: return "VPIR";
  }
  return "?";
}

Variant variant_from_string(std::string_view text) {
  if (text == "R") return Variant::R;
  if (text == "IR") return Variant::IR;
  if (text == "PIR") return Variant::PIR;
  if (text == "VPIR") return Variant::VPIR;
  throw std::invalid_argument("unknown variant: " + std::string(text) + " (expected R, IR, PIR or VPIR)");
}

void RunConfig::check() const {
  if (max_t2i_calls < 1) throw std::invalid_argument("max_t2i_calls must be >= 1");
  if (judge_n < 1) throw std::invalid_argument("judge_n must be >= 1");
  if (verifier_patience < 0) throw std::invalid_argument("verifier_patience must be >= 0");
  if (dossier_cap < 1) throw std::invalid_argument("dossier_cap must be >= 1");
  if (patience && *patience < 1) throw std::invalid_argument("patience must be >= 1 when set");
  for (double t : {temperatures.text, temperatures.vqa, temperatures.judge, temperatures.critic}) {
    if (!(t >= 0.0)) throw std::invalid_argument("temperatures must be >= 0");
  }
}

nlohmann::json to_json(const RunConfig& c) {
  return {
      {"max_t2i_calls", c.max_t2i_calls},
      {"patience", c.patience ? nlohmann::json(*c.patience) : nlohmann::json(nullptr)},
      {"judge_n", c.judge_n},
      {"verifier_patience", c.verifier_patience},
      {"dossier_cap", c.dossier_cap},
      {"dvq_warn_threshold", c.dvq_warn_threshold},
      {"seed", c.seed},
      {"variant", std::string(to_string(c.variant))},
      {"temperatures",
       {{"text", c.temperatures.text},
        {"vqa", c.temperatures.vqa},
        {"judge", c.temperatures.judge},
        {"critic", c.temperatures.critic}}},
      {"deterministic_clock", c.deterministic_clock},
  };
}

RunConfig run_config_from_json(const nlohmann::json& j) {
  RunConfig c;
  if (!j.is_object()) return c;
  c.max_t2i_calls = j.value("max_t2i_calls", c.max_t2i_calls);
  if (j.contains("patience") && !j["patience"].is_null()) c.patience = j["patience"].get<int>();
  c.judge_n = j.value("judge_n", c.judge_n);
  c.verifier_patience = j.value("verifier_patience", c.verifier_patience);
  c.dossier_cap = j.value("dossier_cap", c.dossier_cap);
  c.dvq_warn_threshold = j.value("dvq_warn_threshold", c.dvq_warn_threshold);
  c.seed = j.value("seed", c.seed);
  if (j.contains("variant")) c.variant = variant_from_string(j["variant"].get<std::string>());
  if (j.contains("temperatures")) {
    const auto& t = j["temperatures"];
    c.temperatures.text = t.value("text", c.temperatures.text);
    c.temperatures.vqa = t.value("vqa", c.temperatures.vqa);
    c.temperatures.judge = t.value("judge", c.temperatures.judge);
    c.temperatures.critic = t.value("critic", c.temperatures.critic);
  }
  c.deterministic_clock = j.value("deterministic_clock", c.deterministic_clock);
  return c;
}

namespace {

BackendConfig backend_from_json(Role role, const nlohmann::json& j) {
  BackendConfig b;
  b.role = role;
  b.endpoint = j.value("endpoint", std::string(kScriptedEndpoint));
  b.provider = j.value("provider", b.provider);
  b.model_name = j.value("model", std::string{});
  b.auth_env = j.value("auth_env", std::string{});
  if (j.contains("temperature")) {
    b.temperature = j["temperature"].get<double>();
    if (*b.temperature < 0) throw ConfigError(std::string(to_string(role)) + ".temperature must be >= 0");
  }
  b.max_retries = j.value("max_retries", b.max_retries);
  if (b.max_retries < 0) throw ConfigError(std::string(to_string(role)) + ".max_retries must be >= 0");
  b.timeout = std::chrono::milliseconds(j.value("timeout_ms", static_cast<long long>(b.timeout.count())));
  b.initial_backoff =
      std::chrono::milliseconds(j.value("initial_backoff_ms", static_cast<long long>(b.initial_backoff.count())));
  if (!b.scripted()) {
    if (b.provider != "openai") {
      throw ConfigError(std::string(to_string(role)) + ": unsupported provider '" + b.provider + "'");
    }
    if (b.model_name.empty()) throw ConfigError(std::string(to_string(role)) + ": model is required");
  }
  return b;
}

RetryPolicy retry_for(const BackendConfig& b) {
  RetryPolicy r;
  r.max_retries = b.max_retries;
  r.initial_backoff = b.scripted() ? std::chrono::milliseconds(0) : b.initial_backoff;
  return r;
}

HttpSettings http_settings(const BackendConfig& b) {
  HttpSettings s;
  s.base_url = b.endpoint;
  s.model = b.model_name;
  s.timeout = b.timeout;
  if (!b.auth_env.empty()) {
    const char* key = std::getenv(b.auth_env.c_str());
    if (!key) {
      throw ConfigError(std::string(to_string(b.role)) + ": environment variable " + b.auth_env + " is not set");
    }
    s.api_key = key;
  }
  return s;
}

}  // namespace

bool AppConfig::all_scripted() const {
  for (const auto* b : {&text, &multimodal, &t2i}) {
    if (*b && !(*b)->scripted()) return false;
  }
  return true;
}

AppConfig app_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config root must be an object");
  AppConfig c;
  c.raw = j;
  try {
    if (j.contains("run")) c.run = run_config_from_json(j["run"]);
    c.run.check();
    if (j.contains("backends")) {
      const auto& b = j["backends"];
      for (auto role : {Role::TextLLM, Role::MultimodalLLM, Role::TextToImage}) {
        const std::string key(to_string(role));
        if (!b.contains(key) || b[key].is_null()) continue;
        auto cfg = backend_from_json(role, b[key]);
        if (role == Role::TextLLM) {
          if (cfg.temperature) c.run.temperatures.text = *cfg.temperature;
          c.text = cfg;
        } else if (role == Role::MultimodalLLM) {
          if (cfg.temperature) c.run.temperatures.critic = *cfg.temperature;
          c.multimodal = cfg;
        } else {
          c.t2i = cfg;
        }
      }
    }
    c.scripted_world = j.value("scripted_world", nlohmann::json::object());
    scripted_world_from_json(c.scripted_world);
    c.workers = j.value("workers", c.workers);
    if (c.workers < 1) throw ConfigError("workers must be >= 1");
    c.out_dir = j.value("out_dir", c.out_dir.string());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
  if (c.all_scripted()) c.run.deterministic_clock = true;
  c.run.backends_snapshot = {{"backends", j.value("backends", nlohmann::json::object())},
                             {"scripted_world", c.scripted_world}};
  return c;
}

AppConfig load_app_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in, nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return app_config_from_json(j);
}

nlohmann::json config_snapshot(const AppConfig& config) {
  nlohmann::json snap = config.run.backends_snapshot;
  snap["run"] = to_json(config.run);
  return snap;
}

void require_roles(const AppConfig& config, std::initializer_list<Role> roles) {
  for (auto role : roles) {
    const bool present = role == Role::TextLLM         ? config.text.has_value()
                         : role == Role::MultimodalLLM ? config.multimodal.has_value()
                                                       : config.t2i.has_value();
    if (!present) throw ConfigError("backend role not configured: " + std::string(to_string(role)));
  }
}

BuiltGateway make_gateway(const AppConfig& config) {
  BuiltGateway built;
  auto scripted = [&]() {
    if (!built.scripted) built.scripted = std::make_shared<ScriptedBackend>(scripted_world_from_json(config.scripted_world));
    return built.scripted;
  };
  auto language = [&](const std::optional<BackendConfig>& b) -> Gateway::Endpoint {
    if (!b) return {};
    if (b->scripted()) return {scripted(), retry_for(*b)};
    return {std::make_shared<HttpChatModel>(http_settings(*b)), retry_for(*b)};
  };
  Gateway::Endpoint text = language(config.text);
  Gateway::Endpoint multimodal = language(config.multimodal);
  Gateway::ImageEndpoint image;
  if (config.t2i) {
    image.retry = retry_for(*config.t2i);
    if (config.t2i->scripted()) {
      image.model = scripted();
    } else {
      image.model = std::make_shared<HttpImageModel>(http_settings(*config.t2i));
    }
  }
  built.gateway = Gateway(std::move(text), std::move(multimodal), std::move(image));
  return built;
}

}  // namespace t2iopt
