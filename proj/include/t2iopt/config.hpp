#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "t2iopt/gateway.hpp"
#include "t2iopt/run_config.hpp"
#include "t2iopt/scripted.hpp"

namespace t2iopt {

inline constexpr std::string_view kScriptedEndpoint = "scripted";

/// One model role. Scripted endpoints ignore every network field.
struct BackendConfig {
  Role role = Role::TextLLM;
  std::string endpoint{kScriptedEndpoint};  // base URL or "scripted"
  std::string provider = "openai";
  std::string model_name;
  std::string auth_env;  // name of the variable holding the API key
  std::optional<double> temperature;
  int max_retries = 2;
  std::chrono::milliseconds timeout{60000};
  std::chrono::milliseconds initial_backoff{500};

  bool scripted() const { return endpoint == kScriptedEndpoint; }
};

struct AppConfig {
  std::optional<BackendConfig> text;
  std::optional<BackendConfig> multimodal;
  std::optional<BackendConfig> t2i;
  nlohmann::json scripted_world = nlohmann::json::object();
  RunConfig run;
  int workers = 4;
  std::filesystem::path out_dir = "runs";
  /// The parsed document, kept so records can snapshot it.
  nlohmann::json raw = nlohmann::json::object();

  bool all_scripted() const;
};

/// Throws ConfigError on schema violations. Per-role "temperature" overrides
/// the matching run temperature.
AppConfig app_config_from_json(const nlohmann::json& j);
AppConfig load_app_config(const std::filesystem::path& path);

/// Snapshot stored in every RunRecord: enough to rebuild the gateway and rerun.
nlohmann::json config_snapshot(const AppConfig& config);

/// Throws ConfigError naming the first missing role.
void require_roles(const AppConfig& config, std::initializer_list<Role> roles);

struct BuiltGateway {
  Gateway gateway;
  std::shared_ptr<ScriptedBackend> scripted;  // shared by every scripted role
};

BuiltGateway make_gateway(const AppConfig& config);

}  // namespace t2iopt
