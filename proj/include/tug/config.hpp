#pragma once

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tug/error.hpp"

#ifndef TUG_DATA_DIR
#define TUG_DATA_DIR "data"
#endif

namespace tug::config {

inline std::string default_data_dir() {
  if (const char* d = std::getenv("TUG_DATA_DIR")) return d;
  return TUG_DATA_DIR;
}

struct Config {
  // paths
  std::string lexicon = default_data_dir() + "/lexicon.tsv";
  std::string embeddings = "embeddings.tsv";
  std::string log_dir = "logs";
  std::string params = "params.txt";
  std::string definitions = default_data_dir() + "/definitions.tsv";
  std::string bfi_keying = default_data_dir() + "/bfi10_keying.tsv";
  // server
  std::string address = "127.0.0.1";
  int port = 8080;
  int selection_timeout_s = 120;
  int share_timeout_s = 60;
  int queue_eviction_s = 600;
  int drain_s = 30;
  // lexicon
  int max_rating = 3;
  // training
  double alpha = 0.1;
  double learning_rate = 1e-3;
  int batch_size = 32;
  int patience = 10;
  int max_epochs = 200;
  // simulation
  std::string scorer = "oracle";
  std::uint64_t seed = 0;
  std::string llm_endpoint;
  std::string llm_model;
  std::string llm_api_key;
  int llm_concurrency = 4;
  std::string embedding_endpoint;
};

struct Field {
  const char* key;
  std::function<void(Config&, const std::string&)> set;
  std::function<std::string(const Config&)> get;
};

namespace detail {

template <class T>
T parse_value(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    T out{};
    if constexpr (std::is_same_v<T, int>) {
      out = std::stoi(v, &used);
    } else if constexpr (std::is_same_v<T, std::uint64_t>) {
      if (!v.empty() && v[0] == '-') throw std::invalid_argument("negative");
      out = std::stoull(v, &used);
    } else {
      out = std::stod(v, &used);
    }
    if (used != v.size()) throw std::invalid_argument("trailing characters");
    return out;
  } catch (const std::exception&) {
    throw Error(ErrorCode::invalid_argument, "config value for '" + key + "' is not a valid number: " + v);
  }
}

template <class T>
Field field(const char* key, T Config::*member) {
  Field f{key, nullptr, nullptr};
  f.set = [key, member](Config& c, const std::string& v) {
    if constexpr (std::is_same_v<T, std::string>) {
      c.*member = v;
    } else {
      c.*member = parse_value<T>(key, v);
    }
  };
  f.get = [member](const Config& c) {
    if constexpr (std::is_same_v<T, std::string>) {
      return c.*member;
    } else {
      return nlohmann::json(c.*member).dump();
    }
  };
  return f;
}

}  // namespace detail

inline const std::vector<Field>& fields() {
  using detail::field;
  static const std::vector<Field> all = {
      field("lexicon", &Config::lexicon),
      field("embeddings", &Config::embeddings),
      field("log_dir", &Config::log_dir),
      field("params", &Config::params),
      field("definitions", &Config::definitions),
      field("bfi_keying", &Config::bfi_keying),
      field("address", &Config::address),
      field("port", &Config::port),
      field("selection_timeout_s", &Config::selection_timeout_s),
      field("share_timeout_s", &Config::share_timeout_s),
      field("queue_eviction_s", &Config::queue_eviction_s),
      field("drain_s", &Config::drain_s),
      field("max_rating", &Config::max_rating),
      field("alpha", &Config::alpha),
      field("learning_rate", &Config::learning_rate),
      field("batch_size", &Config::batch_size),
      field("patience", &Config::patience),
      field("max_epochs", &Config::max_epochs),
      field("scorer", &Config::scorer),
      field("seed", &Config::seed),
      field("llm_endpoint", &Config::llm_endpoint),
      field("llm_model", &Config::llm_model),
      field("llm_api_key", &Config::llm_api_key),
      field("llm_concurrency", &Config::llm_concurrency),
      field("embedding_endpoint", &Config::embedding_endpoint),
  };
  return all;
}

inline const Field& find_field(const std::string& key) {
  for (const auto& f : fields()) {
    if (key == f.key) return f;
  }
  throw Error(ErrorCode::invalid_argument, "unknown config key '" + key + "'");
}

inline void set(Config& c, const std::string& key, const std::string& value) { find_field(key).set(c, value); }
inline std::string get(const Config& c, const std::string& key) { return find_field(key).get(c); }

inline std::string env_name(const std::string& key) {
  std::string out = "TUG_";
  for (char ch : key) out.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(ch))));
  return out;
}

/// Keys from a flat JSON object; unknown keys are errors.
inline void apply_json(Config& c, const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::parse_error, "config file must hold a JSON object");
  for (const auto& [k, v] : j.items()) set(c, k, v.is_string() ? v.get<std::string>() : v.dump());
}

inline void apply_file(Config& c, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_error, "cannot open config " + path);
  auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::parse_error, "config " + path + " is not valid JSON");
  apply_json(c, j);
}

/// TUG_<KEY> variables, e.g. TUG_PORT or TUG_LLM_ENDPOINT.
inline void apply_env(Config& c, const std::function<const char*(const char*)>& getenv_fn = std::getenv) {
  for (const auto& f : fields()) {
    if (const char* v = getenv_fn(env_name(f.key).c_str())) f.set(c, v);
  }
}

/// Defaults, then the file (if any), then the environment. Flags are applied
/// by the caller afterwards.
inline Config load(const std::string& file = {},
                   const std::function<const char*(const char*)>& getenv_fn = std::getenv) {
  Config c;
  std::string path = file;
  if (path.empty()) {
    if (const char* p = getenv_fn("TUG_CONFIG")) path = p;
  }
  if (!path.empty()) apply_file(c, path);
  apply_env(c, getenv_fn);
  return c;
}

}  // namespace tug::config
