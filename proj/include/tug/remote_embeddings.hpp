#pragma once

#include <chrono>
#include <optional>
#include <regex>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "tug/embeddings.hpp"
#include "tug/error.hpp"

namespace tug::embeddings {

struct RemoteConfig {
  std::string endpoint;  // http://host[:port]/path
  std::string api_key;
  int timeout_seconds = 30;
  int attempts = 3;
  std::chrono::milliseconds initial_backoff{200};
};

/// Optional text-embedding provider: POST {"texts": [...]} -> {"vectors": [[...]]}.
class RemoteEmbedder {
 public:
  explicit RemoteEmbedder(RemoteConfig cfg) : cfg_(std::move(cfg)) {
    static const std::regex url(R"((https?://[^/]+)(/.*)?)");
    std::smatch m;
    if (!std::regex_match(cfg_.endpoint, m, url)) {
      throw Error(ErrorCode::invalid_argument, "embedding endpoint must look like http://host[:port]/path");
    }
    base_ = m[1].str();
    path_ = m[2].matched ? m[2].str() : "/";
  }

  std::vector<Vector> embed(const std::vector<std::string>& texts) const {
    auto backoff = cfg_.initial_backoff;
    for (int attempt = 1;; ++attempt) {
      try {
        return request(texts);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::transport_error || attempt >= cfg_.attempts) throw;
      }
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
  }

  /// Fetches vectors for `words` and stores them in a new table.
  EmbeddingTable embed_words(const std::vector<std::string>& words, std::size_t batch = 64) const {
    std::optional<EmbeddingTable> table;
    for (std::size_t i = 0; i < words.size(); i += batch) {
      std::vector<std::string> chunk(words.begin() + static_cast<std::ptrdiff_t>(i),
                                     words.begin() + static_cast<std::ptrdiff_t>(std::min(words.size(), i + batch)));
      auto vecs = embed(chunk);
      if (!table && !vecs.empty()) table.emplace(vecs.front().size());
      for (std::size_t k = 0; k < chunk.size(); ++k) {
        if (!table->contains(chunk[k])) table->set(chunk[k], vecs[k]);
      }
    }
    if (!table) throw Error(ErrorCode::invalid_argument, "no words to embed");
    return *table;
  }

 private:
  std::vector<Vector> request(const std::vector<std::string>& texts) const {
    httplib::Client client(base_);
    client.set_connection_timeout(cfg_.timeout_seconds);
    client.set_read_timeout(cfg_.timeout_seconds);
    httplib::Headers headers;
    if (!cfg_.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg_.api_key);
    const nlohmann::json body = {{"texts", texts}};
    auto res = client.Post(path_, headers, body.dump(), "application/json");
    if (!res) throw Error(ErrorCode::transport_error, "embedding request failed: " + httplib::to_string(res.error()));
    if (res->status != 200) {
      throw Error(ErrorCode::transport_error, "embedding endpoint returned HTTP " + std::to_string(res->status));
    }
    auto j = nlohmann::json::parse(res->body, nullptr, false);
    if (!j.is_object() || !j.contains("vectors") || !j["vectors"].is_array() || j["vectors"].size() != texts.size()) {
      throw Error(ErrorCode::parse_error, "embedding reply lacks one vector per text");
    }
    std::vector<Vector> out;
    for (const auto& v : j["vectors"]) out.push_back(v.get<Vector>());
    return out;
  }

  RemoteConfig cfg_;
  std::string base_;
  std::string path_;
};

}  // namespace tug::embeddings
