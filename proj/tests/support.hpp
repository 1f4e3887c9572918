#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "tug/config.hpp"
#include "tug/lexicon.hpp"
#include "tug/lobby.hpp"
#include "tug/session.hpp"
#include "tug/synthetic_embeddings.hpp"

namespace tug::fixtures {

inline std::string data_path(const std::string& name) { return config::default_data_dir() + "/" + name; }

/// Playable themes from the shipped lexicon with a synthetic table over every word.
inline std::shared_ptr<const session::GameContent> shipped_content(std::uint64_t seed = 7) {
  static std::mutex m;
  static std::map<std::uint64_t, std::shared_ptr<const session::GameContent>> cache;
  std::lock_guard lock(m);
  auto& slot = cache[seed];
  if (!slot) {
    auto c = std::make_shared<session::GameContent>();
    c->themes = lexicon::load_lexicon(data_path("lexicon.tsv"), 3);
    c->table = embeddings::synthetic_table(lexicon::load_lexicon(data_path("lexicon.tsv")), seed);
    slot = c;
  }
  return slot;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "tug") {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            (tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

/// Per-player frame queues standing in for sockets.
class Router {
 public:
  void deliver(const lobby::Outbox& out) {
    std::lock_guard lock(m_);
    for (const auto& o : out) boxes_[o.to].push_back(o.frame);
    cv_.notify_all();
  }

  /// Next frame for `p`, or nullopt after `wait` with nothing (or after close()).
  std::optional<std::string> next(const lobby::PlayerId& p, std::chrono::milliseconds wait) {
    std::unique_lock lock(m_);
    auto& box = boxes_[p];
    if (!cv_.wait_for(lock, wait, [&] { return !box.empty() || closed_; })) return std::nullopt;
    if (box.empty()) return std::nullopt;
    auto f = std::move(box.front());
    box.pop_front();
    return f;
  }

  void close() {
    std::lock_guard lock(m_);
    closed_ = true;
    cv_.notify_all();
  }

 private:
  std::mutex m_;
  std::condition_variable cv_;
  std::map<lobby::PlayerId, std::deque<std::string>> boxes_;
  bool closed_ = false;
};

}  // namespace tug::fixtures
