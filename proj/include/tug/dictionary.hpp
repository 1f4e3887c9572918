#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <string>

#include "tug/error.hpp"
#include "tug/text.hpp"

namespace tug::dictionary {

/// Backing store for on-demand word definitions.
class DefinitionSource {
 public:
  virtual ~DefinitionSource() = default;
  virtual std::optional<std::string> define(const std::string& word) const = 0;
};

/// `word<TAB>definition` per line; '#' lines are comments.
class TsvDefinitions : public DefinitionSource {
 public:
  TsvDefinitions() = default;

  explicit TsvDefinitions(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io_error, "cannot open definitions " + path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (text::trim(line).empty() || line[0] == '#') continue;
      const auto tab = line.find('\t');
      if (tab == std::string::npos) {
        throw Error(ErrorCode::parse_error, path + ":" + std::to_string(line_no) + ": expected word<TAB>definition");
      }
      add(line.substr(0, tab), text::trim(line.substr(tab + 1)));
    }
  }

  void add(const std::string& word, std::string definition) {
    entries_[text::normalize_word(word)] = std::move(definition);
  }

  std::optional<std::string> define(const std::string& word) const override {
    auto it = entries_.find(text::normalize_word(word));
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t size() const { return entries_.size(); }

 private:
  std::map<std::string, std::string> entries_;
};

}  // namespace tug::dictionary
