#pragma once

#include <string>
#include <vector>

#include "hedmod/model.hpp"
#include "hedmod/trainer.hpp"

namespace hedmod {

/// Everything that affects a run, stored as flat `key = value` lines.
/// '#' starts a comment; blank lines are ignored.
struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  std::size_t value_vocab_size = 10000;
  std::size_t target_vocab_size = 10000;
  std::size_t min_statements = 5;
  std::string decode = "greedy";
  std::string data_dir;
  std::string out_dir;

  /// Throws Error(kParse) for an unknown key or a malformed value.
  void set(const std::string& key, const std::string& value);
  /// "key=value" form, as used by command-line overrides.
  void apply_override(const std::string& assignment);
  void validate() const;

  std::string to_text() const;
  static RunConfig parse(const std::string& text, const std::string& origin = "<config>");
  static RunConfig load(const std::string& path);
  void save(const std::string& path) const;

  static std::vector<std::string> keys();
};

}  // namespace hedmod
