#pragma once

#include <map>
#include <optional>
#include <string>

#include "okwugbe/audio.hpp"
#include "okwugbe/model.hpp"
#include "okwugbe/training.hpp"

namespace okwugbe::config {

// Flat `key = value` text with [sections]; '#' and ';' start comments.
class IniFile {
 public:
  static IniFile parse_file(const std::string& path);
  static IniFile parse_string(const std::string& content, const std::string& origin);

  bool has(const std::string& section, const std::string& key) const;
  std::string get(const std::string& section, const std::string& key) const;
  std::string get_or(const std::string& section, const std::string& key,
                     const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  long get_int(const std::string& section, const std::string& key, long fallback) const;
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;

  const std::map<std::string, std::map<std::string, std::string>>& sections() const {
    return sections_;
  }

 private:
  std::string origin_;
  std::map<std::string, std::map<std::string, std::string>> sections_;
};

struct DataFilter {
  double min_duration_s = 0.0;
  double max_duration_s = 1e9;
  std::size_t max_words = static_cast<std::size_t>(-1);
  bool enabled = false;
};

// Union of everything a run needs; paths are resolved against the config
// file's directory.
struct RunConfig {
  audio::FrontendConfig frontend;
  model::ModelConfig model;  // charset_size is filled after loading the charset
  train::TrainConfig training;
  audio::SpecAugmentConfig augment;
  DataFilter filter;
  std::string charset_path;
  std::string train_manifest;
  std::string val_manifest;
  std::string run_dir;

  static RunConfig load(const std::string& path);

  // Cross-field checks that do not need the data on disk.
  void validate() const;

  // FNV-1a over the canonical field serialization; combined with the
  // charset hash it ties checkpoints to their run configuration.
  std::string hash(std::uint64_t charset_hash) const;
};

}  // namespace okwugbe::config
