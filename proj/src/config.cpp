#include "okwugbe/config.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace okwugbe::config {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

IniFile IniFile::parse_string(const std::string& content, const std::string& origin) {
  IniFile ini;
  ini.origin_ = origin;
  std::istringstream in(content);
  std::string line;
  std::string section;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t comment = line.find_first_of("#;");
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw std::runtime_error(origin + ":" + std::to_string(line_no) +
                                 ": unterminated section header");
      }
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error(origin + ":" + std::to_string(line_no) +
                               ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw std::runtime_error(origin + ":" + std::to_string(line_no) + ": empty key");
    }
    ini.sections_[section][key] = value;
  }
  return ini;
}

IniFile IniFile::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_string(buf.str(), path);
}

bool IniFile::has(const std::string& section, const std::string& key) const {
  auto sit = sections_.find(section);
  return sit != sections_.end() && sit->second.count(key) > 0;
}

std::string IniFile::get(const std::string& section, const std::string& key) const {
  if (!has(section, key)) {
    throw std::runtime_error(origin_ + ": missing required key [" + section + "] " + key);
  }
  return sections_.at(section).at(key);
}

std::string IniFile::get_or(const std::string& section, const std::string& key,
                            const std::string& fallback) const {
  return has(section, key) ? sections_.at(section).at(key) : fallback;
}

double IniFile::get_double(const std::string& section, const std::string& key,
                           double fallback) const {
  if (!has(section, key)) return fallback;
  const std::string v = sections_.at(section).at(key);
  try {
    std::size_t pos = 0;
    const double out = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw std::runtime_error(origin_ + ": [" + section + "] " + key + " = \"" + v +
                             "\" is not a number");
  }
}

long IniFile::get_int(const std::string& section, const std::string& key, long fallback) const {
  if (!has(section, key)) return fallback;
  const std::string v = sections_.at(section).at(key);
  try {
    std::size_t pos = 0;
    const long out = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw std::runtime_error(origin_ + ": [" + section + "] " + key + " = \"" + v +
                             "\" is not an integer");
  }
}

bool IniFile::get_bool(const std::string& section, const std::string& key, bool fallback) const {
  if (!has(section, key)) return fallback;
  const std::string v = sections_.at(section).at(key);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw std::runtime_error(origin_ + ": [" + section + "] " + key + " = \"" + v +
                           "\" is not a boolean");
}

RunConfig RunConfig::load(const std::string& path) {
  const IniFile ini = IniFile::parse_file(path);
  const fs::path base = fs::path(path).parent_path();
  auto resolve = [&base](const std::string& p) {
    if (p.empty()) return p;
    fs::path fp(p);
    return fp.is_relative() ? (base / fp).string() : p;
  };

  RunConfig rc;
  rc.frontend.sample_rate = static_cast<int>(ini.get_int("frontend", "sample_rate", 16000));
  rc.frontend.n_fft = static_cast<int>(ini.get_int("frontend", "n_fft", 512));
  rc.frontend.hop_length = static_cast<int>(ini.get_int("frontend", "hop_length", 512));
  rc.frontend.n_mels = static_cast<int>(ini.get_int("frontend", "n_mels", 128));
  rc.frontend.log_compress = ini.get_bool("frontend", "log_compress", true);

  rc.augment.n_freq_masks = static_cast<std::size_t>(ini.get_int("augment", "n_freq_masks", 0));
  rc.augment.max_freq_mask_width =
      static_cast<std::size_t>(ini.get_int("augment", "max_freq_mask_width", 0));
  rc.augment.n_time_masks = static_cast<std::size_t>(ini.get_int("augment", "n_time_masks", 0));
  rc.augment.max_time_mask_width =
      static_cast<std::size_t>(ini.get_int("augment", "max_time_mask_width", 0));

  rc.model.n_rcnn_blocks = static_cast<std::size_t>(ini.get_int("model", "N", 5));
  rc.model.n_rnn_blocks = static_cast<std::size_t>(ini.get_int("model", "M", 3));
  rc.model.cnn_channels = static_cast<std::size_t>(ini.get_int("model", "cnn_channels", 32));
  const std::string kernel = ini.get_or("model", "kernel", "3x3");
  if (std::sscanf(kernel.c_str(), "%zux%zu", &rc.model.kernel_f, &rc.model.kernel_t) != 2) {
    throw std::runtime_error(path + ": [model] kernel must look like 3x3, got \"" + kernel +
                             "\"");
  }
  rc.model.rnn_hidden = static_cast<std::size_t>(ini.get_int("model", "embedding_size", 512));
  rc.model.dropout_p = ini.get_double("model", "dropout", 0.1);
  rc.model.n_mels = static_cast<std::size_t>(rc.frontend.n_mels);
  rc.model.stem_stride = static_cast<std::size_t>(ini.get_int("model", "stem_stride", 2));
  rc.model.stem_batch_norm = ini.get_bool("model", "stem_batch_norm", true);

  rc.training.optimizer = ini.get_or("training", "optimizer", "adamw");
  rc.training.max_lr = ini.get_double("training", "max_learning_rate", 5e-4);
  rc.training.batch_size = static_cast<std::size_t>(ini.get_int("training", "batch_size", 20));
  rc.training.epochs = static_cast<std::size_t>(ini.get_int("training", "epochs", 500));
  rc.training.patience = static_cast<std::size_t>(ini.get_int("training", "early_stopping", 100));
  const std::string schedule = ini.get_or("training", "schedule", "one_cycle");
  if (schedule == "one_cycle") {
    rc.training.schedule = train::Schedule::kOneCycle;
  } else if (schedule == "constant") {
    rc.training.schedule = train::Schedule::kConstant;
  } else {
    throw std::runtime_error(path + ": [training] schedule must be one_cycle or constant");
  }
  rc.training.seed = static_cast<std::uint64_t>(ini.get_int("training", "seed", 1));
  rc.training.grad_clip = ini.get_double("training", "grad_clip", 5.0);
  rc.training.nesterov_momentum = ini.get_double("training", "nesterov_momentum", 0.9);
  rc.training.adamw.weight_decay = ini.get_double("training", "weight_decay", 1e-4);

  rc.filter.min_duration_s = ini.get_double("data", "min_duration_s", 0.0);
  rc.filter.max_duration_s = ini.get_double("data", "max_duration_s", 1e9);
  rc.filter.max_words =
      static_cast<std::size_t>(ini.get_int("data", "max_words", 1000000000L));
  rc.filter.enabled = ini.has("data", "min_duration_s") || ini.has("data", "max_duration_s") ||
                      ini.has("data", "max_words");

  rc.charset_path = resolve(ini.get("data", "charset"));
  rc.train_manifest = resolve(ini.get_or("data", "train_manifest", ""));
  rc.val_manifest = resolve(ini.get_or("data", "val_manifest", ""));
  rc.run_dir = resolve(ini.get_or("output", "run_dir", "runs/default"));
  return rc;
}

void RunConfig::validate() const {
  frontend.validate();
  training.validate();
  if (model.n_mels != static_cast<std::size_t>(frontend.n_mels)) {
    throw std::runtime_error("config: model n_mels does not match frontend n_mels");
  }
}

std::string RunConfig::hash(std::uint64_t charset_hash) const {
  std::ostringstream canon;
  canon << frontend.sample_rate << '|' << frontend.n_fft << '|' << frontend.hop_length << '|'
        << frontend.n_mels << '|' << frontend.log_compress << '|' << model.n_rcnn_blocks << '|'
        << model.n_rnn_blocks << '|' << model.cnn_channels << '|' << model.kernel_f << '|'
        << model.kernel_t << '|' << model.rnn_hidden << '|' << model.dropout_p << '|'
        << model.stem_stride << '|' << model.stem_batch_norm << '|' << training.optimizer << '|'
        << training.max_lr << '|' << training.batch_size << '|' << charset_hash;
  const std::string s = canon.str();
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  char buf[19];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace okwugbe::config
