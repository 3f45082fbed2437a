#pragma once

#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "okwugbe/audio.hpp"
#include "okwugbe/model.hpp"
#include "okwugbe/okwp.hpp"
#include "okwugbe/text.hpp"

namespace okwugbe::checkpoint {

// A checkpoint is <base>.okwp (parameters + buffers) plus <base>.json, a
// sidecar carrying everything inference needs: model config, frontend
// config, the charset symbols and their hash, and training metadata.
struct Sidecar {
  model::ModelConfig model_cfg;
  audio::FrontendConfig frontend_cfg;
  std::vector<std::string> charset_symbols;
  std::uint64_t charset_hash = 0;
  std::size_t epoch = 0;
  double val_wer = -1.0;
  std::string config_hash;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["model"] = model_cfg.to_json();
    j["frontend"] = {{"sample_rate", frontend_cfg.sample_rate},
                     {"n_fft", frontend_cfg.n_fft},
                     {"hop_length", frontend_cfg.hop_length},
                     {"n_mels", frontend_cfg.n_mels},
                     {"log_compress", frontend_cfg.log_compress}};
    j["charset"] = charset_symbols;
    char buf[19];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(charset_hash));
    j["charset_hash"] = buf;
    j["epoch"] = epoch;
    j["val_wer"] = val_wer;
    j["config_hash"] = config_hash;
    return j;
  }

  static Sidecar from_json(const nlohmann::json& j) {
    Sidecar s;
    s.model_cfg = model::ModelConfig::from_json(j.at("model"));
    const auto& f = j.at("frontend");
    s.frontend_cfg.sample_rate = f.at("sample_rate").get<int>();
    s.frontend_cfg.n_fft = f.at("n_fft").get<int>();
    s.frontend_cfg.hop_length = f.at("hop_length").get<int>();
    s.frontend_cfg.n_mels = f.at("n_mels").get<int>();
    s.frontend_cfg.log_compress = f.at("log_compress").get<bool>();
    s.charset_symbols = j.at("charset").get<std::vector<std::string>>();
    s.charset_hash = std::stoull(j.at("charset_hash").get<std::string>(), nullptr, 16);
    s.epoch = j.at("epoch").get<std::size_t>();
    s.val_wer = j.at("val_wer").get<double>();
    s.config_hash = j.at("config_hash").get<std::string>();
    return s;
  }
};

template <typename T>
void save(const std::string& base_path, const model::AcousticModel<T>& m, const Sidecar& sidecar) {
  okwp::write(base_path + ".okwp", m.params().to_entries());
  std::ofstream out(base_path + ".json");
  if (!out) throw std::runtime_error("cannot create checkpoint sidecar: " + base_path + ".json");
  out << sidecar.to_json().dump(2) << '\n';
}

inline Sidecar load_sidecar(const std::string& base_path) {
  std::ifstream in(base_path + ".json");
  if (!in) throw std::runtime_error("cannot open checkpoint sidecar: " + base_path + ".json");
  nlohmann::json j;
  in >> j;
  Sidecar s = Sidecar::from_json(j);
  const text::CharSet cs(s.charset_symbols);
  if (cs.hash() != s.charset_hash) {
    throw std::runtime_error(base_path + ": sidecar charset does not match its recorded hash");
  }
  return s;
}

template <typename T>
struct Loaded {
  model::AcousticModel<T> model;
  Sidecar sidecar;
};

template <typename T>
Loaded<T> load(const std::string& base_path) {
  Sidecar s = load_sidecar(base_path);
  model::AcousticModel<T> m(s.model_cfg, 0);
  m.params().load_entries(okwp::read(base_path + ".okwp"));
  return {std::move(m), std::move(s)};
}

}  // namespace okwugbe::checkpoint
