// Copyright 2026 The mtcr-vc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mtcr/config.hpp"

#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "mtcr/errors.hpp"

namespace mtcr {

using nlohmann::json;

namespace {

long long ipow(long long b, int e) {
  long long r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

long long lcm_ll(long long a, long long b) { return a / std::gcd(a, b) * b; }

}  // namespace

int ModelConfig::retrieval_multiple() const {
  long long m = 1;
  for (int l = 1; l <= n_tcr_blocks; ++l) {
    const long long lvl = ipow(gamma_t, l) * gamma_tr[static_cast<size_t>(l - 1)];
    m = lcm_ll(m, lvl);
  }
  return static_cast<int>(m);
}

int ModelConfig::temporal_multiple() const {
  return static_cast<int>(lcm_ll(retrieval_multiple(), kPitchDownsample));
}

int ModelConfig::channels_at(int level) const {
  return prenet_channels / static_cast<int>(ipow(gamma_c, level - 1));
}

int ModelConfig::active_blocks() const {
  return ablation.active_blocks < 0 ? n_tcr_blocks : ablation.active_blocks;
}

ModelConfig validate_config(ModelConfig cfg) {
  std::vector<std::string> bad;
  auto check = [&](bool ok, const std::string& msg) {
    if (!ok) bad.push_back(msg);
  };

  check(cfg.mel_dim >= 1, "mel_dim must be >= 1");
  check(cfg.bnf_dim >= 1, "bnf_dim must be >= 1");
  check(cfg.pitch_dim >= 1, "pitch_dim must be >= 1");
  check(cfg.xvec_dim >= 1, "xvec_dim must be >= 1");
  check(cfg.model_dim >= 1, "model_dim must be >= 1");
  check(cfg.prenet_channels >= 1, "prenet_channels must be >= 1");
  check(cfg.n_tcr_blocks >= 1, "n_tcr_blocks must be >= 1");
  check(cfg.gamma_t >= 1, "gamma_t must be >= 1");
  check(cfg.gamma_c >= 1, "gamma_c must be >= 1");
  check(cfg.frame_shift_ms > 0, "frame_shift_ms must be > 0");
  check(cfg.lr > 0, "lr must be > 0");
  check(cfg.lr_decay > 0 && cfg.lr_decay <= 1, "lr_decay must be in (0, 1]");
  check(cfg.lr_decay_steps >= 1, "lr_decay_steps must be >= 1");
  check(cfg.loss_weights.lambda_mel >= 0, "lambda_mel must be >= 0");
  check(cfg.loss_weights.lambda_sty >= 0, "lambda_sty must be >= 0");
  check(cfg.loss_weights.lambda_con >= 0, "lambda_con must be >= 0");
  check(cfg.loss_weights.lambda_spk >= 0, "lambda_spk must be >= 0");

  if (cfg.gamma_tr.size() != static_cast<size_t>(cfg.n_tcr_blocks)) {
    bad.push_back("gamma_tr must have exactly n_tcr_blocks entries (got " +
                  std::to_string(cfg.gamma_tr.size()) + ", want " +
                  std::to_string(cfg.n_tcr_blocks) + ")");
  } else {
    for (size_t i = 0; i < cfg.gamma_tr.size(); ++i)
      check(cfg.gamma_tr[i] >= 1,
            "gamma_tr[" + std::to_string(i) + "] must be >= 1");
  }

  if (cfg.gamma_c >= 1 && cfg.n_tcr_blocks >= 1 && cfg.prenet_channels >= 1) {
    const long long div = ipow(cfg.gamma_c, cfg.n_tcr_blocks);
    if (cfg.prenet_channels % div != 0)
      bad.push_back("prenet_channels=" + std::to_string(cfg.prenet_channels) +
                    " not divisible by gamma_c^n_tcr_blocks=" + std::to_string(div));
  }

  auto norm_flags = [&](std::vector<bool>& f, const char* name) {
    if (f.empty()) {
      f.assign(static_cast<size_t>(cfg.n_tcr_blocks), false);
    } else if (f.size() != static_cast<size_t>(cfg.n_tcr_blocks)) {
      bad.push_back(std::string(name) + " must have n_tcr_blocks entries");
    }
  };
  norm_flags(cfg.ablation.uniform_temporal_attn, "ablation.uniform_temporal_attn");
  norm_flags(cfg.ablation.uniform_channel_attn, "ablation.uniform_channel_attn");

  if (cfg.ablation.active_blocks < 0) cfg.ablation.active_blocks = cfg.n_tcr_blocks;
  check(cfg.ablation.active_blocks >= 1 && cfg.ablation.active_blocks <= cfg.n_tcr_blocks,
        "ablation.active_blocks must be in [1, n_tcr_blocks]");

  if (!bad.empty()) throw ConfigError(bad);
  return cfg;
}

ModelConfig default_config() { return validate_config(ModelConfig{}); }

ModelConfig tiny_config() {
  ModelConfig c;
  c.mel_dim = 6;
  c.bnf_dim = 8;
  c.pitch_dim = 1;
  c.xvec_dim = 5;
  c.model_dim = 8;
  c.prenet_channels = 8;
  c.n_tcr_blocks = 2;
  c.gamma_t = 2;
  c.gamma_c = 2;
  c.gamma_tr = {2, 1};
  c.lr = 1e-3;
  c.seed = 7;
  return validate_config(c);
}

ModelConfig desk_config() {
  ModelConfig c;
  c.mel_dim = 24;
  c.bnf_dim = 32;
  c.pitch_dim = 1;
  c.xvec_dim = 16;
  c.model_dim = 48;
  c.prenet_channels = 64;
  c.n_tcr_blocks = 3;
  c.gamma_t = 4;
  c.gamma_c = 2;
  c.gamma_tr = {16, 4, 1};
  c.lr = 2e-3;
  c.seed = 1234;
  return validate_config(c);
}

namespace {

void reject_unknown(const json& j, const std::vector<std::string>& allowed,
                    const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const auto& k : allowed)
      if (it.key() == k) {
        ok = true;
        break;
      }
    if (!ok) throw ConfigError("unknown config key: " + where + it.key());
  }
}

template <typename T>
void maybe(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

ModelConfig config_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config root must be a JSON object");

  reject_unknown(j, {"mel_dim", "bnf_dim", "pitch_dim", "xvec_dim", "model_dim",
                     "prenet_channels", "n_tcr_blocks", "gamma_t", "gamma_c", "gamma_tr",
                     "frame_shift_ms", "loss_weights", "lr", "lr_decay", "lr_decay_steps",
                     "ablation", "seed"},
                 "");

  ModelConfig c;
  try {
    maybe(j, "mel_dim", c.mel_dim);
    maybe(j, "bnf_dim", c.bnf_dim);
    maybe(j, "pitch_dim", c.pitch_dim);
    maybe(j, "xvec_dim", c.xvec_dim);
    maybe(j, "model_dim", c.model_dim);
    maybe(j, "prenet_channels", c.prenet_channels);
    maybe(j, "n_tcr_blocks", c.n_tcr_blocks);
    maybe(j, "gamma_t", c.gamma_t);
    maybe(j, "gamma_c", c.gamma_c);
    maybe(j, "gamma_tr", c.gamma_tr);
    maybe(j, "frame_shift_ms", c.frame_shift_ms);
    maybe(j, "lr", c.lr);
    maybe(j, "lr_decay", c.lr_decay);
    maybe(j, "lr_decay_steps", c.lr_decay_steps);
    maybe(j, "seed", c.seed);

    if (j.contains("loss_weights")) {
      const json& w = j.at("loss_weights");
      reject_unknown(w, {"lambda_mel", "lambda_sty", "lambda_con", "lambda_spk"},
                     "loss_weights.");
      maybe(w, "lambda_mel", c.loss_weights.lambda_mel);
      maybe(w, "lambda_sty", c.loss_weights.lambda_sty);
      maybe(w, "lambda_con", c.loss_weights.lambda_con);
      maybe(w, "lambda_spk", c.loss_weights.lambda_spk);
    }
    if (j.contains("ablation")) {
      const json& a = j.at("ablation");
      reject_unknown(a, {"uniform_temporal_attn", "uniform_channel_attn", "active_blocks",
                         "disable_cycle", "disable_style_loss", "disable_content_loss",
                         "disable_speaker_loss"},
                     "ablation.");
      maybe(a, "uniform_temporal_attn", c.ablation.uniform_temporal_attn);
      maybe(a, "uniform_channel_attn", c.ablation.uniform_channel_attn);
      maybe(a, "active_blocks", c.ablation.active_blocks);
      maybe(a, "disable_cycle", c.ablation.disable_cycle);
      maybe(a, "disable_style_loss", c.ablation.disable_style_loss);
      maybe(a, "disable_content_loss", c.ablation.disable_content_loss);
      maybe(a, "disable_speaker_loss", c.ablation.disable_speaker_loss);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config type error: ") + e.what());
  }
  return validate_config(c);
}

ModelConfig config_from_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return config_from_json_text(ss.str());
}

std::string config_to_json_text(const ModelConfig& cfg) {
  json j;
  j["mel_dim"] = cfg.mel_dim;
  j["bnf_dim"] = cfg.bnf_dim;
  j["pitch_dim"] = cfg.pitch_dim;
  j["xvec_dim"] = cfg.xvec_dim;
  j["model_dim"] = cfg.model_dim;
  j["prenet_channels"] = cfg.prenet_channels;
  j["n_tcr_blocks"] = cfg.n_tcr_blocks;
  j["gamma_t"] = cfg.gamma_t;
  j["gamma_c"] = cfg.gamma_c;
  j["gamma_tr"] = cfg.gamma_tr;
  j["frame_shift_ms"] = cfg.frame_shift_ms;
  j["loss_weights"] = {{"lambda_mel", cfg.loss_weights.lambda_mel},
                       {"lambda_sty", cfg.loss_weights.lambda_sty},
                       {"lambda_con", cfg.loss_weights.lambda_con},
                       {"lambda_spk", cfg.loss_weights.lambda_spk}};
  j["lr"] = cfg.lr;
  j["lr_decay"] = cfg.lr_decay;
  j["lr_decay_steps"] = cfg.lr_decay_steps;
  j["ablation"] = {{"uniform_temporal_attn", cfg.ablation.uniform_temporal_attn},
                   {"uniform_channel_attn", cfg.ablation.uniform_channel_attn},
                   {"active_blocks", cfg.ablation.active_blocks},
                   {"disable_cycle", cfg.ablation.disable_cycle},
                   {"disable_style_loss", cfg.ablation.disable_style_loss},
                   {"disable_content_loss", cfg.ablation.disable_content_loss},
                   {"disable_speaker_loss", cfg.ablation.disable_speaker_loss}};
  j["seed"] = cfg.seed;
  return j.dump(2);
}

}  // namespace mtcr
