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

#include "mtcr/synth.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "mtcr/container.hpp"
#include "mtcr/errors.hpp"

namespace mtcr {

namespace {

Mat unit_row(int d, Rng& rng) {
  Mat v = random_mat(1, d, rng);
  Real norm = 0;
  for (Real x : v.a) norm += x * x;
  norm = std::sqrt(norm);
  for (auto& x : v.a) x /= norm;
  return v;
}

Real cosine_rows(const Mat& a, const Mat& b) {
  Real dot = 0, na = 0, nb = 0;
  for (size_t i = 0; i < a.a.size(); ++i) {
    dot += a.a[i] * b.a[i];
    na += a.a[i] * a.a[i];
    nb += b.a[i] * b.a[i];
  }
  return dot / (std::sqrt(na) * std::sqrt(nb) + Real(1e-12));
}

std::string speaker_name(int i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "spk%03d", i);
  return buf;
}

}  // namespace

Corpus synth_corpus(const ModelConfig& dims, const SynthOptions& opts) {
  if (opts.n_speakers < 1) throw BadRange("synth_corpus: n_speakers must be >= 1");
  if (opts.utts_per_speaker < 1) throw BadRange("synth_corpus: utts_per_speaker must be >= 1");
  if (opts.len_min < 2 || opts.len_max < opts.len_min)
    throw BadRange("synth_corpus: bad length range");

  Corpus corpus;
  corpus.opts = opts;
  Rng global(mix_seed(opts.seed, hash_str("corpus-global")));
  corpus.pitch_probe = unit_row(dims.mel_dim, global);
  corpus.content_mixer = random_mat(opts.content_dim, dims.bnf_dim, global,
                                    Real(1) / std::sqrt(static_cast<Real>(opts.content_dim)));

  for (int s = 0; s < opts.n_speakers; ++s) {
    Rng rng(mix_seed(opts.seed, mix_seed(hash_str("speaker"), static_cast<uint64_t>(s))));
    SyntheticSpeaker spk;
    spk.id = speaker_name(s);
    spk.timbre_basis = random_mat(opts.content_dim, dims.mel_dim, rng,
                                  Real(1) / std::sqrt(static_cast<Real>(opts.content_dim)));
    spk.timbre_bias = random_mat(1, dims.mel_dim, rng, Real(0.8));
    // Timbre components orthogonal to the pitch probe keep the embedded
    // pitch trace identifiable from any mel.
    auto deflate = [&](Mat& m) {
      for (int r = 0; r < m.rows; ++r) {
        Real proj = 0;
        for (int j = 0; j < dims.mel_dim; ++j) proj += m(r, j) * corpus.pitch_probe(0, j);
        for (int j = 0; j < dims.mel_dim; ++j) m(r, j) -= proj * corpus.pitch_probe(0, j);
      }
    };
    deflate(spk.timbre_basis);
    deflate(spk.timbre_bias);
    spk.pitch_mean = static_cast<Real>(rng.uniform(0.35, 0.65));
    spk.pitch_spread = static_cast<Real>(rng.uniform(0.1, 0.2));
    // Anchors must stay well separated even in low dimensions.
    for (int attempt = 0; attempt < 64; ++attempt) {
      spk.xvec_anchor = unit_row(dims.xvec_dim, rng);
      bool ok = true;
      for (const auto& other : corpus.speakers)
        if (cosine_rows(spk.xvec_anchor, other.xvec_anchor) >= Real(0.9)) ok = false;
      if (ok) break;
      if (attempt == 63) throw BadRange("synth_corpus: cannot separate speaker anchors");
    }
    corpus.speakers.push_back(std::move(spk));
  }

  for (int s = 0; s < opts.n_speakers; ++s) {
    const SyntheticSpeaker& spk = corpus.speakers[static_cast<size_t>(s)];
    for (int u = 0; u < opts.utts_per_speaker; ++u) {
      Rng rng(mix_seed(opts.seed, mix_seed(hash_str("utt"),
                                           static_cast<uint64_t>(s) * 100003u + u)));
      const int len = opts.len_min + rng.uniform_int(opts.len_max - opts.len_min + 1);

      // Smooth AR(1) content trajectory.
      Mat content(len, opts.content_dim);
      for (int j = 0; j < opts.content_dim; ++j) content(0, j) = static_cast<Real>(rng.normal());
      for (int t = 1; t < len; ++t)
        for (int j = 0; j < opts.content_dim; ++j)
          content(t, j) = Real(0.92) * content(t - 1, j) +
                          Real(0.39) * static_cast<Real>(rng.normal());

      // Pitch: bounded walk around the register with a few unvoiced runs,
      // min-max normalized onto [0.05, 1]; unvoiced frames are exactly 0.
      std::vector<Real> raw(static_cast<size_t>(len));
      raw[0] = spk.pitch_mean;
      for (int t = 1; t < len; ++t) {
        Real v = raw[static_cast<size_t>(t - 1)] +
                 Real(0.05) * spk.pitch_spread * static_cast<Real>(rng.normal()) +
                 Real(0.02) * (spk.pitch_mean - raw[static_cast<size_t>(t - 1)]);
        raw[static_cast<size_t>(t)] = v;
      }
      std::vector<bool> voiced(static_cast<size_t>(len), true);
      const int target_unvoiced = static_cast<int>(opts.unvoiced_frac * len);
      int marked = 0;
      while (marked < target_unvoiced) {
        const int start = rng.uniform_int(len);
        const int run = 2 + rng.uniform_int(4);
        for (int t = start; t < std::min(len, start + run) && marked < target_unvoiced; ++t)
          if (voiced[static_cast<size_t>(t)]) {
            voiced[static_cast<size_t>(t)] = false;
            ++marked;
          }
      }
      Real lo = 1e30, hi = -1e30;
      for (int t = 0; t < len; ++t)
        if (voiced[static_cast<size_t>(t)]) {
          lo = std::min(lo, raw[static_cast<size_t>(t)]);
          hi = std::max(hi, raw[static_cast<size_t>(t)]);
        }
      if (hi <= lo) hi = lo + Real(1e-3);
      Mat pitch(len, dims.pitch_dim);
      for (int t = 0; t < len; ++t)
        pitch(t, 0) = voiced[static_cast<size_t>(t)]
                          ? Real(0.05) + Real(0.95) * (raw[static_cast<size_t>(t)] - lo) / (hi - lo)
                          : Real(0);

      FeatureBundle b;
      b.speaker_id = spk.id;
      b.true_length = len;
      b.pitch = pitch;

      // bnf = content * mixer + noise; depends on content only.
      b.bnf = Mat(len, dims.bnf_dim);
      for (int t = 0; t < len; ++t)
        for (int j = 0; j < dims.bnf_dim; ++j) {
          Real acc = 0;
          for (int k = 0; k < opts.content_dim; ++k)
            acc += content(t, k) * corpus.content_mixer(k, j);
          b.bnf(t, j) = acc + opts.bnf_noise * static_cast<Real>(rng.normal());
        }

      b.mel = Mat(len, dims.mel_dim);
      for (int t = 0; t < len; ++t)
        for (int j = 0; j < dims.mel_dim; ++j) {
          Real acc = spk.timbre_bias(0, j);
          for (int k = 0; k < opts.content_dim; ++k)
            acc += content(t, k) * spk.timbre_basis(k, j);
          acc += opts.pitch_amp * pitch(t, 0) * corpus.pitch_probe(0, j);
          b.mel(t, j) = acc + opts.mel_noise * static_cast<Real>(rng.normal());
        }

      b.xvec = Mat(1, dims.xvec_dim);
      for (int j = 0; j < dims.xvec_dim; ++j)
        b.xvec(0, j) = spk.xvec_anchor(0, j) + opts.xvec_noise * static_cast<Real>(rng.normal());

      corpus.utts.push_back(std::move(b));
      corpus.speaker_of.push_back(s);
    }
  }
  return corpus;
}

Mat estimate_pitch(const Mat& mel, const Mat& probe, Real pitch_amp) {
  if (mel.cols != probe.cols) throw DimensionMismatch("estimate_pitch: width mismatch");
  Real norm2 = 0;
  for (Real v : probe.a) norm2 += v * v;
  Mat out(mel.rows, 1);
  for (int t = 0; t < mel.rows; ++t) {
    Real dot = 0;
    for (int j = 0; j < mel.cols; ++j) dot += mel(t, j) * probe.a[static_cast<size_t>(j)];
    out(t, 0) = dot / (norm2 * pitch_amp);
  }
  return out;
}

void save_corpus(const std::string& path, const Corpus& corpus) {
  ArrayContainer c;
  c.meta["kind"] = "corpus";
  nlohmann::json opts;
  opts["n_speakers"] = corpus.opts.n_speakers;
  opts["utts_per_speaker"] = corpus.opts.utts_per_speaker;
  opts["len_min"] = corpus.opts.len_min;
  opts["len_max"] = corpus.opts.len_max;
  opts["seed"] = corpus.opts.seed;
  opts["content_dim"] = corpus.opts.content_dim;
  opts["bnf_noise"] = corpus.opts.bnf_noise;
  opts["mel_noise"] = corpus.opts.mel_noise;
  opts["xvec_noise"] = corpus.opts.xvec_noise;
  opts["pitch_amp"] = corpus.opts.pitch_amp;
  opts["unvoiced_frac"] = corpus.opts.unvoiced_frac;
  c.meta["synth_options"] = opts.dump();

  c.add_mat("synth/pitch_probe", corpus.pitch_probe);
  c.add_mat("synth/content_mixer", corpus.content_mixer);
  for (size_t i = 0; i < corpus.speakers.size(); ++i) {
    const auto& s = corpus.speakers[i];
    const std::string p = "speaker" + std::to_string(i);
    c.add_mat(p + "/timbre_basis", s.timbre_basis);
    c.add_mat(p + "/timbre_bias", s.timbre_bias);
    c.add_mat(p + "/xvec_anchor", s.xvec_anchor);
    c.add(p + "/pitch_register", {2}, {s.pitch_mean, s.pitch_spread});
  }
  for (size_t i = 0; i < corpus.utts.size(); ++i) {
    const auto& u = corpus.utts[i];
    const std::string p = "u" + std::to_string(i);
    c.add_mat(p + "/mel", u.mel);
    c.add_mat(p + "/bnf", u.bnf);
    c.add_mat(p + "/pitch", u.pitch);
    c.add_mat(p + "/xvec", u.xvec);
    c.add_scalar(p + "/len", static_cast<Real>(u.true_length));
    c.add_scalar(p + "/spk", static_cast<Real>(corpus.speaker_of[i]));
  }
  write_container_atomic(path, c);
}

Corpus load_corpus(const std::string& path) {
  ArrayContainer c = read_container(path);
  Corpus corpus;
  if (auto it = c.meta.find("synth_options"); it != c.meta.end()) {
    nlohmann::json o = nlohmann::json::parse(it->second);
    corpus.opts.n_speakers = o.value("n_speakers", 0);
    corpus.opts.utts_per_speaker = o.value("utts_per_speaker", 0);
    corpus.opts.len_min = o.value("len_min", 0);
    corpus.opts.len_max = o.value("len_max", 0);
    corpus.opts.seed = o.value("seed", 0ull);
    corpus.opts.content_dim = o.value("content_dim", 0);
    corpus.opts.bnf_noise = o.value("bnf_noise", Real(0));
    corpus.opts.mel_noise = o.value("mel_noise", Real(0));
    corpus.opts.xvec_noise = o.value("xvec_noise", Real(0));
    corpus.opts.pitch_amp = o.value("pitch_amp", Real(1));
    corpus.opts.unvoiced_frac = o.value("unvoiced_frac", Real(0));
  }
  corpus.pitch_probe = c.mat("synth/pitch_probe");
  corpus.content_mixer = c.mat("synth/content_mixer");
  for (int s = 0;; ++s) {
    const std::string p = "speaker" + std::to_string(s);
    if (!c.has(p + "/timbre_basis")) break;
    SyntheticSpeaker spk;
    spk.id = speaker_name(s);
    spk.timbre_basis = c.mat(p + "/timbre_basis");
    spk.timbre_bias = c.mat(p + "/timbre_bias");
    spk.xvec_anchor = c.mat(p + "/xvec_anchor");
    Mat reg = c.mat(p + "/pitch_register");
    spk.pitch_mean = reg.a[0];
    spk.pitch_spread = reg.a[1];
    corpus.speakers.push_back(std::move(spk));
  }
  for (int i = 0;; ++i) {
    const std::string p = "u" + std::to_string(i);
    if (!c.has(p + "/mel")) break;
    FeatureBundle b;
    b.mel = c.mat(p + "/mel");
    b.bnf = c.mat(p + "/bnf");
    b.pitch = c.mat(p + "/pitch");
    b.xvec = c.mat(p + "/xvec");
    b.true_length = static_cast<int>(c.scalar(p + "/len"));
    const int s = static_cast<int>(c.scalar(p + "/spk"));
    b.speaker_id = speaker_name(s);
    corpus.utts.push_back(std::move(b));
    corpus.speaker_of.push_back(s);
  }
  return corpus;
}

}  // namespace mtcr
