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

#include "mtcr/eval.hpp"

#include <cstdio>
#include <filesystem>

#include <json.hpp>

#include "mtcr/container.hpp"
#include "mtcr/errors.hpp"

namespace mtcr {

namespace {

Mat sliced(const Mat& m, int len) {
  Mat out(len, m.cols);
  for (int i = 0; i < len; ++i)
    for (int j = 0; j < m.cols; ++j) out(i, j) = m(i, j);
  return out;
}

std::optional<Real> run_wer_command(const std::string& command,
                                    const std::vector<Mat>& converted) {
  namespace fs = std::filesystem;
  ArrayContainer c;
  for (size_t i = 0; i < converted.size(); ++i)
    c.add_mat("converted" + std::to_string(i) + "/mel", converted[i]);
  const std::string path =
      (fs::temp_directory_path() / "mtcr_wer_input.mtcr").string();
  write_container_atomic(path, c);
  const std::string cmd = command + " " + path;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) throw Error("wer command failed to start: " + cmd);
  double rate = 0;
  const int got = fscanf(pipe, "%lf", &rate);
  const int status = pclose(pipe);
  if (got != 1 || status != 0)
    throw Error("wer command did not produce a rate: " + cmd);
  return static_cast<Real>(rate);
}

}  // namespace

EvalReport evaluate_conversion(Model& model, const FrozenModels& frozen, const Corpus& corpus,
                               const EvalOptions& opts) {
  if (corpus.n_speakers() < 2) throw CorpusTooSmall("evaluation needs >= 2 speakers");
  const size_t n = corpus.utts.size();

  // Verification trials over all ground-truth pairs.
  std::vector<Mat> embeds;
  embeds.reserve(n);
  for (const auto& u : corpus.utts) embeds.push_back(frozen.sv_embed(u.mel));
  std::vector<std::pair<Real, bool>> trials;
  trials.reserve(n * (n - 1) / 2);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = i + 1; j < n; ++j)
      trials.emplace_back(cosine(embeds[i], embeds[j]),
                          corpus.speaker_of[i] == corpus.speaker_of[j]);
  EerResult eer = eer_threshold(trials);

  // Cross-speaker conversion trials.
  Rng rng(opts.seed);
  std::vector<Mat> converted, targets;
  std::vector<Real> p_lf0s;
  for (int trial = 0; trial < opts.n_trials; ++trial) {
    size_t src = 0, trg = 0;
    do {
      src = static_cast<size_t>(rng.uniform_int(static_cast<int>(n)));
      trg = static_cast<size_t>(rng.uniform_int(static_cast<int>(n)));
    } while (corpus.speaker_of[src] == corpus.speaker_of[trg]);

    ConversionResult r = convert(model, corpus.utts[src], corpus.utts[trg]);
    Mat conv_mel = sliced(r.mel, corpus.utts[src].true_length);
    converted.push_back(conv_mel);
    targets.push_back(corpus.utts[trg].mel);

    Mat conv_pitch = estimate_pitch(conv_mel, corpus.pitch_probe, corpus.opts.pitch_amp);
    try {
      p_lf0s.push_back(pearson_lf0(corpus.utts[src].pitch, conv_pitch));
    } catch (const DegenerateInput&) {
      p_lf0s.push_back(0);
    }
  }

  EvalReport rep;
  rep.eer = eer.eer;
  rep.threshold = eer.threshold;
  rep.n_trials = opts.n_trials;
  rep.speaker_acc = speaker_accuracy(converted, targets, frozen, eer.threshold);
  Real acc = 0;
  for (Real p : p_lf0s) acc += p;
  rep.p_lf0_mean = p_lf0s.empty() ? 0 : acc / static_cast<Real>(p_lf0s.size());
  if (!opts.wer_command.empty()) rep.wer = run_wer_command(opts.wer_command, converted);
  return rep;
}

std::string report_to_json(const EvalReport& r) {
  nlohmann::json j;
  j["eer"] = r.eer;
  j["threshold"] = r.threshold;
  j["speaker_accuracy"] = r.speaker_acc;
  j["p_lf0"] = r.p_lf0_mean;
  j["n_trials"] = r.n_trials;
  if (r.wer)
    j["wer"] = *r.wer;
  else
    j["wer"] = nullptr;
  return j.dump(2);
}

}  // namespace mtcr
