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

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "mtcr/container.hpp"
#include "mtcr/eval.hpp"
#include "mtcr/gradcheck.hpp"
#include "mtcr/train.hpp"

namespace fs = std::filesystem;
using namespace mtcr;

namespace {

ModelConfig load_config_or_default(const std::string& path) {
  if (path.empty()) return desk_config();
  return config_from_file(path);
}

void check_corpus_dims(const Corpus& corpus, const ModelConfig& cfg) {
  if (corpus.utts.empty()) throw CorpusTooSmall("corpus has no utterances");
  const FeatureBundle& u = corpus.utts.front();
  if (u.mel.cols != cfg.mel_dim || u.bnf.cols != cfg.bnf_dim ||
      u.pitch.cols != cfg.pitch_dim || u.xvec.cols != cfg.xvec_dim)
    throw ConfigMismatch("corpus feature dims do not match the config");
}

FeatureBundle load_utterance(const std::string& path, int index) {
  ArrayContainer c = read_container(path);
  std::string p;
  if (c.has("mel"))
    p = "";  // flat single-utterance file
  else
    p = "u" + std::to_string(index) + "/";
  if (!c.has(p + "mel")) throw Error("no utterance " + std::to_string(index) + " in " + path);
  FeatureBundle b;
  b.mel = c.mat(p + "mel");
  b.bnf = c.mat(p + "bnf");
  b.pitch = c.mat(p + "pitch");
  b.xvec = c.mat(p + "xvec");
  b.true_length = c.has(p + "len") ? static_cast<int>(c.scalar(p + "len")) : b.mel.rows;
  b.speaker_id = c.has(p + "spk")
                     ? "spk" + std::to_string(static_cast<int>(c.scalar(p + "spk")))
                     : "unknown";
  return b;
}

void dump_retrieval(ArrayContainer& out, const SpeakerRetrievalOutput& r) {
  out.add_mat("z0", r.z0);
  for (size_t l = 0; l < r.z.size(); ++l) {
    const std::string n = std::to_string(l + 1);
    out.add_mat("z" + n, r.z[l]);
    out.add("a_t" + n,
            {r.a_t_shape[l][0], r.a_t_shape[l][1], r.a_t_shape[l][2]}, r.a_t[l].a);
    out.add("a_c" + n,
            {r.a_c_shape[l][0], r.a_c_shape[l][1], r.a_c_shape[l][2], r.a_c_shape[l][3]},
            r.a_c[l].a);
  }
}

void write_text_tables(const std::string& path, const ArrayContainer& c) {
  std::ofstream f(path);
  if (!f) throw Error("cannot open for writing: " + path);
  for (const auto& a : c.arrays) {
    f << "# " << a.name << " shape";
    for (int64_t d : a.shape) f << " " << d;
    f << "\n";
    // Flatten to rows of the last dimension.
    const int64_t last = a.shape.empty() ? 1 : a.shape.back();
    for (size_t i = 0; i < a.data.size(); ++i) {
      f << a.data[i];
      f << (((i + 1) % static_cast<size_t>(last)) == 0 ? '\n' : ' ');
    }
    f << "\n";
  }
}

int cmd_synth(const std::string& cfg_path, int speakers, int utts, uint64_t seed,
              const std::string& out_dir, int len_min, int len_max) {
  ModelConfig cfg = load_config_or_default(cfg_path);
  SynthOptions so;
  so.n_speakers = speakers;
  so.utts_per_speaker = utts;
  so.seed = seed;
  so.len_min = len_min;
  so.len_max = len_max;
  Corpus corpus = synth_corpus(cfg, so);
  fs::create_directories(out_dir);
  save_corpus(out_dir + "/corpus.mtcr", corpus);
  std::cout << "wrote " << corpus.utts.size() << " utterances to " << out_dir
            << "/corpus.mtcr\n";
  return 0;
}

int cmd_train(const std::string& cfg_path, const std::string& data_dir,
              const std::string& out_dir, long steps, int epochs, int batch,
              int ckpt_interval, bool resume) {
  ModelConfig cfg = load_config_or_default(cfg_path);
  Corpus corpus = load_corpus(data_dir + "/corpus.mtcr");
  check_corpus_dims(corpus, cfg);

  TrainState state;
  if (resume && fs::exists(out_dir + "/ckpt_latest.mtcr"))
    state = load_checkpoint(out_dir + "/ckpt_latest.mtcr");
  else
    state = init_train_state(cfg);
  FrozenModels frozen = build_frozen(state.model.cfg);

  FitOptions opts;
  opts.batch_size = batch;
  opts.ckpt_interval = ckpt_interval;
  opts.out_dir = out_dir;
  if (steps >= 0) {
    opts.max_steps = steps;
    const long per_epoch =
        (static_cast<long>(corpus.utts.size()) + batch - 1) / batch;
    opts.epochs = static_cast<int>(steps / std::max(per_epoch, 1L)) + 2;
  } else {
    opts.epochs = epochs;
  }
  opts.on_step = [](long step, const LossBreakdown& b) {
    if (step % 50 == 0)
      std::cout << "step " << step << " total " << b.total << "\n";
  };
  fit(corpus.utts, state, frozen, opts);
  std::cout << "trained to step " << state.step << "; checkpoint in " << out_dir << "\n";
  return 0;
}

int cmd_convert(const std::string& ckpt, const std::string& source, int source_index,
                const std::string& target, int target_index, const std::string& out) {
  TrainState state = load_checkpoint(ckpt);
  FeatureBundle src = load_utterance(source, source_index);
  FeatureBundle trg = load_utterance(target, target_index);
  ConversionResult r = convert(state.model, src, trg);

  ArrayContainer c;
  c.meta["kind"] = "conversion";
  c.meta["config"] = config_to_json_text(state.model.cfg);
  c.add_mat("mel", r.mel);
  c.add_mat("mel_pre", r.mel_pre);
  c.add_scalar("source_true_length", static_cast<Real>(src.true_length));
  for (size_t i = 0; i < r.cross_attn.size(); ++i)
    c.add_mat("xattn_l" + std::to_string(r.cross_attn_level[i]), r.cross_attn[i]);
  dump_retrieval(c, r.retrieval);
  write_container_atomic(out, c);
  std::cout << "wrote conversion (" << r.mel.rows << "x" << r.mel.cols << " mel) to " << out
            << "\n";
  return 0;
}

int cmd_eval(const std::string& ckpt, const std::string& data_dir, const std::string& report,
             int trials, uint64_t seed, const std::string& wer_command) {
  TrainState state = load_checkpoint(ckpt);
  Corpus corpus = load_corpus(data_dir + "/corpus.mtcr");
  check_corpus_dims(corpus, state.model.cfg);
  FrozenModels frozen = build_frozen(state.model.cfg);
  EvalOptions opts;
  opts.n_trials = trials;
  opts.seed = seed;
  opts.wer_command = wer_command;
  EvalReport rep = evaluate_conversion(state.model, frozen, corpus, opts);
  const std::string text = report_to_json(rep);
  std::ofstream f(report);
  if (!f) throw Error("cannot open report file: " + report);
  f << text << "\n";
  std::cout << text << "\n";
  return 0;
}

int cmd_inspect(const std::string& ckpt, const std::string& utt_path, int index,
                const std::string& out, bool text) {
  TrainState state = load_checkpoint(ckpt);
  FeatureBundle utt = load_utterance(utt_path, index);
  const ModelConfig& cfg = state.model.cfg;
  FeatureBundle padded = pad_bundle(utt, cfg.temporal_multiple());
  SpeakerRetrievalOutput r = mtcr_forward(state.model.params, padded.mel, padded.xvec, cfg);

  ArrayContainer c;
  c.meta["kind"] = "retrieval";
  c.meta["config"] = config_to_json_text(cfg);
  dump_retrieval(c, r);
  write_container_atomic(out, c);
  if (text) write_text_tables(out + ".txt", c);
  std::cout << "wrote " << c.arrays.size() << " arrays to " << out << "\n";
  return 0;
}

int cmd_gradcheck(const std::string& cfg_path, double eps, double tol) {
  ModelConfig cfg = cfg_path.empty() ? tiny_config() : config_from_file(cfg_path);
  FdOptions opts;
  opts.eps = static_cast<Real>(eps);
  opts.tolerance = static_cast<Real>(tol);
  opts.throw_on_failure = false;
  FdReport rep = finite_difference_check(cfg, opts);
  std::cout << "checked " << rep.n_checked << " coordinates across " << rep.n_params
            << " parameter tensors\n"
            << "max relative error " << rep.max_rel_err << " at " << rep.worst.param << "["
            << rep.worst.index << "] (analytic " << rep.worst.analytic << ", numeric "
            << rep.worst.numeric << ")\n"
            << (rep.passed ? "PASS" : "FAIL") << " (tolerance " << tol << ")\n";
  return rep.passed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MTCR-VC: zero-shot voice conversion on synthetic feature corpora"};
  app.require_subcommand(1);

  // synth-data
  auto* synth = app.add_subcommand("synth-data", "Generate a synthetic feature corpus");
  std::string s_cfg, s_out = "data";
  int s_speakers = 2, s_utts = 4, s_len_min = 96, s_len_max = 160;
  uint64_t s_seed = 1;
  synth->add_option("--config", s_cfg, "Model config JSON (defaults to the desk config)");
  synth->add_option("--speakers", s_speakers, "Number of speakers")->required();
  synth->add_option("--utts", s_utts, "Utterances per speaker")->required();
  synth->add_option("--seed", s_seed, "Corpus seed");
  synth->add_option("--out", s_out, "Output directory")->required();
  synth->add_option("--len-min", s_len_min, "Minimum utterance frames");
  synth->add_option("--len-max", s_len_max, "Maximum utterance frames");

  // train
  auto* train = app.add_subcommand("train", "Train on a synthetic corpus");
  std::string t_cfg, t_data, t_out = "run";
  long t_steps = -1;
  int t_epochs = 1, t_batch = 4, t_ckpt = 200;
  bool t_resume = false;
  train->add_option("--config", t_cfg, "Model config JSON (defaults to the desk config)");
  train->add_option("--data", t_data, "Directory containing corpus.mtcr")->required();
  train->add_option("--out", t_out, "Output directory for checkpoints and the loss log")
      ->required();
  train->add_option("--steps", t_steps, "Stop after this many optimizer steps");
  train->add_option("--epochs", t_epochs, "Number of epochs when --steps is not given");
  train->add_option("--batch", t_batch, "Batch size");
  train->add_option("--ckpt-interval", t_ckpt, "Checkpoint every N steps");
  train->add_flag("--resume", t_resume, "Resume from out/ckpt_latest.mtcr if present");

  // convert
  auto* conv = app.add_subcommand("convert", "Convert one utterance to a target voice");
  std::string c_ckpt, c_src, c_trg, c_out;
  int c_src_idx = 0, c_trg_idx = 0;
  conv->add_option("--ckpt", c_ckpt, "Checkpoint file")->required();
  conv->add_option("--source", c_src, "Source utterance container")->required();
  conv->add_option("--source-index", c_src_idx, "Utterance index within the source container");
  conv->add_option("--target", c_trg, "Target-speaker utterance container")->required();
  conv->add_option("--target-index", c_trg_idx, "Utterance index within the target container");
  conv->add_option("--out", c_out, "Output container")->required();

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Objective metrics on a corpus");
  std::string e_ckpt, e_data, e_report, e_wer;
  int e_trials = 64;
  uint64_t e_seed = 2024;
  eval_cmd->add_option("--ckpt", e_ckpt, "Checkpoint file")->required();
  eval_cmd->add_option("--data", e_data, "Directory containing corpus.mtcr")->required();
  eval_cmd->add_option("--report", e_report, "Report JSON path")->required();
  eval_cmd->add_option("--trials", e_trials, "Number of conversion trials");
  eval_cmd->add_option("--seed", e_seed, "Trial sampling seed");
  eval_cmd->add_option("--wer-command", e_wer,
                       "External command given a container of converted mels; must print a rate");

  // inspect-attn
  auto* insp = app.add_subcommand("inspect-attn", "Dump retrieval arrays for one utterance");
  std::string i_ckpt, i_utt, i_out;
  int i_idx = 0;
  bool i_text = false;
  insp->add_option("--ckpt", i_ckpt, "Checkpoint file")->required();
  insp->add_option("--utt", i_utt, "Utterance container")->required();
  insp->add_option("--index", i_idx, "Utterance index within the container");
  insp->add_option("--out", i_out, "Output container")->required();
  insp->add_flag("--text", i_text, "Also write flat text tables next to the output");

  // gradcheck
  auto* gc = app.add_subcommand("gradcheck", "Finite-difference gradient verification");
  std::string g_cfg;
  double g_eps = 1e-5, g_tol = 1e-3;
  gc->add_option("--config", g_cfg, "Config JSON (defaults to the built-in tiny config)");
  gc->add_option("--eps", g_eps, "Central-difference step");
  gc->add_option("--tol", g_tol, "Maximum relative error");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    if (*synth) return cmd_synth(s_cfg, s_speakers, s_utts, s_seed, s_out, s_len_min, s_len_max);
    if (*train) return cmd_train(t_cfg, t_data, t_out, t_steps, t_epochs, t_batch, t_ckpt, t_resume);
    if (*conv) return cmd_convert(c_ckpt, c_src, c_src_idx, c_trg, c_trg_idx, c_out);
    if (*eval_cmd) return cmd_eval(e_ckpt, e_data, e_report, e_trials, e_seed, e_wer);
    if (*insp) return cmd_inspect(i_ckpt, i_utt, i_idx, i_out, i_text);
    if (*gc) return cmd_gradcheck(g_cfg, g_eps, g_tol);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
