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

#include "mtcr/losses.hpp"

#include <cmath>

#include "mtcr/errors.hpp"

namespace mtcr {

const LossTerm* LossBreakdown::find(const std::string& name) const {
  for (const auto& t : terms)
    if (t.name == name) return &t;
  return nullptr;
}

Real LossBreakdown::raw(const std::string& name) const {
  const LossTerm* t = find(name);
  if (!t) throw Error("no loss term named " + name);
  return t->raw;
}

Var mse_t(Tape& t, Var a, Var b) {
  Var d = t.sub(a, b);
  return t.mean_all(t.mul(d, d));
}

Var mel_loss_t(Tape& t, Var pred, Var target, int true_length) {
  if (!t.val(pred).same_shape(t.val(target)))
    throw DimensionMismatch("mel_loss: shapes differ");
  if (true_length < 1 || true_length > pred.rows())
    throw LengthMismatch("mel_loss: true_length out of range");
  Var p = t.slice_rows(pred, 0, true_length);
  Var q = t.slice_rows(target, 0, true_length);
  return mse_t(t, p, q);
}

Var style_loss_t(const FrozenModels& frozen, Tape& t, Var pred_mel, Var ref_mel) {
  if (!t.val(pred_mel).same_shape(t.val(ref_mel)))
    throw DimensionMismatch("style_loss: mel shapes differ");
  StyleVars a = frozen.style_t(t, pred_mel);
  StyleVars b = frozen.style_t(t, ref_mel);
  Var s = mse_t(t, a.h_l, b.h_l);
  s = t.add(s, mse_t(t, a.h_m, b.h_m));
  return t.add(s, mse_t(t, a.h_h, b.h_h));
}

Var content_loss_t(const FrozenModels& frozen, Tape& t, Var pred_mel, Var ref_mel) {
  if (!t.val(pred_mel).same_shape(t.val(ref_mel)))
    throw DimensionMismatch("content_loss: mel shapes differ");
  return mse_t(t, frozen.content_t(t, pred_mel), frozen.content_t(t, ref_mel));
}

Var speaker_loss_t(Tape& t, const RetrievalVars& ref, const RetrievalVars& pred) {
  if (ref.z.size() != pred.z.size())
    throw ConfigMismatch("speaker_loss: retrieval level counts differ");
  Var total;
  for (size_t l = 0; l < ref.z.size(); ++l) {
    Var m = mse_t(t, t.mean_rows(ref.z[l]), t.mean_rows(pred.z[l]));
    total = l == 0 ? m : t.add(total, m);
  }
  return total;
}

namespace {

struct PathBuilder {
  Ctx& c;
  const FrozenModels& frozen;
  const ModelConfig& cfg;
  std::vector<TermVar> terms;

  void term(const std::string& name, Var raw, Real weight) {
    terms.push_back({name, raw, weight});
  }

  Var sliced(Var mel, int len) { return c.t.slice_rows(mel, 0, len); }
};

// Shared forward pieces of X reused by both paths.
struct SourceCache {
  SourceRepVars src;
  RetrievalVars retr;
  Var mel, bnf, pitch, xvec;
};

// Inputs are canonicalized by re-slicing to true_length and re-padding by
// replication, so nothing downstream can observe padded-row contents.
SourceCache make_source_cache(Ctx& c, const FeatureBundle& x, const ModelConfig& cfg) {
  const int mult = cfg.temporal_multiple();
  SourceCache s;
  s.mel = repad_t(c, c.t.leaf(x.mel, false), x.true_length, mult);
  s.bnf = repad_t(c, c.t.leaf(x.bnf, false), x.true_length, mult);
  s.pitch = repad_t(c, c.t.leaf(x.pitch, false), x.true_length, mult);
  s.xvec = c.t.leaf(x.xvec, false);
  s.src = encode_source_t(c, s.bnf, s.pitch, cfg);
  s.retr = mtcr_forward_t(c, s.mel, s.xvec, cfg);
  return s;
}

void add_paired_terms(PathBuilder& pb, SourceCache& sx, int len_x) {
  Ctx& c = pb.c;
  const ModelConfig& cfg = pb.cfg;
  DecodeVars dec = decode_t(c, sx.src, sx.bnf, sx.bnf, sx.retr, cfg);
  // The paired mel term enters with unit weight.
  pb.term("pair.mel", mel_loss_t(c.t, dec.mel, sx.mel, len_x), 1.0);
  if (!cfg.ablation.disable_speaker_loss) {
    Var repad = repad_t(c, dec.mel, len_x, cfg.retrieval_multiple());
    RetrievalVars retr_pred = mtcr_forward_t(c, repad, sx.xvec, cfg);
    pb.term("pair.spk", speaker_loss_t(c.t, sx.retr, retr_pred), cfg.loss_weights.lambda_spk);
  }
  if (!cfg.ablation.disable_style_loss)
    pb.term("pair.sty",
            style_loss_t(pb.frozen, c.t, pb.sliced(dec.mel, len_x), pb.sliced(sx.mel, len_x)),
            cfg.loss_weights.lambda_sty);
  if (!cfg.ablation.disable_content_loss)
    pb.term("pair.con",
            content_loss_t(pb.frozen, c.t, pb.sliced(dec.mel, len_x), pb.sliced(sx.mel, len_x)),
            cfg.loss_weights.lambda_con);
}

void add_unpaired_terms(PathBuilder& pb, SourceCache& sx, int len_x, const FeatureBundle& y) {
  Ctx& c = pb.c;
  const ModelConfig& cfg = pb.cfg;
  const int len_y = y.true_length;
  const int mult = cfg.temporal_multiple();

  Var mel_y = repad_t(c, c.t.leaf(y.mel, false), len_y, mult);
  Var bnf_y = repad_t(c, c.t.leaf(y.bnf, false), len_y, mult);
  Var pitch_y = repad_t(c, c.t.leaf(y.pitch, false), len_y, mult);
  SourceRepVars src_y = encode_source_t(c, bnf_y, pitch_y, cfg);

  // Y_x: content/style of Y rendered with the timbre retrieved from X.
  DecodeVars y_x = decode_t(c, src_y, bnf_y, sx.bnf, sx.retr, cfg);

  // Timbre is re-extracted from the predicted spectrogram; gradients flow
  // through it into the second conversion.
  Var yx_repad = repad_t(c, y_x.mel, len_y, cfg.retrieval_multiple());
  RetrievalVars retr_yx = mtcr_forward_t(c, yx_repad, sx.xvec, cfg);
  Var bnf_spk2 = repad_t(c, bnf_y, len_y, cfg.retrieval_multiple());
  DecodeVars x_cycle = decode_t(c, sx.src, sx.bnf, bnf_spk2, retr_yx, cfg);

  pb.term("unpair.mel", mel_loss_t(c.t, x_cycle.mel, sx.mel, len_x),
          cfg.loss_weights.lambda_mel);
  if (!cfg.ablation.disable_speaker_loss)
    pb.term("unpair.spk", speaker_loss_t(c.t, sx.retr, retr_yx), cfg.loss_weights.lambda_spk);
  if (!cfg.ablation.disable_style_loss) {
    pb.term("unpair.sty_yx",
            style_loss_t(pb.frozen, c.t, pb.sliced(y_x.mel, len_y), pb.sliced(mel_y, len_y)),
            cfg.loss_weights.lambda_sty);
    pb.term("unpair.sty_cycle",
            style_loss_t(pb.frozen, c.t, pb.sliced(x_cycle.mel, len_x), pb.sliced(sx.mel, len_x)),
            cfg.loss_weights.lambda_sty);
  }
  if (!cfg.ablation.disable_content_loss) {
    pb.term("unpair.con_yx",
            content_loss_t(pb.frozen, c.t, pb.sliced(y_x.mel, len_y), pb.sliced(mel_y, len_y)),
            cfg.loss_weights.lambda_con);
    pb.term("unpair.con_cycle",
            content_loss_t(pb.frozen, c.t, pb.sliced(x_cycle.mel, len_x), pb.sliced(sx.mel, len_x)),
            cfg.loss_weights.lambda_con);
  }
}

TotalLossVars finish(Ctx& c, std::vector<TermVar> terms) {
  TotalLossVars out;
  out.terms = std::move(terms);
  if (out.terms.empty()) {
    out.total = c.t.leaf(Mat(1, 1), false);
    return out;
  }
  for (size_t i = 0; i < out.terms.size(); ++i) {
    Var w = c.t.scale(out.terms[i].raw, out.terms[i].weight);
    out.total = i == 0 ? w : c.t.add(out.total, w);
  }
  return out;
}

void check_padded(const FeatureBundle& b, const ModelConfig& cfg, const char* who) {
  if (b.mel.rows % cfg.temporal_multiple() != 0)
    throw DivisibilityError(std::string(who) +
                            ": bundle must be padded to a multiple of " +
                            std::to_string(cfg.temporal_multiple()));
  if (b.true_length < 1 || b.true_length > b.mel.rows)
    throw LengthMismatch(std::string(who) + ": true_length out of range");
}

}  // namespace

TotalLossVars paired_loss_t(Ctx& c, const FrozenModels& frozen, const FeatureBundle& x,
                            const ModelConfig& cfg) {
  check_padded(x, cfg, "paired_loss");
  PathBuilder pb{c, frozen, cfg, {}};
  SourceCache sx = make_source_cache(c, x, cfg);
  add_paired_terms(pb, sx, x.true_length);
  return finish(c, std::move(pb.terms));
}

TotalLossVars unpaired_loss_t(Ctx& c, const FrozenModels& frozen, const FeatureBundle& x,
                              const FeatureBundle& y, const ModelConfig& cfg) {
  if (cfg.ablation.disable_cycle) return finish(c, {});
  check_padded(x, cfg, "unpaired_loss");
  check_padded(y, cfg, "unpaired_loss");
  PathBuilder pb{c, frozen, cfg, {}};
  SourceCache sx = make_source_cache(c, x, cfg);
  add_unpaired_terms(pb, sx, x.true_length, y);
  return finish(c, std::move(pb.terms));
}

TotalLossVars total_loss_t(Ctx& c, const FrozenModels& frozen, const FeatureBundle& x,
                           const FeatureBundle& y, const ModelConfig& cfg) {
  check_padded(x, cfg, "total_loss");
  PathBuilder pb{c, frozen, cfg, {}};
  SourceCache sx = make_source_cache(c, x, cfg);
  add_paired_terms(pb, sx, x.true_length);
  if (!cfg.ablation.disable_cycle) {
    check_padded(y, cfg, "total_loss");
    add_unpaired_terms(pb, sx, x.true_length, y);
  }
  return finish(c, std::move(pb.terms));
}

LossBreakdown extract_breakdown(Tape& t, const TotalLossVars& v) {
  LossBreakdown b;
  for (const auto& tv : v.terms) {
    LossTerm lt;
    lt.name = tv.name;
    lt.raw = t.val(tv.raw)(0, 0);
    lt.weight = tv.weight;
    lt.contribution = lt.weight * lt.raw;
    b.terms.push_back(lt);
  }
  b.total = t.val(v.total)(0, 0);
  return b;
}

void check_finite(const LossBreakdown& b) {
  for (const auto& t : b.terms)
    if (!std::isfinite(t.raw))
      throw NonFiniteLoss("non-finite loss term: " + t.name);
  if (!std::isfinite(b.total)) throw NonFiniteLoss("non-finite total loss");
}

Real mel_loss(const Mat& pred, const Mat& target) {
  Tape t;
  return t.val(mel_loss_t(t, t.leaf(pred, false), t.leaf(target, false), pred.rows))(0, 0);
}

Real style_loss(const FrozenModels& frozen, const Mat& pred_mel, const Mat& ref_mel) {
  Tape t;
  return t.val(style_loss_t(frozen, t, t.leaf(pred_mel, false), t.leaf(ref_mel, false)))(0, 0);
}

Real content_loss(const FrozenModels& frozen, const Mat& pred_mel, const Mat& ref_mel) {
  Tape t;
  return t.val(content_loss_t(frozen, t, t.leaf(pred_mel, false), t.leaf(ref_mel, false)))(0, 0);
}

Real speaker_loss(const SpeakerRetrievalOutput& ref, const SpeakerRetrievalOutput& pred) {
  if (ref.z.size() != pred.z.size())
    throw ConfigMismatch("speaker_loss: retrieval level counts differ");
  Tape t;
  RetrievalVars a, b;
  for (size_t l = 0; l < ref.z.size(); ++l) {
    a.z.push_back(t.leaf(ref.z[l], false));
    b.z.push_back(t.leaf(pred.z[l], false));
  }
  return t.val(speaker_loss_t(t, a, b))(0, 0);
}

namespace {
LossBreakdown run_path(Model& m, const FrozenModels& frozen, const FeatureBundle& x,
                       const FeatureBundle* y, int which) {
  const int mult = m.cfg.temporal_multiple();
  FeatureBundle xp = pad_bundle(x, mult);
  FeatureBundle yp;
  if (y) yp = pad_bundle(*y, mult);
  Tape t;
  Ctx c{t, m.params};
  TotalLossVars v;
  if (which == 0)
    v = paired_loss_t(c, frozen, xp, m.cfg);
  else if (which == 1)
    v = unpaired_loss_t(c, frozen, xp, yp, m.cfg);
  else
    v = total_loss_t(c, frozen, xp, yp, m.cfg);
  return extract_breakdown(t, v);
}
}  // namespace

LossBreakdown paired_loss(Model& m, const FrozenModels& frozen, const FeatureBundle& x) {
  return run_path(m, frozen, x, nullptr, 0);
}

LossBreakdown unpaired_loss(Model& m, const FrozenModels& frozen, const FeatureBundle& x,
                            const FeatureBundle& y) {
  return run_path(m, frozen, x, &y, 1);
}

LossBreakdown total_loss(Model& m, const FrozenModels& frozen, const FeatureBundle& x,
                         const FeatureBundle& y) {
  if (m.cfg.ablation.disable_cycle) return run_path(m, frozen, x, nullptr, 2);
  return run_path(m, frozen, x, &y, 2);
}

}  // namespace mtcr
