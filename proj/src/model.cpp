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

#include "mtcr/model.hpp"

#include "mtcr/errors.hpp"

namespace mtcr {

void init_params(ParamStore& ps, const ModelConfig& cfg) {
  Rng rng(mix_seed(cfg.seed, hash_str("model-init")));
  init_tcr_params(ps, cfg, rng);
  init_encoder_params(ps, cfg, rng);
  init_decoder_params(ps, cfg, rng);
}

Model build_model(const ModelConfig& cfg) {
  Model m;
  m.cfg = validate_config(cfg);
  init_params(m.params, m.cfg);
  return m;
}

Var repad_t(Ctx& c, Var mel, int true_length, int multiple) {
  if (true_length < 1 || true_length > mel.rows())
    throw LengthMismatch("repad: true_length out of range");
  const int target = ((true_length + multiple - 1) / multiple) * multiple;
  Var real = c.t.slice_rows(mel, 0, true_length);
  if (target == true_length) return real;
  return c.t.gather(real, pad_rows_index(true_length, target, mel.cols()), target, mel.cols());
}

ConvertVars convert_t(Ctx& c, Var src_bnf, Var src_pitch, const SpeakerSideVars& spk,
                      const ModelConfig& cfg) {
  if (src_bnf.rows() != src_pitch.rows())
    throw LengthMismatch("convert: source bnf/pitch lengths disagree");
  if (spk.mel.rows() != spk.bnf.rows())
    throw LengthMismatch("convert: speaker mel/bnf lengths disagree");
  ConvertVars out;
  out.source = encode_source_t(c, src_bnf, src_pitch, cfg);
  out.retrieval = mtcr_forward_t(c, spk.mel, spk.xvec, cfg);
  out.decode = decode_t(c, out.source, src_bnf, spk.bnf, out.retrieval, cfg);
  return out;
}

ConversionResult convert(Model& m, const FeatureBundle& source, const FeatureBundle& speaker) {
  const int multiple = m.cfg.temporal_multiple();
  FeatureBundle src = pad_bundle(source, multiple);
  FeatureBundle spk = pad_bundle(speaker, multiple);

  Tape t;
  Ctx c{t, m.params};
  SpeakerSideVars sv{t.leaf(spk.mel, false), t.leaf(spk.bnf, false), t.leaf(spk.xvec, false)};
  ConvertVars v = convert_t(c, t.leaf(src.bnf, false), t.leaf(src.pitch, false), sv, m.cfg);

  ConversionResult r;
  r.mel = t.val(v.decode.mel);
  r.mel_pre = t.val(v.decode.mel_pre);
  for (size_t i = 0; i < v.decode.cross_attn.size(); ++i) {
    r.cross_attn.push_back(t.val(v.decode.cross_attn[i]));
    r.cross_attn_level.push_back(v.decode.cross_attn_level[i]);
  }
  r.retrieval = extract_retrieval(t, v.retrieval);
  r.source_rep = {t.val(v.source.content), t.val(v.source.pitch), t.val(v.source.rhythm),
                  t.val(v.source.z_add)};
  return r;
}

}  // namespace mtcr
