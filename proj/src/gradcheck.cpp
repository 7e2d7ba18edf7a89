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

#include "mtcr/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "mtcr/errors.hpp"

namespace mtcr {

namespace {

FeatureBundle random_bundle(const ModelConfig& cfg, Rng& rng, int frames,
                            const std::string& speaker) {
  FeatureBundle b;
  b.mel = random_mat(frames, cfg.mel_dim, rng, 0.5);
  b.bnf = random_mat(frames, cfg.bnf_dim, rng, 0.5);
  b.pitch = Mat(frames, cfg.pitch_dim);
  for (auto& v : b.pitch.a) v = static_cast<Real>(rng.uniform(0.05, 1.0));
  b.xvec = random_mat(1, cfg.xvec_dim, rng, 1.0);
  b.speaker_id = speaker;
  b.true_length = frames;
  return b;
}

Real eval_total(Model& m, const FrozenModels& frozen, const FeatureBundle& x,
                const FeatureBundle& y) {
  Tape t;
  Ctx c{t, m.params};
  TotalLossVars v = total_loss_t(c, frozen, x, y, m.cfg);
  return t.val(v.total)(0, 0);
}

}  // namespace

FdReport finite_difference_check(const ModelConfig& cfg_tiny, const FdOptions& opts) {
  if (sizeof(Real) != 8)
    throw ConfigError("finite_difference_check requires a double-precision build");
  ModelConfig cfg = validate_config(cfg_tiny);
  Model model = build_model(cfg);
  if (model.params.total_scalars() >= 10000)
    throw ConfigError("finite_difference_check: config has " +
                      std::to_string(model.params.total_scalars()) +
                      " trainable scalars; need < 10^4");
  FrozenModels frozen = build_frozen(cfg);

  Rng rng(opts.data_seed);
  const int mult = cfg.temporal_multiple();
  FeatureBundle x = pad_bundle(random_bundle(cfg, rng, 2 * mult - mult / 2, "a"), mult);
  FeatureBundle y = pad_bundle(random_bundle(cfg, rng, 2 * mult, "b"), mult);

  // Analytic gradients from one forward/backward pass.
  std::map<std::string, Mat> analytic;
  {
    Tape t;
    Ctx c{t, model.params};
    TotalLossVars v = total_loss_t(c, frozen, x, y, cfg);
    t.backward(v.total);
    for (const auto& [name, id] : c.bound) analytic.emplace(name, t.grad(Var{&t, id}));
  }
  if (!opts.corrupt_param.empty()) {
    auto it = analytic.find(opts.corrupt_param);
    if (it == analytic.end())
      throw Error("corrupt_param not found in gradients: " + opts.corrupt_param);
    for (auto& g : it->second.a) g *= opts.corrupt_factor;
  }

  // Sample coordinates: spread the budget evenly, at least one per tensor.
  const int n_params = static_cast<int>(analytic.size());
  const int per_param = std::max(1, (opts.min_coords + n_params - 1) / n_params);
  Rng pick(mix_seed(opts.data_seed, hash_str("coords")));

  FdReport rep;
  rep.n_params = n_params;
  for (const auto& [name, grad] : analytic) {
    Mat& p = model.params.at(name);
    const int n = static_cast<int>(p.size());
    for (int k = 0; k < std::min(per_param, n); ++k) {
      const int idx = k == 0 ? pick.uniform_int(n) : pick.uniform_int(n);
      const Real saved = p.a[static_cast<size_t>(idx)];
      p.a[static_cast<size_t>(idx)] = saved + opts.eps;
      const Real lp = eval_total(model, frozen, x, y);
      p.a[static_cast<size_t>(idx)] = saved - opts.eps;
      const Real lm = eval_total(model, frozen, x, y);
      p.a[static_cast<size_t>(idx)] = saved;

      const Real numeric = (lp - lm) / (2 * opts.eps);
      const Real a = grad.a[static_cast<size_t>(idx)];
      const Real denom = std::max({std::abs(a), std::abs(numeric), opts.denom_floor});
      const Real rel = std::abs(a - numeric) / denom;
      ++rep.n_checked;
      if (rel > rep.max_rel_err) {
        rep.max_rel_err = rel;
        rep.worst = {name, idx, a, numeric, rel};
      }
    }
  }
  rep.passed = rep.max_rel_err < opts.tolerance;
  if (!rep.passed && opts.throw_on_failure)
    throw ToleranceExceeded("gradient mismatch at " + rep.worst.param + "[" +
                            std::to_string(rep.worst.index) + "]: analytic " +
                            std::to_string(rep.worst.analytic) + " vs numeric " +
                            std::to_string(rep.worst.numeric) + " (rel err " +
                            std::to_string(rep.worst.rel_err) + ")");
  return rep;
}

}  // namespace mtcr
