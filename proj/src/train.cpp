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

#include "mtcr/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "mtcr/container.hpp"
#include "mtcr/errors.hpp"

namespace mtcr {

void AdamState::step(ParamStore& ps, const std::map<std::string, Mat>& grads, Real lr) {
  ++t;
  const Real bc1 = Real(1) - std::pow(beta1, static_cast<Real>(t));
  const Real bc2 = Real(1) - std::pow(beta2, static_cast<Real>(t));
  for (const auto& [name, g] : grads) {
    Mat& p = ps.at(name);
    Mat& mi = m.try_emplace(name, Mat(p.rows, p.cols)).first->second;
    Mat& vi = v.try_emplace(name, Mat(p.rows, p.cols)).first->second;
    for (size_t k = 0; k < p.size(); ++k) {
      mi.a[k] = beta1 * mi.a[k] + (Real(1) - beta1) * g.a[k];
      vi.a[k] = beta2 * vi.a[k] + (Real(1) - beta2) * g.a[k] * g.a[k];
      const Real mhat = mi.a[k] / bc1;
      const Real vhat = vi.a[k] / bc2;
      p.a[k] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

Real lr_schedule(long step, const ModelConfig& cfg) {
  if (step < 0) throw BadRange("lr_schedule: step must be >= 0");
  const long k = step / cfg.lr_decay_steps;
  return cfg.lr * std::pow(cfg.lr_decay, static_cast<Real>(k));
}

TrainState init_train_state(const ModelConfig& cfg) {
  TrainState s;
  s.model = build_model(cfg);
  s.rng = Rng(mix_seed(cfg.seed, hash_str("train-state")));
  return s;
}

LossBreakdown train_step_batch(
    const std::vector<std::pair<const FeatureBundle*, const FeatureBundle*>>& batch,
    TrainState& state, const FrozenModels& frozen) {
  if (batch.empty()) throw BadRange("train_step: empty batch");
  const ModelConfig& cfg = state.model.cfg;
  const int mult = cfg.temporal_multiple();

  Tape t;
  Ctx c{t, state.model.params};
  Var total;
  std::vector<TotalLossVars> members;
  members.reserve(batch.size());
  for (size_t i = 0; i < batch.size(); ++i) {
    FeatureBundle xp = pad_bundle(*batch[i].first, mult);
    FeatureBundle yp;
    if (!cfg.ablation.disable_cycle) yp = pad_bundle(*batch[i].second, mult);
    TotalLossVars v = total_loss_t(c, frozen, xp, yp, cfg);
    members.push_back(v);
    total = i == 0 ? v.total : t.add(total, v.total);
  }
  if (batch.size() > 1) total = t.scale(total, Real(1) / static_cast<Real>(batch.size()));

  // Mean breakdown across members (term sets are identical by construction).
  LossBreakdown mean = extract_breakdown(t, members[0]);
  for (size_t i = 1; i < members.size(); ++i) {
    LossBreakdown bi = extract_breakdown(t, members[i]);
    for (size_t k = 0; k < mean.terms.size(); ++k) {
      mean.terms[k].raw += bi.terms[k].raw;
      mean.terms[k].contribution += bi.terms[k].contribution;
    }
    mean.total += bi.total;
  }
  const Real inv = Real(1) / static_cast<Real>(members.size());
  for (auto& term : mean.terms) {
    term.raw *= inv;
    term.contribution *= inv;
  }
  mean.total *= inv;
  check_finite(mean);

  t.backward(total);
  std::map<std::string, Mat> grads;
  for (const auto& [name, id] : c.bound)
    if (t.has_grad(Var{&t, id})) grads.emplace(name, t.grad(Var{&t, id}));

  state.opt.step(state.model.params, grads, lr_schedule(state.step, cfg));
  ++state.step;
  return mean;
}

LossBreakdown train_step(const FeatureBundle& x, const FeatureBundle& y, TrainState& state,
                         const FrozenModels& frozen) {
  return train_step_batch({{&x, &y}}, state, frozen);
}

namespace {

// Epoch plan derived from (seed, epoch) alone so that resuming from a
// checkpoint replays the identical schedule.
struct EpochPlan {
  std::vector<std::pair<int, int>> pairs;  // (x index, y index)
};

EpochPlan make_epoch_plan(const std::vector<FeatureBundle>& corpus, const ModelConfig& cfg,
                          long epoch) {
  Rng rng(mix_seed(cfg.seed, mix_seed(hash_str("epoch-plan"), static_cast<uint64_t>(epoch))));
  const int n = static_cast<int>(corpus.size());
  std::vector<int> order(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
  for (int i = n - 1; i > 0; --i) std::swap(order[i], order[rng.uniform_int(i + 1)]);
  // Length bucketing: batches group utterances of similar padded length.
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return corpus[static_cast<size_t>(a)].mel.rows < corpus[static_cast<size_t>(b)].mel.rows;
  });

  EpochPlan plan;
  for (int xi : order) {
    int yi = xi;
    if (!cfg.ablation.disable_cycle) {
      // Uniform over utterances of other speakers.
      std::vector<int> others;
      for (int j = 0; j < n; ++j)
        if (corpus[static_cast<size_t>(j)].speaker_id != corpus[static_cast<size_t>(xi)].speaker_id)
          others.push_back(j);
      if (others.empty()) throw CorpusTooSmall("need utterances from at least 2 speakers");
      yi = others[static_cast<size_t>(rng.uniform_int(static_cast<int>(others.size())))];
    }
    plan.pairs.emplace_back(xi, yi);
  }
  return plan;
}

}  // namespace

void fit(const std::vector<FeatureBundle>& corpus, TrainState& state,
         const FrozenModels& frozen, const FitOptions& opts) {
  if (corpus.empty()) throw CorpusTooSmall("empty corpus");
  const ModelConfig& cfg = state.model.cfg;
  if (!cfg.ablation.disable_cycle) {
    bool two = false;
    for (const auto& u : corpus)
      if (u.speaker_id != corpus[0].speaker_id) {
        two = true;
        break;
      }
    if (!two) throw CorpusTooSmall("cycle training needs >= 2 speakers");
  }

  namespace fs = std::filesystem;
  std::ofstream log;
  if (!opts.out_dir.empty()) {
    fs::create_directories(opts.out_dir);
    log.open(opts.out_dir + "/loss_log.ndjson", std::ios::app);
    save_checkpoint(opts.out_dir + "/ckpt_latest.mtcr", state);
  }

  const long start_epoch = state.epoch;
  for (long e = start_epoch; e < opts.epochs; ++e) {
    EpochPlan plan = make_epoch_plan(corpus, cfg, e);
    // Skip batches already consumed when resuming mid-epoch.
    const long steps_per_epoch =
        (static_cast<long>(plan.pairs.size()) + opts.batch_size - 1) / opts.batch_size;
    long done_in_epoch = state.step - e * steps_per_epoch;
    if (done_in_epoch < 0) done_in_epoch = 0;

    for (long b = done_in_epoch; b < steps_per_epoch; ++b) {
      if (opts.max_steps >= 0 && state.step >= opts.max_steps) return;
      std::vector<std::pair<const FeatureBundle*, const FeatureBundle*>> batch;
      for (int k = 0; k < opts.batch_size; ++k) {
        const size_t idx = static_cast<size_t>(b) * opts.batch_size + static_cast<size_t>(k);
        if (idx >= plan.pairs.size()) break;
        batch.emplace_back(&corpus[static_cast<size_t>(plan.pairs[idx].first)],
                           &corpus[static_cast<size_t>(plan.pairs[idx].second)]);
      }
      const long step_before = state.step;
      LossBreakdown bd = train_step_batch(batch, state, frozen);
      if (opts.on_step) opts.on_step(step_before, bd);
      if (log.is_open())
        log << breakdown_record(step_before, lr_schedule(step_before, cfg), bd) << "\n";
      if (!opts.out_dir.empty() && opts.ckpt_interval > 0 &&
          state.step % opts.ckpt_interval == 0)
        save_checkpoint(opts.out_dir + "/ckpt_latest.mtcr", state);
    }
    state.epoch = e + 1;
  }
  if (!opts.out_dir.empty()) save_checkpoint(opts.out_dir + "/ckpt_latest.mtcr", state);
}

void save_checkpoint(const std::string& path, const TrainState& state) {
  ArrayContainer c;
  c.meta["config"] = config_to_json_text(state.model.cfg);
  c.meta["kind"] = "checkpoint";
  c.add_scalar("state/step", static_cast<Real>(state.step));
  c.add_scalar("state/epoch", static_cast<Real>(state.epoch));
  c.add_scalar("state/adam_t", static_cast<Real>(state.opt.t));
  Real rng_bits;
  static_assert(sizeof(Real) == sizeof(uint64_t) || sizeof(Real) == 4);
  if constexpr (sizeof(Real) == sizeof(uint64_t)) {
    std::memcpy(&rng_bits, &state.rng.state, sizeof(rng_bits));
    c.add_scalar("state/rng", rng_bits);
  } else {
    c.add("state/rng32", {2},
          {static_cast<Real>(state.rng.state & 0xffffffffull),
           static_cast<Real>(state.rng.state >> 32)});
  }
  for (const auto& [name, p] : state.model.params.params) c.add_mat("param/" + name, p);
  for (const auto& [name, mo] : state.opt.m) c.add_mat("adam.m/" + name, mo);
  for (const auto& [name, vo] : state.opt.v) c.add_mat("adam.v/" + name, vo);
  write_container_atomic(path, c);
}

TrainState load_checkpoint(const std::string& path) {
  ArrayContainer c = read_container(path);
  auto it = c.meta.find("config");
  if (it == c.meta.end()) throw CorruptContainer("checkpoint lacks a config echo: " + path);
  ModelConfig cfg = config_from_json_text(it->second);

  TrainState s;
  s.model.cfg = cfg;
  s.step = static_cast<long>(c.scalar("state/step"));
  s.epoch = static_cast<long>(c.scalar("state/epoch"));
  s.opt.t = static_cast<long>(c.scalar("state/adam_t"));
  if (c.has("state/rng")) {
    const Real bits = c.scalar("state/rng");
    std::memcpy(&s.rng.state, &bits, sizeof(uint64_t));
  } else {
    Mat parts = c.mat("state/rng32");
    s.rng.state = static_cast<uint64_t>(parts.a[0]) |
                  (static_cast<uint64_t>(parts.a[1]) << 32);
  }
  for (const auto& a : c.arrays) {
    if (a.name.rfind("param/", 0) == 0)
      s.model.params.params[a.name.substr(6)] = c.mat(a.name);
    else if (a.name.rfind("adam.m/", 0) == 0)
      s.opt.m[a.name.substr(7)] = c.mat(a.name);
    else if (a.name.rfind("adam.v/", 0) == 0)
      s.opt.v[a.name.substr(7)] = c.mat(a.name);
  }
  if (s.model.params.params.empty()) throw CorruptContainer("checkpoint has no parameters");
  return s;
}

std::string breakdown_record(long step, Real lr, const LossBreakdown& b) {
  nlohmann::json j;
  j["step"] = step;
  j["lr"] = lr;
  j["total"] = b.total;
  nlohmann::json terms = nlohmann::json::object();
  for (const auto& t : b.terms)
    terms[t.name] = {{"raw", t.raw}, {"weight", t.weight}, {"contribution", t.contribution}};
  j["terms"] = terms;
  return j.dump();
}

}  // namespace mtcr
