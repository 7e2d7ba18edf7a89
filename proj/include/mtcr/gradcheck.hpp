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

#pragma once

#include "mtcr/train.hpp"

namespace mtcr {

struct FdOptions {
  Real eps = 1e-5;
  Real tolerance = 1e-3;
  int min_coords = 200;
  uint64_t data_seed = 99;
  // Relative error denominator floor; keeps truncation noise on near-zero
  // gradients from reading as failures.
  Real denom_floor = 1e-3;
  // Test hook: multiply the analytic gradient of one parameter to verify
  // the harness localizes a fault.
  std::string corrupt_param;
  Real corrupt_factor = 1;
  bool throw_on_failure = true;
};

struct FdCoord {
  std::string param;
  int index = -1;
  Real analytic = 0, numeric = 0, rel_err = 0;
};

struct FdReport {
  Real max_rel_err = 0;
  FdCoord worst;
  int n_checked = 0;
  int n_params = 0;
  bool passed = false;
};

// Central-difference check of total_loss over one random (X, Y) pair:
// samples >= min_coords coordinates spanning every parameter tensor and
// compares (L(p+eps) - L(p-eps)) / 2eps against the tape gradient.
FdReport finite_difference_check(const ModelConfig& cfg_tiny, const FdOptions& opts = {});

}  // namespace mtcr
