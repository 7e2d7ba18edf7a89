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

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mtcr/mat.hpp"

namespace mtcr {

// Named n-dimensional float array; data is contiguous row-major.
struct NamedArray {
  std::string name;
  std::vector<int64_t> shape;
  std::vector<Real> data;

  int64_t elements() const {
    int64_t n = 1;
    for (int64_t d : shape) n *= d;
    return n;
  }
};

// On-disk format: magic "MTCR", little-endian u64 header length, JSON
// header {"entries": [{name, element_type, shape, byte_offset}...],
// "meta": {string: string}}, then the payload of little-endian floats.
struct ArrayContainer {
  std::vector<NamedArray> arrays;
  std::map<std::string, std::string> meta;

  const NamedArray* find(const std::string& name) const;
  const NamedArray& at(const std::string& name) const;
  bool has(const std::string& name) const { return find(name) != nullptr; }
  void add(const std::string& name, std::vector<int64_t> shape, std::vector<Real> data);
  void add_mat(const std::string& name, const Mat& m);
  void add_scalar(const std::string& name, Real v);
  Mat mat(const std::string& name) const;  // collapses trailing dims into cols
  Real scalar(const std::string& name) const;
};

void write_container(const std::string& path, const ArrayContainer& c);
ArrayContainer read_container(const std::string& path);
// write + rename so concurrent readers never observe a partial file.
void write_container_atomic(const std::string& path, const ArrayContainer& c);

}  // namespace mtcr
