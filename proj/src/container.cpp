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

#include "mtcr/container.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "mtcr/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "container I/O assumes a little-endian host");

namespace mtcr {

using nlohmann::json;

namespace {
constexpr char kMagic[4] = {'M', 'T', 'C', 'R'};
#ifdef MTCR_SINGLE_PRECISION
constexpr const char* kElementType = "f32";
#else
constexpr const char* kElementType = "f64";
#endif
}  // namespace

const NamedArray* ArrayContainer::find(const std::string& name) const {
  for (const auto& a : arrays)
    if (a.name == name) return &a;
  return nullptr;
}

const NamedArray& ArrayContainer::at(const std::string& name) const {
  const NamedArray* a = find(name);
  if (!a) throw Error("container has no array named " + name);
  return *a;
}

void ArrayContainer::add(const std::string& name, std::vector<int64_t> shape,
                         std::vector<Real> data) {
  if (name.empty()) throw DuplicateName("array name must be non-empty");
  if (find(name)) throw DuplicateName("duplicate array name: " + name);
  int64_t n = 1;
  for (int64_t d : shape) n *= d;
  if (n != static_cast<int64_t>(data.size()))
    throw DimensionMismatch("array data does not match shape: " + name);
  arrays.push_back({name, std::move(shape), std::move(data)});
}

void ArrayContainer::add_mat(const std::string& name, const Mat& m) {
  add(name, {m.rows, m.cols}, m.a);
}

void ArrayContainer::add_scalar(const std::string& name, Real v) { add(name, {1, 1}, {v}); }

Mat ArrayContainer::mat(const std::string& name) const {
  const NamedArray& a = at(name);
  if (a.shape.empty()) throw DimensionMismatch("array has no shape: " + name);
  Mat m;
  m.rows = static_cast<int>(a.shape[0]);
  m.cols = static_cast<int>(a.elements() / (a.shape[0] == 0 ? 1 : a.shape[0]));
  m.a = a.data;
  return m;
}

Real ArrayContainer::scalar(const std::string& name) const {
  const NamedArray& a = at(name);
  if (a.elements() != 1) throw DimensionMismatch("array is not a scalar: " + name);
  return a.data[0];
}

void write_container(const std::string& path, const ArrayContainer& c) {
  json entries = json::array();
  uint64_t offset = 0;
  for (const auto& a : c.arrays) {
    json e;
    e["name"] = a.name;
    e["element_type"] = kElementType;
    e["shape"] = a.shape;
    e["byte_offset"] = offset;
    entries.push_back(e);
    offset += a.data.size() * sizeof(Real);
  }
  json header;
  header["entries"] = entries;
  header["meta"] = c.meta;
  const std::string htext = header.dump();

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot open for writing: " + path);
  f.write(kMagic, 4);
  const uint64_t hlen = htext.size();
  f.write(reinterpret_cast<const char*>(&hlen), 8);
  f.write(htext.data(), static_cast<std::streamsize>(htext.size()));
  for (const auto& a : c.arrays)
    f.write(reinterpret_cast<const char*>(a.data.data()),
            static_cast<std::streamsize>(a.data.size() * sizeof(Real)));
  if (!f) throw Error("write failed: " + path);
}

void write_container_atomic(const std::string& path, const ArrayContainer& c) {
  const std::string tmp = path + ".tmp";
  write_container(tmp, c);
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw Error("rename failed: " + tmp + " -> " + path);
}

ArrayContainer read_container(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open: " + path);
  f.seekg(0, std::ios::end);
  const uint64_t fsize = static_cast<uint64_t>(f.tellg());
  f.seekg(0);

  char magic[4];
  uint64_t hlen = 0;
  if (fsize < 12 || !f.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw CorruptContainer("bad magic in " + path);
  if (!f.read(reinterpret_cast<char*>(&hlen), 8) || 12 + hlen > fsize)
    throw CorruptContainer("bad header length in " + path);
  std::string htext(hlen, '\0');
  if (!f.read(htext.data(), static_cast<std::streamsize>(hlen)))
    throw CorruptContainer("truncated header in " + path);

  json header;
  try {
    header = json::parse(htext);
  } catch (const json::exception& e) {
    throw CorruptContainer(std::string("unparseable header: ") + e.what());
  }

  ArrayContainer c;
  if (header.contains("meta"))
    for (auto it = header["meta"].begin(); it != header["meta"].end(); ++it)
      c.meta[it.key()] = it.value().get<std::string>();

  const uint64_t payload_size = fsize - 12 - hlen;
  uint64_t expected_offset = 0;
  for (const auto& e : header.at("entries")) {
    NamedArray a;
    a.name = e.at("name").get<std::string>();
    a.shape = e.at("shape").get<std::vector<int64_t>>();
    const std::string etype = e.at("element_type").get<std::string>();
    const uint64_t off = e.at("byte_offset").get<uint64_t>();
    if (etype != "f32" && etype != "f64")
      throw CorruptContainer("unknown element type: " + etype);
    if (off < expected_offset)
      throw CorruptContainer("overlapping or non-increasing offsets at: " + a.name);
    if (off > expected_offset)  // gaps are legal, skip them
      f.seekg(static_cast<std::streamoff>(off - expected_offset), std::ios::cur);
    const size_t esize = etype == "f32" ? 4 : 8;
    const uint64_t nbytes = static_cast<uint64_t>(a.elements()) * esize;
    if (off + nbytes > payload_size)
      throw CorruptContainer("truncated payload at array: " + a.name);
    expected_offset = off + nbytes;

    if (c.find(a.name)) throw CorruptContainer("duplicate array name: " + a.name);
    a.data.resize(static_cast<size_t>(a.elements()));
    if (esize == sizeof(Real)) {
      if (!f.read(reinterpret_cast<char*>(a.data.data()), static_cast<std::streamsize>(nbytes)))
        throw CorruptContainer("read failed at array: " + a.name);
    } else {
      std::vector<char> raw(nbytes);
      if (!f.read(raw.data(), static_cast<std::streamsize>(nbytes)))
        throw CorruptContainer("read failed at array: " + a.name);
      for (size_t i = 0; i < a.data.size(); ++i) {
        if (esize == 4) {
          float v;
          std::memcpy(&v, raw.data() + i * 4, 4);
          a.data[i] = static_cast<Real>(v);
        } else {
          double v;
          std::memcpy(&v, raw.data() + i * 8, 8);
          a.data[i] = static_cast<Real>(v);
        }
      }
    }
    c.arrays.push_back(std::move(a));
  }
  if (expected_offset > payload_size)
    throw CorruptContainer("payload length mismatch in " + path);
  return c;
}

}  // namespace mtcr
