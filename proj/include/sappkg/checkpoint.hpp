// Copyright 2024 The sappkg authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <cstring>
#include <map>
#include <string>
#include <vector>

#include "sappkg/kge.hpp"
#include "sappkg/util.hpp"

namespace sappkg {

// Checkpoints are a text header (one "key value" pair per line, then one
// "block <name> <count>" line per parameter block, then "end") followed by
// the raw parameter data as little-endian 64-bit floats in block order.

namespace detail {

inline void append_f64_le(std::string& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
  }
}

inline double read_f64_le(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) {
    bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  }
  double v;
  std::memcpy(&v, &bits, sizeof(v));
  return v;
}

struct CheckpointText {
  std::map<std::string, std::string> fields;
  std::vector<std::pair<std::string, std::size_t>> blocks;
  std::size_t data_offset = 0;
};

inline CheckpointText parse_checkpoint_header(const std::string& bytes,
                                              const std::string& magic) {
  CheckpointText ct;
  std::size_t pos = 0;
  bool first = true;
  while (pos < bytes.size()) {
    const std::size_t nl = bytes.find('\n', pos);
    if (nl == std::string::npos) throw InputError("checkpoint: truncated header");
    const std::string line = bytes.substr(pos, nl - pos);
    pos = nl + 1;
    if (first) {
      if (line != magic) throw InputError("checkpoint: bad magic '" + line + "'");
      first = false;
      continue;
    }
    if (line == "end") {
      ct.data_offset = pos;
      return ct;
    }
    const std::size_t sp = line.find(' ');
    if (sp == std::string::npos) throw InputError("checkpoint: malformed line '" + line + "'");
    const std::string key = line.substr(0, sp);
    const std::string value = line.substr(sp + 1);
    if (key == "block") {
      const std::size_t sp2 = value.find(' ');
      if (sp2 == std::string::npos) throw InputError("checkpoint: malformed block line");
      ct.blocks.push_back({value.substr(0, sp2), std::stoull(value.substr(sp2 + 1))});
    } else {
      ct.fields[key] = value;
    }
  }
  throw InputError("checkpoint: missing end marker");
}

inline std::vector<double> read_block_data(const std::string& bytes,
                                           const CheckpointText& ct) {
  std::size_t total = 0;
  for (const auto& [name, count] : ct.blocks) total += count;
  if (bytes.size() != ct.data_offset + total * 8) {
    throw InputError("checkpoint: data size mismatch");
  }
  std::vector<double> data(total);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data()) + ct.data_offset;
  for (std::size_t i = 0; i < total; ++i) data[i] = read_f64_le(p + 8 * i);
  return data;
}

}  // namespace detail

inline std::uint64_t vocab_hash(const std::vector<std::string>& ids) {
  std::string joined;
  for (const auto& id : ids) {
    joined += id;
    joined.push_back('\n');
  }
  return fnv1a(joined);
}

inline std::string serialize_model(const KgeModel& m,
                                   const std::map<std::string, std::string>& extra = {}) {
  std::string out = "sappkg-checkpoint v1\n";
  out += std::string("kind ") + model_kind_name(m.kind) + "\n";
  out += "entities " + std::to_string(m.entity_count) + "\n";
  out += "relations " + std::to_string(m.relation_count) + "\n";
  out += "dim " + std::to_string(m.dim) + "\n";
  out += "relation_dim " + std::to_string(m.relation_dim) + "\n";
  out += "slices " + std::to_string(m.slices) + "\n";
  for (const auto& [k, v] : extra) out += k + " " + v + "\n";
  for (const auto& b : m.blocks()) {
    out += "block " + b.name + " " + std::to_string(b.count) + "\n";
  }
  out += "end\n";
  for (double v : m.params) detail::append_f64_le(out, v);
  return out;
}

inline void save_model(const KgeModel& m, const std::string& path,
                       const std::map<std::string, std::string>& extra = {}) {
  write_file(path, serialize_model(m, extra));
}

inline KgeModel deserialize_model(const std::string& bytes,
                                  std::map<std::string, std::string>* fields_out = nullptr) {
  auto ct = detail::parse_checkpoint_header(bytes, "sappkg-checkpoint v1");
  KgeModel m;
  m.kind = model_kind_from_name(ct.fields.at("kind"));
  m.entity_count = std::stoi(ct.fields.at("entities"));
  m.relation_count = std::stoi(ct.fields.at("relations"));
  m.dim = std::stoi(ct.fields.at("dim"));
  m.relation_dim = std::stoi(ct.fields.at("relation_dim"));
  m.slices = std::stoi(ct.fields.at("slices"));
  // layout check
  const auto expect = m.blocks();
  if (expect.size() != ct.blocks.size()) {
    throw InputError("checkpoint: block count mismatch for kind " +
                     std::string(model_kind_name(m.kind)));
  }
  for (std::size_t i = 0; i < expect.size(); ++i) {
    if (expect[i].name != ct.blocks[i].first || expect[i].count != ct.blocks[i].second) {
      throw InputError("checkpoint: block '" + ct.blocks[i].first +
                       "' does not match the expected layout");
    }
  }
  m.params = detail::read_block_data(bytes, ct);
  if (fields_out) *fields_out = ct.fields;
  return m;
}

inline KgeModel load_model(const std::string& path,
                           std::map<std::string, std::string>* fields_out = nullptr) {
  return deserialize_model(read_file(path), fields_out);
}

}  // namespace sappkg
