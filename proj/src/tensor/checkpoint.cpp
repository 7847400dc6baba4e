// Copyright 2026 The RSTG Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "rstg/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

RSTG_NAMESPACE_BEGIN

namespace {

constexpr std::size_t kMagicSize = 5;

void put_u64(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 8);
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw CheckpointError("truncated checkpoint");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

}  // namespace

void save_checkpoint(const ParameterStore& store, const std::filesystem::path& path, const nlohmann::json& meta) {
  nlohmann::json entries = nlohmann::json::array();
  std::size_t offset = 0;
  for (const Parameter& p : store.parameters()) {
    entries.push_back({{"name", p.name},
                       {"shape", p.tensor.shape()},
                       {"offset", offset},
                       {"count", p.tensor.numel()},
                       {"trainable", p.trainable},
                       {"init", {{"distribution", p.init.distribution}, {"bound", p.init.bound}, {"seed", p.init.seed}}}});
    offset += p.tensor.numel();
  }
  const nlohmann::json header = {{"version", 1},
                                 {"written_precision", kPrecisionName},
                                 {"store_seed", store.seed()},
                                 {"entries", entries},
                                 {"meta", meta}};
  const std::string text = header.dump();

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot open " + tmp.string() + " for writing");
    out.write(kCheckpointMagic, kMagicSize);
    put_u64(out, text.size());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const Parameter& p : store.parameters()) {
      for (real v : p.tensor.data()) put_u64(out, std::bit_cast<std::uint64_t>(static_cast<double>(v)));
    }
    out.flush();
    if (!out) throw CheckpointError("I/O failure writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  char magic[kMagicSize];
  if (!in.read(magic, kMagicSize) || std::memcmp(magic, kCheckpointMagic, kMagicSize) != 0) {
    throw CheckpointError("bad checkpoint magic in " + path.string());
  }
  const std::uint64_t length = get_u64(in);
  std::string text(length, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(length))) throw CheckpointError("truncated header");
  const nlohmann::json header = nlohmann::json::parse(text);

  Checkpoint ckpt;
  ckpt.meta = header.value("meta", nlohmann::json::object());
  const auto data_start = in.tellg();
  for (const auto& e : header.at("entries")) {
    CheckpointEntry entry;
    entry.name = e.at("name").get<std::string>();
    entry.shape = e.at("shape").get<Shape>();
    entry.offset = e.at("offset").get<std::size_t>();
    const auto count = e.at("count").get<std::size_t>();
    if (count != shape_numel(entry.shape)) throw CheckpointError("entry '" + entry.name + "' count/shape mismatch");
    in.seekg(data_start + static_cast<std::streamoff>(entry.offset * 8));
    entry.values.resize(count);
    for (double& v : entry.values) v = std::bit_cast<double>(get_u64(in));
    ckpt.entries.push_back(std::move(entry));
  }
  return ckpt;
}

nlohmann::json load_checkpoint(ParameterStore& store, const std::filesystem::path& path, bool strict) {
  const Checkpoint ckpt = read_checkpoint(path);
  std::map<std::string, const CheckpointEntry*> by_name;
  for (const CheckpointEntry& e : ckpt.entries) by_name[e.name] = &e;
  for (const Parameter& p : store.parameters()) {
    auto it = by_name.find(p.name);
    if (it == by_name.end()) {
      if (strict) throw CheckpointError("checkpoint " + path.string() + " lacks parameter '" + p.name + "'");
      continue;
    }
    if (it->second->shape != p.tensor.shape()) {
      throw CheckpointError("parameter '" + p.name + "' has shape " + shape_to_string(it->second->shape) +
                            " in checkpoint, expected " + shape_to_string(p.tensor.shape()));
    }
    Tensor t = p.tensor;
    auto dst = t.mutable_data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<real>(it->second->values[i]);
  }
  return ckpt.meta;
}

RSTG_NAMESPACE_END
