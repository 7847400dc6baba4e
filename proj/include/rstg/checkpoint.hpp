// Copyright 2026 The RSTG Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

// Parameter checkpoint layout:
//   bytes [0,5)    magic "RSTG1"
//   bytes [5,13)   u64 little-endian length L of the JSON header
//   bytes [13,13+L) JSON header {"entries":[{name, shape, offset, count, ...}], "meta":{...}}
//   remainder      f64 little-endian values; `offset` counts values from here

#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "rstg/parameters.hpp"

RSTG_NAMESPACE_BEGIN

inline constexpr char kCheckpointMagic[] = "RSTG1";

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CheckpointEntry {
  std::string name;
  Shape shape;
  std::size_t offset = 0;
  std::vector<double> values;
};

struct Checkpoint {
  nlohmann::json meta;
  std::vector<CheckpointEntry> entries;
};

void save_checkpoint(const ParameterStore& store, const std::filesystem::path& path,
                     const nlohmann::json& meta = nlohmann::json::object());

Checkpoint read_checkpoint(const std::filesystem::path& path);

/// Loads values into an existing store. With `strict`, every parameter of the
/// store must be present in the file with the same shape. Returns the meta block.
nlohmann::json load_checkpoint(ParameterStore& store, const std::filesystem::path& path, bool strict = true);

RSTG_NAMESPACE_END
