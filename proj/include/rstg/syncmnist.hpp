// Copyright 2026 The RSTG Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

// SyncMNIST: digits moving on a black background where exactly one pair of
// distinct digits (or none) shares an identical per-frame displacement
// sequence. The pair determines the class.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace rstg::syncmnist {

inline constexpr std::size_t kSpriteSize = 18;
inline constexpr std::size_t kFrameSize = 64;
inline constexpr std::size_t kDefaultFrames = 10;
inline constexpr int kNumPairClasses = 45;
inline constexpr int kNoPairClass = 45;
inline constexpr int kNumClasses = 46;
inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;  // 2051
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;  // 2049

class IdxFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Sprites

struct Sprite {
  std::array<float, kSpriteSize * kSpriteSize> pixels{};
};

struct SpriteBank {
  std::array<std::vector<Sprite>, 10> by_class;
  std::string source = "procedural";

  /// Throws DatasetError naming the first digit class without sprites.
  void validate() const;
};

/// Built-in glyphs: `variants` jittered renderings of a stroke font per digit.
SpriteBank procedural_sprites(std::size_t variants = 4, std::uint64_t seed = 7);

struct IdxImages {
  std::size_t count = 0, rows = 0, cols = 0;
  std::vector<std::uint8_t> pixels;
};

IdxImages read_idx_images(const std::filesystem::path& path);
std::vector<std::uint8_t> read_idx_labels(const std::filesystem::path& path);
void write_idx_images(const std::filesystem::path& path, const IdxImages& images);
void write_idx_labels(const std::filesystem::path& path, std::span<const std::uint8_t> labels);

/// Area-average resample of a rows x cols image with values in [0,1].
Sprite resize_to_sprite(std::span<const float> image, std::size_t rows, std::size_t cols);

/// Up to `per_class` sprites per digit from an IDX image/label pair.
SpriteBank load_idx_sprites(const std::filesystem::path& images, const std::filesystem::path& labels,
                            std::size_t per_class = 100);

// ---------------------------------------------------------------------------
// Class taxonomy: unordered pairs {a,b}, a<b, in lexicographic order -> 0..44.

int pair_class(int a, int b);
std::pair<int, int> class_pair(int id);
nlohmann::json taxonomy_json();

// ---------------------------------------------------------------------------
// Motion

struct Position {
  int row = 0;
  int col = 0;
  bool operator==(const Position&) const = default;
};

struct Displacement {
  int drow = 0;
  int dcol = 0;
  bool operator==(const Displacement&) const = default;
};

struct Bounds {
  int max_row = static_cast<int>(kFrameSize - kSpriteSize);
  int max_col = static_cast<int>(kFrameSize - kSpriteSize);
};

/// Per-step velocities drawn uniformly from {-max_speed..max_speed}^2.
std::vector<Displacement> sample_displacements(std::mt19937_64& rng, std::size_t steps, int max_speed);

struct Walk {
  std::vector<Position> positions;
  bool reflected = false;
};

/// Applies displacements from `start`, reflecting off the bounds.
Walk walk(Position start, std::span<const Displacement> displacements, const Bounds& bounds);

/// Random walk with `steps` positions: uniform start, per-step velocity,
/// reflection at the bounds.
std::vector<Position> generate_trajectory(std::mt19937_64& rng, std::size_t steps, const Bounds& bounds,
                                          int max_speed = 3);

std::vector<Displacement> displacements_of(std::span<const Position> positions);

// ---------------------------------------------------------------------------
// Samples and datasets

enum class ClassSubset { full, pairs10 };

struct GeneratorConfig {
  std::size_t frames = kDefaultFrames;
  std::size_t num_digits = 3;
  int max_speed = 3;
  // Distractors must differ from every other digit by more than this many
  // pixels (Chebyshev) in at least one frame's displacement.
  int desync_threshold = 1;
  ClassSubset subset = ClassSubset::full;

  void validate() const;
  /// Label ids reachable under `subset` (taxonomy ids, ascending).
  std::vector<int> classes() const;
};

struct VideoSample {
  std::size_t frames = 0, height = kFrameSize, width = kFrameSize;
  std::vector<float> pixels;  // frames x height x width, values in [0,1]
  int label = kNoPairClass;
  std::vector<int> digit_ids;
  std::vector<std::vector<Position>> trajectories;  // per digit, per frame top-left
};

enum class Split { train, val, test };
std::string split_name(Split split);
Split parse_split(const std::string& name);

struct DatasetSpec {
  std::size_t num_videos = 0;
  std::uint64_t seed = 0;
  Split split = Split::train;
  GeneratorConfig generator;
};

struct Dataset {
  DatasetSpec spec;
  std::string sprite_source = "procedural";
  std::vector<VideoSample> samples;
};

/// Deterministic in (seed, split, index): serial and parallel generation agree.
VideoSample generate_sample(const GeneratorConfig& config, const SpriteBank& sprites, std::uint64_t seed,
                            Split split, std::size_t index);

Dataset generate_dataset(const DatasetSpec& spec, const SpriteBank& sprites);

/// Recovers the class from stored trajectories: the unique pair of distinct
/// digits with identical displacement sequences, or the no-pair class.
/// Returns -1 when the trajectories are ambiguous.
int label_from_trajectories(const std::vector<std::vector<Position>>& trajectories,
                            std::span<const int> digit_ids);

/// 64x64 frame holding one digit at a uniform random position; label = digit.
std::pair<std::vector<float>, int> single_digit_frame(std::mt19937_64& rng, const SpriteBank& sprites);

// ---------------------------------------------------------------------------
// Serialization: <stem>.bin record stream + <stem>.json manifest.

nlohmann::json generator_json(const GeneratorConfig& config);
GeneratorConfig generator_from_json(const nlohmann::json& j);

/// Streams records to <stem>.bin; close() writes the manifest.
class DatasetWriter {
 public:
  DatasetWriter(const std::filesystem::path& stem, DatasetSpec spec, std::string sprite_source);
  ~DatasetWriter();
  DatasetWriter(const DatasetWriter&) = delete;
  DatasetWriter& operator=(const DatasetWriter&) = delete;

  void append(const VideoSample& sample);
  void close();
  std::size_t count() const { return count_; }

 private:
  std::filesystem::path stem_;
  DatasetSpec spec_;
  std::string sprite_source_;
  std::ofstream bin_;
  std::size_t count_ = 0, bytes_ = 0;
  bool closed_ = false;
};

void save_dataset(const Dataset& dataset, const std::filesystem::path& stem);
Dataset load_dataset(const std::filesystem::path& stem);

/// Regenerates the first `check` samples from the manifest parameters and
/// compares quantized frames and labels. False on any mismatch.
bool matches_regeneration(const Dataset& loaded, const SpriteBank& sprites, std::size_t check = 8);

std::uint8_t quantize(float value);

}  // namespace rstg::syncmnist
