// Copyright 2026 The RSTG Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cstdlib>
#include <numeric>

#include "rstg/random.hpp"
#include "rstg/syncmnist.hpp"

namespace rstg::syncmnist {

namespace {

constexpr std::uint64_t kLabelStream = 0x4c4142454cULL;
constexpr int kMaxAttempts = 10000;

std::uint64_t split_code(Split split) { return static_cast<std::uint64_t>(split) + 1; }

bool desynchronized(std::span<const Displacement> a, std::span<const Displacement> b, int threshold) {
  int worst = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max({worst, std::abs(a[i].drow - b[i].drow), std::abs(a[i].dcol - b[i].dcol)});
  }
  return worst > threshold;
}

bool inside(const std::vector<Position>& path, const Bounds& bounds) {
  return std::all_of(path.begin(), path.end(), [&](const Position& p) {
    return p.row >= 0 && p.col >= 0 && p.row <= bounds.max_row && p.col <= bounds.max_col;
  });
}

std::vector<Position> integrate(Position start, std::span<const Displacement> steps) {
  std::vector<Position> path{start};
  for (const Displacement& d : steps) path.push_back({path.back().row + d.drow, path.back().col + d.dcol});
  return path;
}

Position uniform_position(std::mt19937_64& rng, const Bounds& bounds) {
  std::uniform_int_distribution<int> row(0, bounds.max_row), col(0, bounds.max_col);
  const int r = row(rng);
  return {r, col(rng)};
}

int reflect(int v, int hi) {
  while (v < 0 || v > hi) v = v < 0 ? -v : 2 * hi - v;
  return v;
}

}  // namespace

// ---------------------------------------------------------------------------

int pair_class(int a, int b) {
  if (a > b) std::swap(a, b);
  if (a < 0 || b > 9 || a == b) {
    throw std::invalid_argument("pair_class: need two distinct digits in 0..9, got " + std::to_string(a) + "," +
                                std::to_string(b));
  }
  int id = 0;
  for (int i = 0; i < a; ++i) id += 9 - i;
  return id + (b - a - 1);
}

std::pair<int, int> class_pair(int id) {
  if (id < 0 || id >= kNumPairClasses) throw std::out_of_range("class_pair: id " + std::to_string(id));
  for (int a = 0; a < 9; ++a) {
    if (id < 9 - a) return {a, a + 1 + id};
    id -= 9 - a;
  }
  throw std::logic_error("class_pair: unreachable");
}

nlohmann::json taxonomy_json() {
  nlohmann::json pairs = nlohmann::json::array();
  for (int id = 0; id < kNumPairClasses; ++id) {
    auto [a, b] = class_pair(id);
    pairs.push_back({{"id", id}, {"digits", {a, b}}});
  }
  return {{"pairs", pairs}, {"no_pair_class", kNoPairClass}, {"num_classes", kNumClasses}};
}

// ---------------------------------------------------------------------------

std::vector<Displacement> sample_displacements(std::mt19937_64& rng, std::size_t steps, int max_speed) {
  std::uniform_int_distribution<int> speed(-max_speed, max_speed);
  std::vector<Displacement> out(steps);
  for (Displacement& d : out) {
    d.drow = speed(rng);
    d.dcol = speed(rng);
  }
  return out;
}

Walk walk(Position start, std::span<const Displacement> displacements, const Bounds& bounds) {
  Walk w;
  w.positions.push_back(start);
  for (const Displacement& d : displacements) {
    const Position& p = w.positions.back();
    const Position raw{p.row + d.drow, p.col + d.dcol};
    const Position next{reflect(raw.row, bounds.max_row), reflect(raw.col, bounds.max_col)};
    w.reflected = w.reflected || !(next == raw);
    w.positions.push_back(next);
  }
  return w;
}

std::vector<Position> generate_trajectory(std::mt19937_64& rng, std::size_t steps, const Bounds& bounds,
                                          int max_speed) {
  if (steps == 0) return {};
  const Position start = uniform_position(rng, bounds);
  return walk(start, sample_displacements(rng, steps - 1, max_speed), bounds).positions;
}

std::vector<Displacement> displacements_of(std::span<const Position> positions) {
  std::vector<Displacement> out;
  for (std::size_t i = 1; i < positions.size(); ++i) {
    out.push_back({positions[i].row - positions[i - 1].row, positions[i].col - positions[i - 1].col});
  }
  return out;
}

// ---------------------------------------------------------------------------

void GeneratorConfig::validate() const {
  if (num_digits < 2) throw DatasetError("num_digits must be at least 2");
  if (frames < 2) throw DatasetError("need at least two frames");
  if (max_speed < 0) throw DatasetError("max_speed must be non-negative");
  if (desync_threshold < 0) throw DatasetError("desync_threshold must be non-negative");
}

std::vector<int> GeneratorConfig::classes() const {
  std::vector<int> ids;
  if (subset == ClassSubset::full) {
    ids.resize(kNumClasses);
    std::iota(ids.begin(), ids.end(), 0);
    return ids;
  }
  for (int a = 0; a < 5; ++a)
    for (int b = a + 1; b < 5; ++b) ids.push_back(pair_class(a, b));
  ids.push_back(kNoPairClass);
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::string split_name(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "train";
}

Split parse_split(const std::string& name) {
  if (name == "train") return Split::train;
  if (name == "val") return Split::val;
  if (name == "test") return Split::test;
  throw DatasetError("unknown split '" + name + "'");
}

VideoSample generate_sample(const GeneratorConfig& config, const SpriteBank& sprites, std::uint64_t seed, Split split,
                            std::size_t index) {
  config.validate();
  sprites.validate();
  const std::vector<int> classes = config.classes();
  const std::size_t block = index / classes.size();

  // Labels cycle through a seeded permutation of the classes, so every block
  // of |classes| consecutive samples is exactly balanced.
  std::vector<int> order = classes;
  std::mt19937_64 label_rng(derive_seed(seed, split_code(split) ^ kLabelStream, block));
  std::shuffle(order.begin(), order.end(), label_rng);

  VideoSample sample;
  sample.frames = config.frames;
  sample.label = order[index % classes.size()];

  std::mt19937_64 rng(derive_seed(seed, split_code(split), index));
  const Bounds bounds;
  const int max_digit = config.subset == ClassSubset::pairs10 ? 4 : 9;
  std::uniform_int_distribution<int> digit(0, max_digit);
  const std::size_t steps = config.frames - 1;

  std::vector<std::vector<Displacement>> motion;
  if (sample.label != kNoPairClass) {
    auto [a, b] = class_pair(sample.label);
    for (int attempt = 0;; ++attempt) {
      if (attempt == kMaxAttempts) throw DatasetError("could not place the synchronous pair inside the frame");
      const std::vector<Displacement> shared = sample_displacements(rng, steps, config.max_speed);
      std::vector<Position> pa = integrate(uniform_position(rng, bounds), shared);
      std::vector<Position> pb = integrate(uniform_position(rng, bounds), shared);
      // A reflection would break the shared motion, so the pair is redrawn.
      if (!inside(pa, bounds) || !inside(pb, bounds)) continue;
      sample.digit_ids = {a, b};
      sample.trajectories = {std::move(pa), std::move(pb)};
      motion = {shared, shared};
      break;
    }
  }
  while (sample.digit_ids.size() < config.num_digits) {
    for (int attempt = 0;; ++attempt) {
      if (attempt == kMaxAttempts) throw DatasetError("could not draw a desynchronized distractor");
      std::vector<Position> path = generate_trajectory(rng, config.frames, bounds, config.max_speed);
      std::vector<Displacement> d = displacements_of(path);
      const bool ok = std::all_of(motion.begin(), motion.end(), [&](const std::vector<Displacement>& other) {
        return desynchronized(d, other, config.desync_threshold);
      });
      if (!ok) continue;
      sample.digit_ids.push_back(digit(rng));
      sample.trajectories.push_back(std::move(path));
      motion.push_back(std::move(d));
      break;
    }
  }

  // Shuffle digit order so the synchronous pair is not always first.
  std::vector<std::size_t> perm(sample.digit_ids.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<int> ids;
  std::vector<std::vector<Position>> paths;
  for (std::size_t p : perm) {
    ids.push_back(sample.digit_ids[p]);
    paths.push_back(sample.trajectories[p]);
  }
  sample.digit_ids = std::move(ids);
  sample.trajectories = std::move(paths);

  sample.pixels.assign(sample.frames * sample.height * sample.width, 0.0f);
  for (std::size_t d = 0; d < sample.digit_ids.size(); ++d) {
    const auto& variants = sprites.by_class[static_cast<std::size_t>(sample.digit_ids[d])];
    std::uniform_int_distribution<std::size_t> pick(0, variants.size() - 1);
    const Sprite& sprite = variants[pick(rng)];
    for (std::size_t t = 0; t < sample.frames; ++t) {
      const Position& p = sample.trajectories[d][t];
      float* frame = sample.pixels.data() + t * sample.height * sample.width;
      for (std::size_t r = 0; r < kSpriteSize; ++r) {
        float* row = frame + (static_cast<std::size_t>(p.row) + r) * sample.width + static_cast<std::size_t>(p.col);
        for (std::size_t c = 0; c < kSpriteSize; ++c) row[c] = std::max(row[c], sprite.pixels[r * kSpriteSize + c]);
      }
    }
  }
  return sample;
}

Dataset generate_dataset(const DatasetSpec& spec, const SpriteBank& sprites) {
  spec.generator.validate();
  Dataset dataset;
  dataset.spec = spec;
  dataset.sprite_source = sprites.source;
  dataset.samples.reserve(spec.num_videos);
  for (std::size_t i = 0; i < spec.num_videos; ++i) {
    dataset.samples.push_back(generate_sample(spec.generator, sprites, spec.seed, spec.split, i));
  }
  return dataset;
}

int label_from_trajectories(const std::vector<std::vector<Position>>& trajectories, std::span<const int> digit_ids) {
  if (trajectories.size() != digit_ids.size()) return -1;
  std::vector<std::vector<Displacement>> motion;
  for (const auto& path : trajectories) motion.push_back(displacements_of(path));
  int found = kNoPairClass;
  int matches = 0;
  for (std::size_t i = 0; i < motion.size(); ++i) {
    for (std::size_t j = i + 1; j < motion.size(); ++j) {
      if (motion[i] != motion[j]) continue;
      ++matches;
      if (digit_ids[i] == digit_ids[j]) return -1;
      found = pair_class(digit_ids[i], digit_ids[j]);
    }
  }
  return matches <= 1 ? found : -1;
}

std::pair<std::vector<float>, int> single_digit_frame(std::mt19937_64& rng, const SpriteBank& sprites) {
  sprites.validate();
  std::uniform_int_distribution<int> digit(0, 9);
  const int label = digit(rng);
  const auto& variants = sprites.by_class[static_cast<std::size_t>(label)];
  std::uniform_int_distribution<std::size_t> pick(0, variants.size() - 1);
  const Sprite& sprite = variants[pick(rng)];
  const Position p = uniform_position(rng, Bounds{});
  std::vector<float> frame(kFrameSize * kFrameSize, 0.0f);
  for (std::size_t r = 0; r < kSpriteSize; ++r)
    for (std::size_t c = 0; c < kSpriteSize; ++c)
      frame[(static_cast<std::size_t>(p.row) + r) * kFrameSize + static_cast<std::size_t>(p.col) + c] =
          sprite.pixels[r * kSpriteSize + c];
  return {std::move(frame), label};
}

}  // namespace rstg::syncmnist
