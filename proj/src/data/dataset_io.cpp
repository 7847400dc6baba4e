// Copyright 2026 The RSTG Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <fstream>

#include "rstg/syncmnist.hpp"

namespace rstg::syncmnist {

namespace {

constexpr const char* kRecordFormat = "syncmnist-records-1";

void put_u16(std::ostream& out, std::size_t v) {
  if (v > 0xffff) throw DatasetError("value " + std::to_string(v) + " does not fit in u16");
  const char b[2] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff)};
  out.write(b, 2);
}

bool get_u16(std::istream& in, std::size_t& v) {
  unsigned char b[2];
  if (!in.read(reinterpret_cast<char*>(b), 2)) return false;
  v = static_cast<std::size_t>(b[0]) | (static_cast<std::size_t>(b[1]) << 8);
  return true;
}

std::filesystem::path with_suffix(const std::filesystem::path& stem, const char* suffix) {
  return std::filesystem::path(stem.string() + suffix);
}

}  // namespace

std::uint8_t quantize(float value) {
  const float clamped = std::min(1.0f, std::max(0.0f, value));
  return static_cast<std::uint8_t>(std::lround(clamped * 255.0f));
}

nlohmann::json generator_json(const GeneratorConfig& c) {
  return {{"frames", c.frames},
          {"num_digits", c.num_digits},
          {"max_speed", c.max_speed},
          {"desync_threshold", c.desync_threshold},
          {"subset", c.subset == ClassSubset::full ? "full" : "pairs10"}};
}

GeneratorConfig generator_from_json(const nlohmann::json& j) {
  GeneratorConfig c;
  c.frames = j.value("frames", c.frames);
  c.num_digits = j.value("num_digits", c.num_digits);
  c.max_speed = j.value("max_speed", c.max_speed);
  c.desync_threshold = j.value("desync_threshold", c.desync_threshold);
  const std::string subset = j.value("subset", std::string("full"));
  if (subset == "full") {
    c.subset = ClassSubset::full;
  } else if (subset == "pairs10") {
    c.subset = ClassSubset::pairs10;
  } else {
    throw DatasetError("unknown class subset '" + subset + "'");
  }
  return c;
}

DatasetWriter::DatasetWriter(const std::filesystem::path& stem, DatasetSpec spec, std::string sprite_source)
    : stem_(stem), spec_(std::move(spec)), sprite_source_(std::move(sprite_source)) {
  if (stem_.has_parent_path()) std::filesystem::create_directories(stem_.parent_path());
  const auto bin_path = with_suffix(stem_, ".bin");
  bin_.open(bin_path, std::ios::binary | std::ios::trunc);
  if (!bin_) throw DatasetError("cannot open " + bin_path.string() + " for writing");
}

DatasetWriter::~DatasetWriter() {
  if (!closed_) {
    try {
      close();
    } catch (...) {
    }
  }
}

void DatasetWriter::append(const VideoSample& s) {
  put_u16(bin_, s.frames);
  put_u16(bin_, s.height);
  put_u16(bin_, s.width);
  std::vector<std::uint8_t> bytes(s.pixels.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = quantize(s.pixels[i]);
  bin_.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  put_u16(bin_, static_cast<std::size_t>(s.label));
  bytes_ += 8 + bytes.size();
  ++count_;
}

void DatasetWriter::close() {
  closed_ = true;
  bin_.flush();
  if (!bin_) throw DatasetError("I/O failure writing " + with_suffix(stem_, ".bin").string());
  bin_.close();
  nlohmann::json manifest = {{"format", kRecordFormat},
                             {"count", count_},
                             {"stream_bytes", bytes_},
                             {"seed", spec_.seed},
                             {"split", split_name(spec_.split)},
                             {"generator", generator_json(spec_.generator)},
                             {"sprites", sprite_source_},
                             {"taxonomy", taxonomy_json()},
                             {"record_layout", "u16 T, u16 H, u16 W, u8 frames[T*H*W], u16 label (little-endian)"}};
  const auto json_path = with_suffix(stem_, ".json");
  std::ofstream js(json_path, std::ios::trunc);
  js << manifest.dump(2) << '\n';
  if (!js) throw DatasetError("I/O failure writing " + json_path.string());
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& stem) {
  DatasetWriter writer(stem, dataset.spec, dataset.sprite_source);
  for (const VideoSample& s : dataset.samples) writer.append(s);
  writer.close();
}

Dataset load_dataset(const std::filesystem::path& stem) {
  const auto json_path = with_suffix(stem, ".json");
  std::ifstream js(json_path);
  if (!js) throw DatasetError("cannot open manifest " + json_path.string());
  const nlohmann::json manifest = nlohmann::json::parse(js);
  if (manifest.value("format", std::string()) != kRecordFormat) {
    throw DatasetError("unsupported manifest format in " + json_path.string());
  }
  Dataset dataset;
  dataset.spec.num_videos = manifest.at("count").get<std::size_t>();
  dataset.spec.seed = manifest.at("seed").get<std::uint64_t>();
  dataset.spec.split = parse_split(manifest.at("split").get<std::string>());
  dataset.spec.generator = generator_from_json(manifest.at("generator"));
  dataset.sprite_source = manifest.value("sprites", std::string("procedural"));

  const auto bin_path = with_suffix(stem, ".bin");
  std::ifstream bin(bin_path, std::ios::binary);
  if (!bin) throw DatasetError("cannot open record stream " + bin_path.string());
  std::vector<std::uint8_t> bytes;
  for (std::size_t i = 0; i < dataset.spec.num_videos; ++i) {
    VideoSample s;
    std::size_t label = 0;
    if (!get_u16(bin, s.frames) || !get_u16(bin, s.height) || !get_u16(bin, s.width)) {
      throw DatasetError("record stream shorter than manifest count (" + std::to_string(i) + " of " +
                         std::to_string(dataset.spec.num_videos) + ")");
    }
    bytes.resize(s.frames * s.height * s.width);
    if (!bin.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size())) ||
        !get_u16(bin, label)) {
      throw DatasetError("truncated record " + std::to_string(i) + " in " + bin_path.string());
    }
    s.pixels.resize(bytes.size());
    for (std::size_t p = 0; p < bytes.size(); ++p) s.pixels[p] = static_cast<float>(bytes[p]) / 255.0f;
    s.label = static_cast<int>(label);
    dataset.samples.push_back(std::move(s));
  }
  if (bin.peek() != std::char_traits<char>::eof()) {
    throw DatasetError("record stream longer than manifest count in " + bin_path.string());
  }
  return dataset;
}

bool matches_regeneration(const Dataset& loaded, const SpriteBank& sprites, std::size_t check) {
  const std::size_t n = std::min(check, loaded.samples.size());
  for (std::size_t i = 0; i < n; ++i) {
    const VideoSample fresh =
        generate_sample(loaded.spec.generator, sprites, loaded.spec.seed, loaded.spec.split, i);
    const VideoSample& stored = loaded.samples[i];
    if (fresh.label != stored.label || fresh.pixels.size() != stored.pixels.size()) return false;
    for (std::size_t p = 0; p < fresh.pixels.size(); ++p) {
      if (quantize(fresh.pixels[p]) != quantize(stored.pixels[p])) return false;
    }
  }
  return true;
}

}  // namespace rstg::syncmnist
