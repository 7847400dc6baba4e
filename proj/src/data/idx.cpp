// Copyright 2026 The RSTG Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

// IDX is the MNIST container: big-endian u32 magic, big-endian u32 extents,
// then raw unsigned bytes.

#include <fstream>
#include <sstream>

#include "rstg/syncmnist.hpp"

namespace rstg::syncmnist {

namespace {

std::uint32_t read_be32(std::istream& in, const std::filesystem::path& path) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) {
    throw IdxFormatError("truncated IDX header in " + path.string());
  }
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | b[3];
}

void write_be32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8),
                     static_cast<char>(v)};
  out.write(b, 4);
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IdxFormatError("cannot open " + path.string());
  return in;
}

void expect_magic(std::uint32_t got, std::uint32_t want, const std::filesystem::path& path) {
  if (got != want) {
    std::ostringstream msg;
    msg << "bad IDX magic 0x" << std::hex << got << " in " << path.string() << " (expected 0x" << want << ")";
    throw IdxFormatError(msg.str());
  }
}

}  // namespace

IdxImages read_idx_images(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  expect_magic(read_be32(in, path), kIdxImageMagic, path);
  IdxImages images;
  images.count = read_be32(in, path);
  images.rows = read_be32(in, path);
  images.cols = read_be32(in, path);
  if (images.rows == 0 || images.cols == 0) throw IdxFormatError("zero image extent in " + path.string());
  images.pixels.resize(images.count * images.rows * images.cols);
  if (!in.read(reinterpret_cast<char*>(images.pixels.data()), static_cast<std::streamsize>(images.pixels.size()))) {
    throw IdxFormatError("truncated IDX image payload in " + path.string());
  }
  return images;
}

std::vector<std::uint8_t> read_idx_labels(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  expect_magic(read_be32(in, path), kIdxLabelMagic, path);
  std::vector<std::uint8_t> labels(read_be32(in, path));
  if (!in.read(reinterpret_cast<char*>(labels.data()), static_cast<std::streamsize>(labels.size()))) {
    throw IdxFormatError("truncated IDX label payload in " + path.string());
  }
  return labels;
}

void write_idx_images(const std::filesystem::path& path, const IdxImages& images) {
  std::ofstream out(path, std::ios::binary);
  write_be32(out, kIdxImageMagic);
  write_be32(out, static_cast<std::uint32_t>(images.count));
  write_be32(out, static_cast<std::uint32_t>(images.rows));
  write_be32(out, static_cast<std::uint32_t>(images.cols));
  out.write(reinterpret_cast<const char*>(images.pixels.data()), static_cast<std::streamsize>(images.pixels.size()));
  if (!out) throw IdxFormatError("failed writing " + path.string());
}

void write_idx_labels(const std::filesystem::path& path, std::span<const std::uint8_t> labels) {
  std::ofstream out(path, std::ios::binary);
  write_be32(out, kIdxLabelMagic);
  write_be32(out, static_cast<std::uint32_t>(labels.size()));
  out.write(reinterpret_cast<const char*>(labels.data()), static_cast<std::streamsize>(labels.size()));
  if (!out) throw IdxFormatError("failed writing " + path.string());
}

SpriteBank load_idx_sprites(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
                            std::size_t per_class) {
  const IdxImages images = read_idx_images(images_path);
  const std::vector<std::uint8_t> labels = read_idx_labels(labels_path);
  if (labels.size() != images.count) {
    throw IdxFormatError("image/label count mismatch: " + std::to_string(images.count) + " vs " +
                         std::to_string(labels.size()));
  }
  SpriteBank bank;
  bank.source = "idx:" + images_path.filename().string();
  const std::size_t pixels = images.rows * images.cols;
  std::vector<float> buffer(pixels);
  for (std::size_t i = 0; i < images.count; ++i) {
    if (labels[i] > 9) throw IdxFormatError("label " + std::to_string(labels[i]) + " is not a digit");
    auto& list = bank.by_class[labels[i]];
    if (list.size() >= per_class) continue;
    for (std::size_t p = 0; p < pixels; ++p) buffer[p] = static_cast<float>(images.pixels[i * pixels + p]) / 255.0f;
    list.push_back(resize_to_sprite(buffer, images.rows, images.cols));
  }
  bank.validate();
  return bank;
}

}  // namespace rstg::syncmnist
