#include "ebu/idx.hpp"

#include <fstream>
#include <iterator>
#include <sstream>

#include "ebu/error.hpp"

namespace ebu {
namespace {

std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t offset) {
  if (bytes.size() < offset + 4) throw FormatError("idx: truncated header");
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void write_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

void check_magic(std::uint32_t got, std::uint32_t want) {
  if (got != want) {
    std::ostringstream msg;
    msg << "idx: wrong magic 0x" << std::hex << got << " (expected 0x" << want << ")";
    throw FormatError(msg.str());
  }
}

void check_payload(std::size_t have, std::size_t header, std::size_t want) {
  if (have < header + want) throw FormatError("idx: truncated payload");
  if (have > header + want) throw FormatError("idx: trailing bytes after payload");
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("idx: cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

IdxImageSet parse_idx_images(std::span<const std::uint8_t> bytes) {
  check_magic(read_be32(bytes, 0), kIdxImageMagic);
  IdxImageSet set;
  set.count = read_be32(bytes, 4);
  set.rows = read_be32(bytes, 8);
  set.cols = read_be32(bytes, 12);
  check_payload(bytes.size(), 16, set.count * set.rows * set.cols);
  set.pixels.assign(bytes.begin() + 16, bytes.end());
  return set;
}

std::vector<std::uint8_t> parse_idx_labels(std::span<const std::uint8_t> bytes) {
  check_magic(read_be32(bytes, 0), kIdxLabelMagic);
  std::size_t count = read_be32(bytes, 4);
  check_payload(bytes.size(), 8, count);
  return {bytes.begin() + 8, bytes.end()};
}

IdxImageSet load_idx_images(const std::filesystem::path& images_path) {
  return parse_idx_images(read_file(images_path));
}

IdxImageSet load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path) {
  IdxImageSet set = load_idx_images(images_path);
  set.labels = parse_idx_labels(read_file(labels_path));
  if (set.labels.size() != set.count) throw FormatError("idx: image and label counts differ");
  for (auto label : set.labels)
    if (label > 9) throw FormatError("idx: label outside 0-9");
  return set;
}

std::vector<std::uint8_t> encode_idx_images(const IdxImageSet& set) {
  std::vector<std::uint8_t> out;
  out.reserve(16 + set.pixels.size());
  write_be32(out, kIdxImageMagic);
  write_be32(out, static_cast<std::uint32_t>(set.count));
  write_be32(out, static_cast<std::uint32_t>(set.rows));
  write_be32(out, static_cast<std::uint32_t>(set.cols));
  out.insert(out.end(), set.pixels.begin(), set.pixels.end());
  return out;
}

std::vector<std::uint8_t> encode_idx_labels(std::span<const std::uint8_t> labels) {
  std::vector<std::uint8_t> out;
  out.reserve(8 + labels.size());
  write_be32(out, kIdxLabelMagic);
  write_be32(out, static_cast<std::uint32_t>(labels.size()));
  out.insert(out.end(), labels.begin(), labels.end());
  return out;
}

}  // namespace ebu
