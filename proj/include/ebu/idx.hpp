#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace ebu {

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

struct IdxImageSet {
  std::size_t count = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> pixels;  // count * rows * cols
  std::vector<std::uint8_t> labels;  // count, empty if no label file was read

  std::span<const std::uint8_t> image(std::size_t i) const {
    return {pixels.data() + i * rows * cols, rows * cols};
  }
};

/// Parses an IDX image file (magic 0x00000803) from memory. Throws FormatError.
IdxImageSet parse_idx_images(std::span<const std::uint8_t> bytes);
/// Parses an IDX label file (magic 0x00000801). Throws FormatError.
std::vector<std::uint8_t> parse_idx_labels(std::span<const std::uint8_t> bytes);

IdxImageSet load_idx_images(const std::filesystem::path& images_path);
/// Loads images plus their labels and checks the counts agree and labels are digits.
IdxImageSet load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path);

std::vector<std::uint8_t> encode_idx_images(const IdxImageSet& set);
std::vector<std::uint8_t> encode_idx_labels(std::span<const std::uint8_t> labels);

}  // namespace ebu
