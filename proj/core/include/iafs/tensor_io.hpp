#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "iafs/tensor.hpp"

namespace iafs {

/// Raw tensor file layout (all integers little-endian):
///
///   bytes  0..7   magic "IAFSTNSR"
///   bytes  8..11  u32 format version (1)
///   bytes 12..15  u32 reserved (0)
///   bytes 16..27  u32 channels, u32 height, u32 width
///   bytes 28..    f32 values, channel-major row-major
inline constexpr char kTensorMagic[8] = {'I', 'A', 'F', 'S', 'T', 'N', 'S', 'R'};
inline constexpr std::uint32_t kTensorFormatVersion = 1;

std::vector<std::uint8_t> encode_tensor(const ImageTensor& tensor);
ImageTensor decode_tensor(const std::vector<std::uint8_t>& bytes);

void write_tensor(const std::filesystem::path& path, const ImageTensor& tensor);
ImageTensor read_tensor(const std::filesystem::path& path);

/// 8-bit preview. One channel is written as gray, three as RGB; other channel
/// counts write channel 0. Values are clamped to [0,1] and quantized with
/// round-half-even.
void write_png(const std::filesystem::path& path, const ImageTensor& image);

/// Quantization used by write_png, exposed for tests.
std::uint8_t quantize_unit(double v);

}  // namespace iafs
