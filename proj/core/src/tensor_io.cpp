#include "iafs/tensor_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "iafs/error.hpp"

namespace iafs {

namespace {

constexpr std::size_t kHeaderBytes = 16;
constexpr std::size_t kDimsBytes = 12;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

std::vector<std::uint8_t> encode_tensor(const ImageTensor& tensor) {
  if (!tensor.all_finite()) throw NumericalError("encode_tensor: non-finite values");
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderBytes + kDimsBytes + 4 * tensor.size());
  out.resize(sizeof(kTensorMagic));
  std::memcpy(out.data(), kTensorMagic, sizeof(kTensorMagic));
  put_u32(out, kTensorFormatVersion);
  put_u32(out, 0);
  put_u32(out, static_cast<std::uint32_t>(tensor.channels()));
  put_u32(out, static_cast<std::uint32_t>(tensor.height()));
  put_u32(out, static_cast<std::uint32_t>(tensor.width()));
  for (double v : tensor.values()) {
    put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  return out;
}

ImageTensor decode_tensor(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < kHeaderBytes + kDimsBytes) throw IoError("tensor file truncated header");
  if (std::memcmp(bytes.data(), kTensorMagic, sizeof(kTensorMagic)) != 0) {
    throw IoError("tensor file: bad magic");
  }
  const std::uint32_t version = get_u32(bytes.data() + 8);
  if (version != kTensorFormatVersion) {
    throw IoError("tensor file: unsupported version " + std::to_string(version));
  }
  const Shape shape{get_u32(bytes.data() + 16), get_u32(bytes.data() + 20),
                    get_u32(bytes.data() + 24)};
  if (bytes.size() != kHeaderBytes + kDimsBytes + 4 * shape.size()) {
    throw IoError("tensor file: payload size does not match dims " + shape.str());
  }
  std::vector<double> values(shape.size());
  const std::uint8_t* p = bytes.data() + kHeaderBytes + kDimsBytes;
  for (std::size_t i = 0; i < values.size(); ++i, p += 4) {
    values[i] = static_cast<double>(std::bit_cast<float>(get_u32(p)));
  }
  ImageTensor out(shape, std::move(values));
  if (!out.all_finite()) throw NumericalError("tensor file contains non-finite values");
  return out;
}

void write_tensor(const std::filesystem::path& path, const ImageTensor& tensor) {
  const auto bytes = encode_tensor(tensor);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw IoError("write failed: " + path.string());
}

ImageTensor read_tensor(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw MissingInput("cannot open tensor file: " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)),
                                  std::istreambuf_iterator<char>());
  return decode_tensor(bytes);
}

}  // namespace iafs
