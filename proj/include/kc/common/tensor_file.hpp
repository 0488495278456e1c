#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "kc/common/io.hpp"

namespace kc {

struct NamedTensor {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> values;  // stored as float32 on disk
};

struct TensorFile {
  Json meta;
  std::vector<std::string> vocab;
  std::vector<NamedTensor> tensors;

  const NamedTensor& tensor(const std::string& name) const;
};

// Layout (all integers little-endian):
//   8 bytes   magic "KCTENSR1"
//   4 bytes   u32 header length H
//   H bytes   UTF-8 JSON header:
//               {"format_version":1,"meta":{...},"vocab":[...],
//                "tensors":[{"name","shape","offset","count"}...],
//                "checksum":"sha256:<hex of the tensor blob>"}
//   rest      tensor blob: float32 little-endian, tensors back to back,
//             `offset` counted in elements from the start of the blob.
std::string encode_tensor_file(const TensorFile& file);
TensorFile decode_tensor_file(std::string_view bytes);

void write_tensor_file(const std::filesystem::path& path, const TensorFile& file);
TensorFile read_tensor_file(const std::filesystem::path& path);

// Rounds through float32, the precision models are persisted at.
inline double round_to_float(double v) { return static_cast<double>(static_cast<float>(v)); }

}  // namespace kc
