#include "kc/common/tensor_file.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>

#include "kc/common/error.hpp"

namespace kc {

namespace {

constexpr std::string_view kMagic = "KCTENSR1";
constexpr int kFormatVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(std::string_view in, std::size_t pos) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  return v;
}

std::size_t element_count(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

}  // namespace

const NamedTensor& TensorFile::tensor(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.name == name) return t;
  throw DataError("tensor file has no tensor named '" + name + "'");
}

std::string encode_tensor_file(const TensorFile& file) {
  std::string blob;
  Json entries = Json::array();
  std::size_t offset = 0;
  for (const auto& t : file.tensors) {
    if (element_count(t.shape) != t.values.size())
      throw Error("tensor '" + t.name + "' shape does not match its value count");
    for (double v : t.values) {
      const float f = static_cast<float>(v);
      if (!std::isfinite(f)) throw DataError("tensor '" + t.name + "' holds a non-finite value");
      put_u32(blob, std::bit_cast<std::uint32_t>(f));
    }
    entries.push_back(Json{{"name", t.name},
                           {"shape", t.shape},
                           {"offset", offset},
                           {"count", t.values.size()}});
    offset += t.values.size();
  }
  Json header{{"format_version", kFormatVersion},
              {"meta", file.meta.is_null() ? Json::object() : file.meta},
              {"vocab", file.vocab},
              {"tensors", entries},
              {"checksum", "sha256:" + sha256_hex(blob)}};
  const std::string h = canonical_dump(header);
  std::string out(kMagic);
  put_u32(out, static_cast<std::uint32_t>(h.size()));
  out += h;
  out += blob;
  return out;
}

TensorFile decode_tensor_file(std::string_view bytes) {
  if (bytes.size() < kMagic.size() + 4 || bytes.substr(0, kMagic.size()) != kMagic)
    throw DataError("not a model artifact (bad magic)");
  const std::uint32_t hlen = get_u32(bytes, kMagic.size());
  const std::size_t hstart = kMagic.size() + 4;
  if (hstart + hlen > bytes.size()) throw DataError("model artifact truncated in header");
  Json header;
  try {
    header = Json::parse(bytes.substr(hstart, hlen));
  } catch (const Json::parse_error& e) {
    throw DataError(std::string("model artifact header is not JSON: ") + e.what());
  }
  if (header.value("format_version", 0) != kFormatVersion)
    throw DataError("unsupported model artifact version");
  const std::string_view blob = bytes.substr(hstart + hlen);
  if (header.at("checksum").get<std::string>() != "sha256:" + sha256_hex(blob))
    throw DataError("model artifact checksum mismatch");

  TensorFile file;
  file.meta = header.at("meta");
  file.vocab = header.at("vocab").get<std::vector<std::string>>();
  for (const auto& e : header.at("tensors")) {
    NamedTensor t;
    t.name = e.at("name").get<std::string>();
    t.shape = e.at("shape").get<std::vector<std::size_t>>();
    const auto offset = e.at("offset").get<std::size_t>();
    const auto count = e.at("count").get<std::size_t>();
    if (count != element_count(t.shape) || (offset + count) * 4 > blob.size())
      throw DataError("tensor '" + t.name + "' extends past the blob");
    t.values.reserve(count);
    for (std::size_t i = 0; i < count; ++i)
      t.values.push_back(std::bit_cast<float>(get_u32(blob, (offset + i) * 4)));
    file.tensors.push_back(std::move(t));
  }
  return file;
}

void write_tensor_file(const std::filesystem::path& path, const TensorFile& file) {
  write_file_atomic(path, encode_tensor_file(file));
}

TensorFile read_tensor_file(const std::filesystem::path& path) {
  return decode_tensor_file(read_file(path));
}

}  // namespace kc
