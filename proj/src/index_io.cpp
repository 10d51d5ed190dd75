// Copyright 2026 The patentrag Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <bit>
#include <fstream>
#include <iterator>

#include <zlib.h>

#include "patentrag/error.hpp"
#include "patentrag/index.hpp"

namespace patentrag {
namespace {

constexpr char kMagic[4] = {'P', 'V', 'I', 'X'};
constexpr std::uint16_t kVersion = 1;
constexpr std::uint8_t kHasIvf = 0x01;

class Writer {
 public:
  template <typename T>
  void put(T value) {
    using U = std::make_unsigned_t<T>;
    auto bits = static_cast<U>(value);
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      bytes_.push_back(static_cast<char>(bits & 0xFF));
      bits = static_cast<U>(bits >> 8);
    }
  }
  void put_float(float value) { put(std::bit_cast<std::uint32_t>(value)); }
  void put_bytes(std::string_view s) { bytes_.append(s); }
  std::string& bytes() { return bytes_; }

 private:
  std::string bytes_;
};

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    std::make_unsigned_t<T> value = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
      value |= static_cast<std::make_unsigned_t<T>>(static_cast<unsigned char>(bytes_[pos_ + i]))
               << (8 * i);
    pos_ += sizeof(T);
    return static_cast<T>(value);
  }
  float get_float() { return std::bit_cast<float>(get<std::uint32_t>()); }
  std::string_view get_bytes(std::size_t n) {
    need(n);
    auto out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (n > remaining()) throw Error(ErrorCode::CorruptFile, "unexpected end of index data");
  }
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

std::uint32_t crc32_of(std::string_view bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in bounded chunks.
  constexpr std::size_t kChunk = 1u << 30;
  for (std::size_t off = 0; off < bytes.size(); off += kChunk) {
    const std::size_t len = std::min(kChunk, bytes.size() - off);
    crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data() + off), static_cast<uInt>(len));
  }
  return static_cast<std::uint32_t>(crc);
}

}  // namespace

std::string serialize_index(const VectorIndex& index) {
  Writer w;
  w.put_bytes(std::string_view(kMagic, 4));
  w.put<std::uint16_t>(kVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(index.dimension()));
  w.put<std::uint64_t>(index.size());
  w.put<std::uint8_t>(index.is_trained() ? kHasIvf : 0);
  for (std::size_t i = 0; i < index.size(); ++i) {
    const std::string& id = index.id_at(i);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(id.size()));
    w.put_bytes(id);
    const auto v = index.vector_at(i);
    for (Eigen::Index d = 0; d < v.size(); ++d) w.put_float(v[d]);
  }
  if (const auto& ivf = index.ivf()) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(ivf->nlist()));
    for (Eigen::Index r = 0; r < ivf->centroids.rows(); ++r)
      for (Eigen::Index c = 0; c < ivf->centroids.cols(); ++c) w.put_float(ivf->centroids(r, c));
    for (std::uint32_t list : ivf->assignments) w.put<std::uint32_t>(list);
  }
  w.put<std::uint32_t>(crc32_of(w.bytes()));
  return std::move(w.bytes());
}

VectorIndex deserialize_index(std::string_view bytes) {
  if (bytes.size() < 4) throw Error(ErrorCode::CorruptFile, "index data too short");
  const std::string_view body = bytes.substr(0, bytes.size() - 4);
  if (Reader(bytes.substr(body.size())).get<std::uint32_t>() != crc32_of(body))
    throw Error(ErrorCode::CorruptFile, "checksum mismatch");

  Reader r(body);
  if (r.get_bytes(4) != std::string_view(kMagic, 4)) throw Error(ErrorCode::CorruptFile, "bad magic");
  const auto version = r.get<std::uint16_t>();
  if (version != kVersion)
    throw Error(ErrorCode::CorruptFile, "unsupported format version " + std::to_string(version));
  const auto dimension = r.get<std::uint32_t>();
  const auto count = r.get<std::uint64_t>();
  const auto flags = r.get<std::uint8_t>();
  if (dimension == 0 || dimension > (1u << 20)) throw Error(ErrorCode::CorruptFile, "bad dimension");
  if ((flags & ~kHasIvf) != 0) throw Error(ErrorCode::CorruptFile, "unknown flags");
  // Each entry needs at least 4 + 4 * dimension bytes.
  if (count > r.remaining() / (4 + 4ull * dimension)) throw Error(ErrorCode::CorruptFile, "bad entry count");

  std::vector<std::string> ids;
  std::vector<float> data;
  ids.reserve(count);
  data.reserve(count * dimension);
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto len = r.get<std::uint32_t>();
    ids.emplace_back(r.get_bytes(len));
    for (std::uint32_t d = 0; d < dimension; ++d) data.push_back(r.get_float());
  }
  std::optional<IvfState> ivf;
  if (flags & kHasIvf) {
    const auto nlist = r.get<std::uint32_t>();
    if (nlist == 0 || nlist > count) throw Error(ErrorCode::CorruptFile, "bad nlist");
    IvfState state;
    state.centroids.resize(nlist, dimension);
    for (std::uint32_t l = 0; l < nlist; ++l)
      for (std::uint32_t d = 0; d < dimension; ++d) state.centroids(l, d) = r.get_float();
    state.assignments.resize(count);
    for (auto& a : state.assignments) a = r.get<std::uint32_t>();
    ivf = std::move(state);
  }
  if (r.remaining() != 0) throw Error(ErrorCode::CorruptFile, "trailing bytes");
  return VectorIndex::from_parts(static_cast<int>(dimension), std::move(ids), std::move(data),
                                 std::move(ivf));
}

void save_index(const VectorIndex& index, const std::filesystem::path& path) {
  const std::string bytes = serialize_index(index);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw Error(ErrorCode::IoFailure, "write to '" + path.string() + "' failed");
}

VectorIndex load_index(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open '" + path.string() + "'");
  const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  if (in.bad()) throw Error(ErrorCode::IoFailure, "read from '" + path.string() + "' failed");
  return deserialize_index(bytes);
}

}  // namespace patentrag
