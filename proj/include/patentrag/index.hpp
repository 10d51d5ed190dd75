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

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "patentrag/kmeans.hpp"

namespace patentrag {

struct SearchHit {
  std::string doc_id;
  float score = 0.0f;  // inner product with the query
  int rank = 0;        // 1-based

  bool operator==(const SearchHit&) const = default;
};

/// Result ordering: higher score first, equal scores by ascending doc_id.
inline bool ranks_before(float score_a, std::string_view id_a, float score_b, std::string_view id_b) {
  if (score_a != score_b) return score_a > score_b;
  return id_a < id_b;
}

/// Inner product of two float vectors with double accumulation in index
/// order, rounded once to float. Every search path scores through this.
template <typename DerivedA, typename DerivedB>
float inner_product(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) sum += static_cast<double>(a(i)) * static_cast<double>(b(i));
  return static_cast<float>(sum);
}

/// Inverted-file partition state produced by train_ivf().
struct IvfState {
  RowMatrix<float> centroids;                       // nlist x dimension
  std::vector<std::uint32_t> assignments;           // entry -> list
  std::vector<std::vector<std::uint32_t>> lists;    // list -> entries, in entry order

  int nlist() const noexcept { return static_cast<int>(centroids.rows()); }
};

/// Maximum-inner-product store of (doc_id, vector) entries with an optional
/// k-means inverted-file partition. Not synchronized: mutate from one thread,
/// then share as const.
class VectorIndex {
 public:
  explicit VectorIndex(int dimension);

  int dimension() const noexcept { return dimension_; }
  std::size_t size() const noexcept { return ids_.size(); }
  bool empty() const noexcept { return ids_.empty(); }

  /// Throws DuplicateDocId or DimensionMismatch. When the index is already
  /// partitioned, the entry joins the list of its L2-nearest centroid.
  void add(std::string doc_id, const Eigen::Ref<const Eigen::VectorXf>& vector);

  /// Partitions the entries with k-means (k-means++ seeding from `seed`,
  /// at most 25 Lloyd iterations, 1e-6 centroid-shift tolerance). Replaces
  /// any previous partition. Throws TooFewVectors when size() < nlist.
  void train_ivf(int nlist, std::uint64_t seed);

  bool contains(std::string_view doc_id) const;
  std::optional<std::size_t> position(std::string_view doc_id) const;
  const std::string& id_at(std::size_t position) const { return ids_[position]; }
  const std::vector<std::string>& ids() const noexcept { return ids_; }
  Eigen::Map<const Eigen::VectorXf> vector_at(std::size_t position) const;
  Eigen::Map<const RowMatrix<float>> vectors() const;

  bool is_trained() const noexcept { return ivf_.has_value(); }
  const std::optional<IvfState>& ivf() const noexcept { return ivf_; }

  /// Rebuilds an index from persisted parts; validates every invariant.
  static VectorIndex from_parts(int dimension, std::vector<std::string> ids, std::vector<float> data,
                                std::optional<IvfState> ivf);

 private:
  int dimension_;
  std::vector<std::string> ids_;
  std::vector<float> data_;  // row-major, size() x dimension
  std::unordered_map<std::string, std::uint32_t> lookup_;
  std::optional<IvfState> ivf_;
};

/// Exact top-k by inner product over every entry; returns min(k, size) hits.
/// Throws EmptyIndex, BadK, DimensionMismatch.
std::vector<SearchHit> search_exact(const VectorIndex& index,
                                    const Eigen::Ref<const Eigen::VectorXf>& query, int k);

/// Scans the nprobe lists whose centroids have the largest inner product
/// with the query and ranks their entries like search_exact.
/// Throws NotTrained, BadNprobe, BadK, DimensionMismatch.
std::vector<SearchHit> search_ivf(const VectorIndex& index,
                                  const Eigen::Ref<const Eigen::VectorXf>& query, int k, int nprobe);

// Binary format ("PVIX", version 1), little-endian:
//   magic[4] u16 version u32 dimension u64 count u8 flags(bit0 = IVF)
//   count x (u32 id_len, id bytes, dimension x f32)
//   [IVF: u32 nlist, nlist x dimension f32 centroids, count x u32 list]
//   u32 CRC32 of all preceding bytes
std::string serialize_index(const VectorIndex& index);
/// Throws CorruptFile on any magic/version/length/checksum violation.
VectorIndex deserialize_index(std::string_view bytes);

void save_index(const VectorIndex& index, const std::filesystem::path& path);
VectorIndex load_index(const std::filesystem::path& path);

}  // namespace patentrag
