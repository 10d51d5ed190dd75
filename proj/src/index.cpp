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

#include "patentrag/index.hpp"

#include <algorithm>
#include <numeric>

#include "patentrag/error.hpp"

namespace patentrag {
namespace {

void check_query(const VectorIndex& index, const Eigen::Ref<const Eigen::VectorXf>& query, int k) {
  if (k < 1) throw Error(ErrorCode::BadK, "k must be >= 1, got " + std::to_string(k));
  if (query.size() != index.dimension())
    throw Error(ErrorCode::DimensionMismatch, "query has " + std::to_string(query.size()) +
                                                  " components, index expects " +
                                                  std::to_string(index.dimension()));
}

// Top-k of the given candidate positions under ranks_before().
std::vector<SearchHit> top_k(const VectorIndex& index, const Eigen::Ref<const Eigen::VectorXf>& query,
                             std::vector<std::uint32_t> candidates, int k) {
  std::vector<float> scores(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i)
    scores[i] = inner_product(index.vector_at(candidates[i]), query);

  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t keep = std::min(order.size(), static_cast<std::size_t>(k));
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      return ranks_before(scores[a], index.id_at(candidates[a]), scores[b],
                                          index.id_at(candidates[b]));
                    });
  std::vector<SearchHit> hits;
  hits.reserve(keep);
  for (std::size_t r = 0; r < keep; ++r) {
    hits.push_back({index.id_at(candidates[order[r]]), scores[order[r]], static_cast<int>(r + 1)});
  }
  return hits;
}

}  // namespace

VectorIndex::VectorIndex(int dimension) : dimension_(dimension) {
  if (dimension < 1) throw Error(ErrorCode::InvalidArgument, "index dimension must be positive");
}

void VectorIndex::add(std::string doc_id, const Eigen::Ref<const Eigen::VectorXf>& vector) {
  if (vector.size() != dimension_)
    throw Error(ErrorCode::DimensionMismatch, "vector for '" + doc_id + "' has " +
                                                  std::to_string(vector.size()) +
                                                  " components, index expects " +
                                                  std::to_string(dimension_));
  if (lookup_.count(doc_id)) throw Error(ErrorCode::DuplicateDocId, doc_id);

  const auto position = static_cast<std::uint32_t>(ids_.size());
  data_.insert(data_.end(), vector.data(), vector.data() + dimension_);
  lookup_.emplace(doc_id, position);
  ids_.push_back(std::move(doc_id));
  if (ivf_) {
    const std::uint32_t list = nearest_centroid(ivf_->centroids, vector);
    ivf_->assignments.push_back(list);
    ivf_->lists[list].push_back(position);
  }
}

void VectorIndex::train_ivf(int nlist, std::uint64_t seed) {
  if (nlist < 1) throw Error(ErrorCode::InvalidArgument, "nlist must be >= 1");
  if (size() < static_cast<std::size_t>(nlist))
    throw Error(ErrorCode::TooFewVectors, "cannot train " + std::to_string(nlist) +
                                              " lists on " + std::to_string(size()) + " vectors");
  KMeansOptions options;
  options.seed = seed;
  auto clustering = kmeans(vectors(), nlist, options);

  IvfState state;
  state.centroids = std::move(clustering.centroids);
  state.assignments = std::move(clustering.assignments);
  state.lists.resize(static_cast<std::size_t>(nlist));
  for (std::uint32_t i = 0; i < state.assignments.size(); ++i) state.lists[state.assignments[i]].push_back(i);
  ivf_ = std::move(state);
}

bool VectorIndex::contains(std::string_view doc_id) const { return position(doc_id).has_value(); }

std::optional<std::size_t> VectorIndex::position(std::string_view doc_id) const {
  auto it = lookup_.find(std::string(doc_id));
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

Eigen::Map<const Eigen::VectorXf> VectorIndex::vector_at(std::size_t position) const {
  return Eigen::Map<const Eigen::VectorXf>(data_.data() + position * static_cast<std::size_t>(dimension_),
                                           dimension_);
}

Eigen::Map<const RowMatrix<float>> VectorIndex::vectors() const {
  return Eigen::Map<const RowMatrix<float>>(data_.data(), static_cast<Eigen::Index>(size()), dimension_);
}

VectorIndex VectorIndex::from_parts(int dimension, std::vector<std::string> ids, std::vector<float> data,
                                    std::optional<IvfState> ivf) {
  if (data.size() != ids.size() * static_cast<std::size_t>(dimension))
    throw Error(ErrorCode::CorruptFile, "vector payload does not match entry count");
  VectorIndex index(dimension);
  index.ids_ = std::move(ids);
  index.data_ = std::move(data);
  for (std::uint32_t i = 0; i < index.ids_.size(); ++i) {
    if (!index.lookup_.emplace(index.ids_[i], i).second)
      throw Error(ErrorCode::CorruptFile, "duplicate doc id '" + index.ids_[i] + "'");
  }
  if (ivf) {
    if (ivf->centroids.cols() != dimension || ivf->assignments.size() != index.ids_.size())
      throw Error(ErrorCode::CorruptFile, "inverted-file block does not match entries");
    ivf->lists.assign(static_cast<std::size_t>(ivf->nlist()), {});
    for (std::uint32_t i = 0; i < ivf->assignments.size(); ++i) {
      if (ivf->assignments[i] >= ivf->lists.size())
        throw Error(ErrorCode::CorruptFile, "list assignment out of range");
      ivf->lists[ivf->assignments[i]].push_back(i);
    }
    index.ivf_ = std::move(ivf);
  }
  return index;
}

std::vector<SearchHit> search_exact(const VectorIndex& index,
                                    const Eigen::Ref<const Eigen::VectorXf>& query, int k) {
  check_query(index, query, k);
  if (index.empty()) throw Error(ErrorCode::EmptyIndex, "index has no entries");
  std::vector<std::uint32_t> all(index.size());
  std::iota(all.begin(), all.end(), 0u);
  return top_k(index, query, std::move(all), k);
}

std::vector<SearchHit> search_ivf(const VectorIndex& index,
                                  const Eigen::Ref<const Eigen::VectorXf>& query, int k, int nprobe) {
  if (!index.is_trained()) throw Error(ErrorCode::NotTrained, "index has no inverted-file partition");
  const IvfState& ivf = *index.ivf();
  if (nprobe < 1 || nprobe > ivf.nlist())
    throw Error(ErrorCode::BadNprobe, "nprobe must be in [1, " + std::to_string(ivf.nlist()) +
                                          "], got " + std::to_string(nprobe));
  check_query(index, query, k);

  std::vector<float> list_scores(static_cast<std::size_t>(ivf.nlist()));
  for (int l = 0; l < ivf.nlist(); ++l) list_scores[l] = inner_product(ivf.centroids.row(l), query);
  std::vector<int> lists(static_cast<std::size_t>(ivf.nlist()));
  std::iota(lists.begin(), lists.end(), 0);
  std::partial_sort(lists.begin(), lists.begin() + nprobe, lists.end(), [&](int a, int b) {
    if (list_scores[a] != list_scores[b]) return list_scores[a] > list_scores[b];
    return a < b;
  });

  std::vector<std::uint32_t> candidates;
  for (int p = 0; p < nprobe; ++p) {
    const auto& members = ivf.lists[lists[p]];
    candidates.insert(candidates.end(), members.begin(), members.end());
  }
  return top_k(index, query, std::move(candidates), k);
}

}  // namespace patentrag
