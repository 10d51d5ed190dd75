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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "patentrag/error.hpp"
#include "patentrag/random.hpp"

// Lloyd's k-means with k-means++ seeding over the rows of a dense matrix.

namespace patentrag {

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct KMeansOptions {
  int max_iterations = 25;
  double tolerance = 1e-6;  // stop once no centroid moves farther than this
  std::uint64_t seed = 0;
};

template <typename Scalar>
struct KMeansResult {
  RowMatrix<Scalar> centroids;
  std::vector<std::uint32_t> assignments;
  int iterations = 0;
};

template <typename DerivedA, typename DerivedB>
double squared_distance(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a(i)) - static_cast<double>(b(i));
    sum += d * d;
  }
  return sum;
}

/// Row of `centroids` closest to `x` in L2; ties go to the lower row.
template <typename DerivedC, typename DerivedX>
std::uint32_t nearest_centroid(const Eigen::MatrixBase<DerivedC>& centroids,
                               const Eigen::MatrixBase<DerivedX>& x, double* distance = nullptr) {
  std::uint32_t best = 0;
  double best_distance = std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
    const double d = squared_distance(centroids.row(c), x);
    if (d < best_distance) {
      best_distance = d;
      best = static_cast<std::uint32_t>(c);
    }
  }
  if (distance) *distance = best_distance;
  return best;
}

/// Greedy k-means++ seeding: first centre uniform; for each next centre,
/// 2 + floor(ln k) candidates are drawn with probability proportional to
/// squared distance from the chosen set and the one that most reduces the
/// total squared distance is kept (first drawn wins a tie).
template <typename Derived>
RowMatrix<typename Derived::Scalar> kmeans_plus_plus(const Eigen::MatrixBase<Derived>& points,
                                                     int k, Engine& engine) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = points.rows();
  RowMatrix<Scalar> centroids(k, points.cols());
  std::vector<bool> chosen(static_cast<std::size_t>(n), false);
  const int trials = 2 + static_cast<int>(std::log(static_cast<double>(k)));

  auto first = static_cast<Eigen::Index>(uniform_index(engine, static_cast<std::uint64_t>(n)));
  centroids.row(0) = points.row(first);
  chosen[first] = true;
  std::vector<double> nearest(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) nearest[i] = squared_distance(points.row(i), points.row(first));

  std::vector<double> candidate_nearest(static_cast<std::size_t>(n));
  std::vector<double> best_nearest;
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (double d : nearest) total += d;
    Eigen::Index pick = -1;
    if (total > 0.0) {
      double best_potential = std::numeric_limits<double>::infinity();
      for (int t = 0; t < trials; ++t) {
        const double target = uniform_unit(engine) * total;
        double cumulative = 0.0;
        Eigen::Index candidate = -1;
        for (Eigen::Index i = 0; i < n; ++i) {
          if (nearest[i] <= 0.0) continue;
          cumulative += nearest[i];
          candidate = i;
          if (cumulative > target) break;
        }
        double potential = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
          candidate_nearest[i] = std::min(nearest[i], squared_distance(points.row(i), points.row(candidate)));
          potential += candidate_nearest[i];
        }
        if (potential < best_potential) {
          best_potential = potential;
          pick = candidate;
          best_nearest = candidate_nearest;
        }
      }
      nearest = best_nearest;
    } else {
      // Every point coincides with a chosen centre.
      for (Eigen::Index i = 0; i < n && pick < 0; ++i)
        if (!chosen[i]) pick = i;
    }
    centroids.row(c) = points.row(pick);
    chosen[pick] = true;
  }
  return centroids;
}

/// Runs Lloyd iterations from k-means++ seeds. An emptied cluster is
/// re-seeded with the point farthest from its own centroid (taken from a
/// cluster with more than one member). The returned assignments map each
/// row to its nearest final centroid. Deterministic for fixed inputs.
template <typename Derived>
KMeansResult<typename Derived::Scalar> kmeans(const Eigen::MatrixBase<Derived>& points, int k,
                                              const KMeansOptions& options) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = points.rows();
  if (k < 1 || n < k)
    throw Error(ErrorCode::TooFewVectors, "k-means needs at least k=" + std::to_string(k) +
                                              " points, have " + std::to_string(n));
  Engine engine(options.seed);
  KMeansResult<Scalar> result;
  result.centroids = kmeans_plus_plus(points, k, engine);
  result.assignments.assign(static_cast<std::size_t>(n), 0);

  std::vector<double> distance(static_cast<std::size_t>(n));
  std::vector<Eigen::Index> counts(static_cast<std::size_t>(k));
  Eigen::MatrixXd sums(k, points.cols());

  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    result.iterations = iter;
    std::fill(counts.begin(), counts.end(), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      result.assignments[i] = nearest_centroid(result.centroids, points.row(i), &distance[i]);
      ++counts[result.assignments[i]];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) continue;
      Eigen::Index far = -1;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (counts[result.assignments[i]] > 1 && (far < 0 || distance[i] > distance[far])) far = i;
      }
      if (far < 0) break;
      --counts[result.assignments[far]];
      result.assignments[far] = static_cast<std::uint32_t>(c);
      distance[far] = 0.0;
      counts[c] = 1;
    }

    sums.setZero();
    for (Eigen::Index i = 0; i < n; ++i)
      sums.row(result.assignments[i]) += points.row(i).template cast<double>();
    double max_shift = 0.0;
    for (int c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      const auto updated = (sums.row(c) / static_cast<double>(counts[c])).template cast<Scalar>().eval();
      max_shift = std::max(max_shift, squared_distance(updated, result.centroids.row(c)));
      result.centroids.row(c) = updated;
    }
    if (std::sqrt(max_shift) < options.tolerance) break;
  }

  for (Eigen::Index i = 0; i < n; ++i)
    result.assignments[i] = nearest_centroid(result.centroids, points.row(i));
  return result;
}

}  // namespace patentrag
