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

#include <map>
#include <set>

#include "doctest.h"
#include "patentrag/error.hpp"
#include "patentrag/index.hpp"
#include "support/test_support.hpp"

using namespace patentrag;
namespace t = patentrag::testing;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::InvalidArgument;
}

VectorIndex index_of(const t::Matrix& m, const std::vector<std::string>& ids) {
  VectorIndex index(static_cast<int>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) index.add(ids[r], m.row(r).transpose());
  return index;
}

std::vector<std::string> ids_of(const std::vector<SearchHit>& hits) {
  std::vector<std::string> out;
  for (const auto& h : hits) out.push_back(h.doc_id);
  return out;
}

Eigen::VectorXf basis(int dim, int axis) {
  Eigen::VectorXf v = Eigen::VectorXf::Zero(dim);
  v[axis] = 1.0f;
  return v;
}

double mean_recall(const VectorIndex& index, const t::Matrix& queries, int k, int nprobe) {
  double total = 0.0;
  for (Eigen::Index q = 0; q < queries.rows(); ++q) {
    const Eigen::VectorXf query = queries.row(q).transpose();
    const auto exact = ids_of(search_exact(index, query, k));
    const auto approx = ids_of(search_ivf(index, query, k, nprobe));
    const std::set<std::string> truth(exact.begin(), exact.end());
    int found = 0;
    for (const auto& id : approx) found += truth.count(id);
    total += double(found) / double(exact.size());
  }
  return total / double(queries.rows());
}

}  // namespace

TEST_SUITE("index.add") {
  TEST_CASE("add grows the index and keeps vectors") {
    VectorIndex index(3);
    CHECK(index.empty());
    index.add("a", Eigen::Vector3f(1, 2, 3));
    CHECK(index.size() == 1);
    CHECK(index.contains("a"));
    CHECK(index.vector_at(*index.position("a")) == Eigen::Vector3f(1, 2, 3));
  }

  TEST_CASE("duplicate id and wrong length") {
    VectorIndex index(3);
    index.add("a", Eigen::Vector3f(1, 2, 3));
    CHECK(code_of([&] { index.add("a", Eigen::Vector3f(0, 0, 0)); }) == ErrorCode::DuplicateDocId);
    CHECK(code_of([&] { index.add("b", Eigen::Vector2f(0, 0)); }) == ErrorCode::DimensionMismatch);
    CHECK(index.size() == 1);
  }

  TEST_CASE("adding after training joins the L2-nearest list") {
    const auto blobs = t::gaussian_blobs(200, 4, 8, 10.0f, 0.1f, 3);
    auto index = index_of(blobs.points, t::numbered_ids(200));
    index.train_ivf(4, 1);
    const Eigen::VectorXf near_blob2 = blobs.centers.row(2).transpose();
    index.add("late", near_blob2);
    const auto& ivf = *index.ivf();
    const auto list = ivf.assignments.back();
    CHECK(list == ivf.assignments[2]);  // entry 2 belongs to blob 2
    CHECK(ivf.lists[list].back() == index.size() - 1);
  }
}

TEST_SUITE("index.search_exact") {
  TEST_CASE("single unit vector") {
    VectorIndex index(4);
    index.add("a", basis(4, 0));
    const auto hits = search_exact(index, basis(4, 0), 5);
    REQUIRE(hits.size() == 1);
    CHECK(hits[0] == SearchHit{"a", 1.0f, 1});
    CHECK(search_exact(index, basis(4, 1), 5)[0].score == 0.0f);
  }

  TEST_CASE("errors") {
    VectorIndex index(4);
    CHECK(code_of([&] { search_exact(index, basis(4, 0), 1); }) == ErrorCode::EmptyIndex);
    index.add("a", basis(4, 0));
    CHECK(code_of([&] { search_exact(index, basis(4, 0), 0); }) == ErrorCode::BadK);
    CHECK(code_of([&] { search_exact(index, Eigen::VectorXf::Zero(3), 1); }) == ErrorCode::DimensionMismatch);
  }

  TEST_CASE("ties are ordered by ascending doc id") {
    VectorIndex index(2);
    for (const char* id : {"d", "b", "a", "c"}) index.add(id, Eigen::Vector2f(1, 0));
    index.add("z", Eigen::Vector2f(2, 0));
    const auto hits = search_exact(index, Eigen::Vector2f(1, 0), 4);
    CHECK(ids_of(hits) == std::vector<std::string>{"z", "a", "b", "c"});
    for (std::size_t i = 0; i < hits.size(); ++i) CHECK(hits[i].rank == int(i + 1));
  }

  TEST_CASE("matches the brute-force oracle, including duplicate-score ties") {
    auto vectors = t::random_matrix(1000, 32, 21);
    // Plant exact duplicates so tie handling is exercised.
    for (int r = 0; r < 50; ++r) vectors.row(900 + r) = vectors.row(r);
    const auto ids = t::numbered_ids(1000);
    const auto index = index_of(vectors, ids);
    const auto queries = t::random_matrix(60, 32, 22);
    for (Eigen::Index q = 0; q < queries.rows(); ++q) {
      const Eigen::VectorXf query = queries.row(q).transpose();
      for (int k : {1, 10, 100}) {
        const auto hits = search_exact(index, query, k);
        CHECK(ids_of(hits) == t::brute_force_top_k(vectors, ids, query, k));
        for (std::size_t i = 1; i < hits.size(); ++i) CHECK(hits[i - 1].score >= hits[i].score);
      }
    }
    // Querying with a duplicated row itself: both copies share the score.
    const Eigen::VectorXf dup = vectors.row(3).transpose();
    CHECK(ids_of(search_exact(index, dup, 2)) == std::vector<std::string>{ids[3], ids[903]});
  }

  TEST_CASE("k above size returns everything") {
    const auto vectors = t::random_matrix(3, 4, 1);
    const auto index = index_of(vectors, t::numbered_ids(3));
    CHECK(search_exact(index, basis(4, 0), 10).size() == 3);
  }
}

TEST_SUITE("index.ivf") {
  TEST_CASE("nlist = 1 holds everything and the centroid is the mean") {
    const auto vectors = t::random_matrix(100, 6, 2);
    auto index = index_of(vectors, t::numbered_ids(100));
    index.train_ivf(1, 5);
    const auto& ivf = *index.ivf();
    CHECK(ivf.lists[0].size() == 100);
    const Eigen::RowVectorXd mean = vectors.cast<double>().colwise().mean();
    for (int d = 0; d < 6; ++d) CHECK(ivf.centroids(0, d) == doctest::Approx(mean[d]).epsilon(1e-5));
  }

  TEST_CASE("nlist = size gives singleton lists") {
    const auto vectors = t::random_matrix(25, 4, 3);
    auto index = index_of(vectors, t::numbered_ids(25));
    index.train_ivf(25, 5);
    for (const auto& list : index.ivf()->lists) CHECK(list.size() == 1);
  }

  TEST_CASE("well separated blobs give pure lists") {
    const auto blobs = t::gaussian_blobs(400, 4, 16, 10.0f, 0.1f, 9);
    auto index = index_of(blobs.points, t::numbered_ids(400));
    index.train_ivf(4, 2);
    for (const auto& list : index.ivf()->lists) {
      std::set<int> labels;
      for (auto e : list) labels.insert(blobs.labels[e]);
      CHECK(labels.size() == 1);
    }
  }

  TEST_CASE("assignments partition the entries; training is deterministic") {
    const auto vectors = t::random_matrix(500, 8, 4);
    auto a = index_of(vectors, t::numbered_ids(500));
    auto b = index_of(vectors, t::numbered_ids(500));
    a.train_ivf(16, 99);
    b.train_ivf(16, 99);
    CHECK(a.ivf()->assignments == b.ivf()->assignments);
    CHECK(a.ivf()->centroids == b.ivf()->centroids);
    std::vector<int> seen(500, 0);
    for (const auto& list : a.ivf()->lists)
      for (auto e : list) ++seen[e];
    CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
  }

  TEST_CASE("exhaustive probing equals exact search") {
    const auto vectors = t::random_matrix(800, 16, 5);
    auto index = index_of(vectors, t::numbered_ids(800));
    index.train_ivf(12, 1);
    const auto queries = t::random_matrix(50, 16, 6);
    for (Eigen::Index q = 0; q < queries.rows(); ++q) {
      const Eigen::VectorXf query = queries.row(q).transpose();
      CHECK(search_ivf(index, query, 10, 12) == search_exact(index, query, 10));
    }
  }

  TEST_CASE("one probe on single-blob data equals exact search") {
    const auto blob = t::gaussian_blobs(300, 1, 8, 5.0f, 0.2f, 12);
    auto index = index_of(blob.points, t::numbered_ids(300));
    index.train_ivf(1, 1);
    const auto queries = t::random_matrix(20, 8, 13);
    for (Eigen::Index q = 0; q < queries.rows(); ++q) {
      const Eigen::VectorXf query = queries.row(q).transpose();
      CHECK(search_ivf(index, query, 10, 1) == search_exact(index, query, 10));
    }
  }

  TEST_CASE("recall is non-decreasing in nprobe") {
    const auto blobs = t::gaussian_blobs(2000, 16, 16, 3.0f, 1.0f, 14);
    auto index = index_of(blobs.points, t::numbered_ids(2000));
    index.train_ivf(16, 3);
    const auto queries = t::gaussian_blobs(50, 16, 16, 3.0f, 1.0f, 14).points;
    double previous = 0.0;
    for (int nprobe = 1; nprobe <= 16; ++nprobe) {
      const double recall = mean_recall(index, queries, 10, nprobe);
      CHECK(recall >= previous);
      previous = recall;
    }
    CHECK(previous == 1.0);
  }

  TEST_CASE("errors") {
    const auto vectors = t::random_matrix(10, 4, 1);
    auto index = index_of(vectors, t::numbered_ids(10));
    CHECK(code_of([&] { search_ivf(index, basis(4, 0), 1, 1); }) == ErrorCode::NotTrained);
    CHECK(code_of([&] { index.train_ivf(11, 1); }) == ErrorCode::TooFewVectors);
    index.train_ivf(3, 1);
    CHECK(code_of([&] { search_ivf(index, basis(4, 0), 1, 0); }) == ErrorCode::BadNprobe);
    CHECK(code_of([&] { search_ivf(index, basis(4, 0), 1, 4); }) == ErrorCode::BadNprobe);
    CHECK(code_of([&] { search_ivf(index, basis(4, 0), 0, 1); }) == ErrorCode::BadK);
  }
}

TEST_SUITE("index.persistence") {
  TEST_CASE("file layout is bit-exact") {
    VectorIndex index(2);
    index.add("a", Eigen::Vector2f(1.0f, -2.0f));
    const std::string bytes = serialize_index(index);
    // Expected bytes computed independently (struct.pack + zlib.crc32).
    const std::string expected_hex =
        "5056495801000200000001000000000000000001000000610000803f000000c00b5d8ec7";
    std::string hex;
    for (unsigned char c : bytes) {
      const char digits[] = "0123456789abcdef";
      hex.push_back(digits[c >> 4]);
      hex.push_back(digits[c & 15]);
    }
    CHECK(hex == expected_hex);
  }

  TEST_CASE("round trip preserves exact and IVF search results") {
    t::TempDir dir;
    const auto vectors = t::random_matrix(500, 16, 31);
    auto index = index_of(vectors, t::numbered_ids(500));
    index.train_ivf(8, 4);
    save_index(index, dir / "idx.pvix");
    const auto loaded = load_index(dir / "idx.pvix");
    CHECK(loaded.ids() == index.ids());
    CHECK(loaded.ivf()->assignments == index.ivf()->assignments);
    CHECK(loaded.ivf()->lists == index.ivf()->lists);
    const auto queries = t::random_matrix(100, 16, 32);
    for (Eigen::Index q = 0; q < queries.rows(); ++q) {
      const Eigen::VectorXf query = queries.row(q).transpose();
      CHECK(search_exact(loaded, query, 10) == search_exact(index, query, 10));
      for (int nprobe : {1, 3, 8}) CHECK(search_ivf(loaded, query, 10, nprobe) == search_ivf(index, query, 10, nprobe));
    }
    CHECK(serialize_index(loaded) == serialize_index(index));
  }

  TEST_CASE("empty index round trip") {
    const auto loaded = deserialize_index(serialize_index(VectorIndex(7)));
    CHECK(loaded.empty());
    CHECK(loaded.dimension() == 7);
  }

  TEST_CASE("damaged files are CorruptFile") {
    const auto vectors = t::random_matrix(20, 4, 1);
    auto index = index_of(vectors, t::numbered_ids(20));
    index.train_ivf(2, 1);
    const std::string bytes = serialize_index(index);
    for (std::size_t cut : {std::size_t(0), std::size_t(3), std::size_t(10), bytes.size() / 2, bytes.size() - 1}) {
      CAPTURE(cut);
      CHECK(code_of([&] { deserialize_index(std::string_view(bytes).substr(0, cut)); }) == ErrorCode::CorruptFile);
    }
    std::string flipped = bytes;
    flipped[40] = static_cast<char>(flipped[40] ^ 0x10);
    CHECK(code_of([&] { deserialize_index(flipped); }) == ErrorCode::CorruptFile);
    std::string magic = bytes;
    magic[0] = 'Q';
    CHECK(code_of([&] { deserialize_index(magic); }) == ErrorCode::CorruptFile);
  }

  TEST_CASE("io failures") {
    CHECK(code_of([] { load_index("/nonexistent/dir/idx.pvix"); }) == ErrorCode::IoFailure);
    CHECK(code_of([] { save_index(VectorIndex(2), "/nonexistent/dir/idx.pvix"); }) == ErrorCode::IoFailure);
  }
}
