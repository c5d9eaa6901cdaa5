#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>
#include <vector>

#include "caso/eval.hpp"
#include "caso/io.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace caso;
using namespace caso::testing;

TEST_CASE("split is a disjoint, reproducible partition with the requested proportions") {
  const MembershipNetwork b = random_memberships(400, 20, 0.3, 1);
  const SplitResult a = split_memberships(b, 0.8, 0.125, 7);
  const SplitResult again = split_memberships(b, 0.8, 0.125, 7);
  CHECK(a.train.pairs() == again.train.pairs());
  CHECK(a.train.n_memberships() + a.validation.n_memberships() + a.test.n_memberships() == b.n_memberships());
  for (const auto& [u, c] : b.pairs()) {
    const int owners = int(a.train.contains(u, c)) + int(a.validation.contains(u, c)) + int(a.test.contains(u, c));
    CHECK(owners == 1);
  }
  const auto total = static_cast<double>(b.n_memberships());
  CHECK(static_cast<double>(a.train.n_memberships()) / total == doctest::Approx(0.7).epsilon(0.05));
  CHECK(static_cast<double>(a.test.n_memberships()) / total == doctest::Approx(0.2).epsilon(0.1));
  CHECK_THROWS_AS(split_memberships(b, 0.0, 0.1, 1), std::invalid_argument);
  CHECK_THROWS_AS(split_memberships(b, 0.8, 1.0, 1), std::invalid_argument);
}

TEST_CASE("split_for_config follows the config fractions and seed") {
  const MembershipNetwork b = random_memberships(200, 10, 0.3, 2);
  TrainingConfig cfg;
  cfg.seed = 9;
  cfg.train_frac = 0.7;
  cfg.valid_frac = 0.2;
  const SplitResult a = split_for_config(b, cfg);
  const SplitResult manual = split_memberships(b, 0.7, 0.2, mix_seed(9, 7));
  CHECK(a.train.pairs() == manual.train.pairs());
  CHECK(a.validation.pairs() == manual.validation.pairs());
  CHECK(a.test.pairs() == manual.test.pairs());
  cfg.seed = 10;
  CHECK(split_for_config(b, cfg).test.pairs() != a.test.pairs());
}

TEST_CASE("ranking excludes known communities and breaks ties by index") {
  Vector scores(5);
  scores << 0.5, 0.9, 0.5, 0.1, 0.9;
  const std::vector<Index> known{1};
  CHECK(rank_candidates(scores, known) == std::vector<Index>{4, 0, 2, 3});
  CHECK(top_k_candidates(scores, known, 2) == std::vector<Index>{4, 0});
  CHECK(top_k_candidates(scores, known, 10).size() == 4);
}

TEST_CASE("top-k is a prefix of the full ranking") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Vector scores = random_matrix(30, 1, seed).col(0);
    const std::vector<Index> known{2, 5, 11};
    const auto full = rank_candidates(scores, known);
    const auto top = top_k_candidates(scores, known, 7);
    CHECK(std::vector<Index>(full.begin(), full.begin() + 7) == top);
  }
}

TEST_CASE("recall and NDCG follow their definitions") {
  const std::vector<Index> ranked{3, 1, 2, 0};
  const std::vector<Index> one{1};
  CHECK(recall_at_k(ranked, one, 1) == 0.0);
  CHECK(recall_at_k(ranked, one, 2) == 1.0);
  CHECK(ndcg_at_k(ranked, one, 2) == doctest::Approx(1.0 / std::log2(3.0)));
  const std::vector<Index> two{0, 3};
  CHECK(recall_at_k(ranked, two, 3) == 0.5);
  const double dcg = 1.0 + 1.0 / std::log2(5.0);
  const double idcg = 1.0 + 1.0 / std::log2(3.0);
  CHECK(ndcg_at_k(ranked, two, 4) == doctest::Approx(dcg / idcg));
  CHECK(ndcg_at_k(ranked, two, 1) == 1.0);
  const std::vector<Index> perfect{1, 3};
  CHECK(ndcg_at_k(ranked, perfect, 5) == doctest::Approx(1.0));
  CHECK_THROWS_AS(recall_at_k(ranked, std::vector<Index>{}, 1), std::invalid_argument);
}

TEST_CASE("evaluate_embeddings averages over users with held-out memberships") {
  const Matrix users = random_matrix(6, 3, 1);
  const Matrix communities = random_matrix(5, 3, 2);
  const auto known = MembershipNetwork::from_pairs(6, 5, std::vector<IndexPair>{{0, 0}, {1, 1}, {2, 2}});
  const auto test = MembershipNetwork::from_pairs(6, 5, std::vector<IndexPair>{{0, 1}, {0, 3}, {2, 4}, {5, 0}});
  const std::vector<Index> ks{1, 3};
  const RankingMetrics m = evaluate_embeddings(users, communities, known, test, ks);
  CHECK(m.n_evaluated_users == 3);
  for (Index k : ks) {
    double recall = 0.0;
    double ndcg = 0.0;
    for (Index u : {0, 2, 5}) {
      const auto ranked = rank_candidates(communities * users.row(u).transpose(), known.communities_of(u));
      recall += recall_at_k(ranked, test.communities_of(u), k);
      ndcg += ndcg_at_k(ranked, test.communities_of(u), k);
    }
    CHECK(m.recall_at.at(k) == doctest::Approx(recall / 3.0));
    CHECK(m.ndcg_at.at(k) == doctest::Approx(ndcg / 3.0));
  }
  const auto empty = MembershipNetwork::from_pairs(6, 5, std::vector<IndexPair>{});
  CHECK_THROWS_WITH_AS(evaluate_embeddings(users, communities, known, empty, ks), "no evaluable users",
                       std::runtime_error);
}

TEST_CASE("fold partition covers every membership once with balanced sizes") {
  const MembershipNetwork b = random_memberships(50, 8, 0.2, 3);
  const auto folds = fold_partition(b, 5, 11);
  CHECK(folds.size() == 5);
  std::set<IndexPair> seen;
  std::size_t smallest = folds.front().size();
  std::size_t largest = 0;
  for (const auto& fold : folds) {
    smallest = std::min(smallest, fold.size());
    largest = std::max(largest, fold.size());
    for (const auto& p : fold) CHECK(seen.insert(p).second);
  }
  CHECK(seen.size() == static_cast<std::size_t>(b.n_memberships()));
  CHECK(largest - smallest <= 1);
  CHECK_THROWS_AS(fold_partition(b, 1, 0), std::invalid_argument);
}

TEST_CASE("summarize reports mean and sample standard deviation") {
  std::vector<RankingMetrics> runs(3);
  const double values[] = {0.2, 0.4, 0.9};
  for (int r = 0; r < 3; ++r) {
    runs[r].recall_at[1] = values[r];
    runs[r].ndcg_at[1] = 1.0;
    runs[r].n_evaluated_users = 10;
  }
  RankingMetrics mean;
  RankingMetrics sd;
  summarize(runs, mean, sd);
  CHECK(mean.recall_at[1] == doctest::Approx(0.5));
  CHECK(sd.recall_at[1] == doctest::Approx(std::sqrt((0.09 + 0.01 + 0.16) / 2.0)));
  CHECK(sd.ndcg_at[1] == doctest::Approx(0.0));
}

TEST_CASE("cross-validation yields one result per fold") {
  SynthSpec spec;
  spec.n_users = 60;
  spec.n_blocks = 3;
  spec.memberships_per_user = 2;
  const DatasetBundle data = generate_planted_partition(spec);
  TrainingConfig cfg;
  cfg.dim = 8;
  cfg.max_epochs = 3;
  const std::vector<Index> ks{1, 3};
  const CrossValidationResult r = cross_validate(data.graph, data.memberships, cfg, 3, ks);
  CHECK(r.folds.size() == 3);
  double mean = 0.0;
  for (const auto& f : r.folds) mean += f.recall_at.at(3) / 3.0;
  CHECK(r.mean.recall_at.at(3) == doctest::Approx(mean));
}

TEST_CASE("split edge cases") {
  const MembershipNetwork b = random_memberships(100, 100, 1.0, 2);
  CHECK(split_memberships(b, 1.0, 0.125, 3).test.n_memberships() == 0);
  const SplitResult s = split_memberships(b, 0.8, 0.0, 4);
  const double frac = static_cast<double>(s.train.n_memberships()) / static_cast<double>(b.n_memberships());
  CHECK(std::abs(frac - 0.8) <= 0.02);
  CHECK(s.validation.n_memberships() == 0);
}

TEST_CASE("ranking examples") {
  const Vector one_hot = Vector::Unit(4, 2);
  CHECK(rank_candidates(one_hot, {}).front() == 2);
  const Vector flat = Vector::Constant(4, 0.3);
  CHECK(rank_candidates(flat, {}) == std::vector<Index>{0, 1, 2, 3});
  const Vector scores = random_matrix(12, 1, 5).col(0);
  std::vector<Index> expected{0, 1, 2, 4, 5, 6, 7, 8, 9, 10, 11};
  std::stable_sort(expected.begin(), expected.end(), [&](Index a, Index b) { return scores[a] > scores[b]; });
  const std::vector<Index> known{3};
  CHECK(rank_candidates(scores, known) == expected);
}

TEST_CASE("metric examples") {
  const std::vector<Index> ranked{4, 2, 0, 1, 3};
  CHECK(recall_at_k(ranked, std::vector<Index>{0, 2}, 3) == 1.0);
  CHECK(recall_at_k(ranked, std::vector<Index>{1, 2}, 5) == 1.0);
  const std::vector<Index> late{5, 6, 1, 7, 8};
  CHECK(recall_at_k(late, std::vector<Index>{1, 9}, 5) == 0.5);
  CHECK(ndcg_at_k(ranked, std::vector<Index>{4}, 5) == 1.0);
  CHECK(ndcg_at_k(ranked, std::vector<Index>{2}, 5) == doctest::Approx(0.63093).epsilon(1e-5));
  const double expected = (1.0 / std::log2(3.0) + 1.0 / std::log2(5.0)) / (1.0 + 1.0 / std::log2(3.0));
  CHECK(ndcg_at_k(ranked, std::vector<Index>{1, 2}, 5) == doctest::Approx(expected));
}

TEST_CASE("metrics are bounded and monotone in K, and invariant to relabeling") {
  std::mt19937_64 rng(8);
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const Vector scores = random_matrix(15, 1, seed).col(0);
    const std::vector<Index> test{1, 4, 9};
    const auto ranked = rank_candidates(scores, {});
    double previous = 0.0;
    for (Index k = 1; k <= 15; ++k) {
      const double r = recall_at_k(ranked, test, k);
      const double n = ndcg_at_k(ranked, test, k);
      CHECK(r >= previous);
      CHECK(n >= 0.0);
      CHECK(n <= 1.0 + 1e-12);
      previous = r;
    }
    std::vector<Index> perm(15);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Vector permuted(15);
    for (Index c = 0; c < 15; ++c) permuted[perm[c]] = scores[c];
    std::vector<Index> moved;
    for (Index c : test) moved.push_back(perm[c]);
    std::sort(moved.begin(), moved.end());
    const auto reranked = rank_candidates(permuted, {});
    CHECK(recall_at_k(reranked, moved, 4) == recall_at_k(ranked, test, 4));
    CHECK(ndcg_at_k(reranked, moved, 4) == doctest::Approx(ndcg_at_k(ranked, test, 4)));
  }
}

TEST_CASE("a perfect model scores 1.0 everywhere") {
  const auto test = MembershipNetwork::from_pairs(3, 4, std::vector<IndexPair>{{0, 1}, {1, 3}, {2, 0}, {2, 2}});
  const auto known = MembershipNetwork::from_pairs(3, 4, std::vector<IndexPair>{});
  const Matrix users = dense_incidence(test);
  const Matrix communities = Matrix::Identity(4, 4);
  const std::vector<Index> ks{2, 3};
  const RankingMetrics m = evaluate_embeddings(users, communities, known, test, ks);
  for (Index k : ks) {
    CHECK(m.recall_at.at(k) == 1.0);
    CHECK(m.ndcg_at.at(k) == doctest::Approx(1.0));
  }
}

TEST_CASE("two folds give disjoint test sets covering everything") {
  const MembershipNetwork b = random_memberships(20, 4, 0.3, 6);
  const auto folds = fold_partition(b, 2, 3);
  CHECK(folds[0].size() + folds[1].size() == static_cast<std::size_t>(b.n_memberships()));
  std::set<IndexPair> first(folds[0].begin(), folds[0].end());
  for (const auto& p : folds[1]) CHECK(first.count(p) == 0);
  CHECK(fold_partition(b, 2, 3) == folds);
}
