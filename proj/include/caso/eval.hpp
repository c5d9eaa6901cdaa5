#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "caso/graph.hpp"
#include "caso/model.hpp"

namespace caso {

struct SplitResult {
  MembershipNetwork train;
  MembershipNetwork validation;
  MembershipNetwork test;
};

/// Independent per-membership assignment: train with probability
/// train_frac (1 - valid_frac), validation with train_frac valid_frac,
/// test otherwise. Requires 0 < train_frac <= 1 and 0 <= valid_frac < 1.
SplitResult split_memberships(const MembershipNetwork& memberships, double train_frac, double valid_frac,
                              std::uint64_t seed);

/// The split used by train and evaluate: cfg's fractions, seeded from cfg.seed.
SplitResult split_for_config(const MembershipNetwork& memberships, const TrainingConfig& cfg);

/// Every community outside `known` (sorted), by descending score; ties go to
/// the lower community index.
std::vector<Index> rank_candidates(const Vector& scores, std::span<const Index> known);

/// First k entries of rank_candidates, without sorting the rest.
std::vector<Index> top_k_candidates(const Vector& scores, std::span<const Index> known, Index k);

/// |top-k & test| / |test|. `test` must be sorted and nonempty.
double recall_at_k(std::span<const Index> ranked, std::span<const Index> test, Index k);

/// Binary-relevance NDCG with IDCG over min(k, |test|) positions.
double ndcg_at_k(std::span<const Index> ranked, std::span<const Index> test, Index k);

struct RankingMetrics {
  std::map<Index, double> recall_at;
  std::map<Index, double> ndcg_at;
  Index n_evaluated_users = 0;
};

/// Averages over users with a nonempty test set. Candidates exclude `known`.
/// Throws std::runtime_error("no evaluable users") when there are none.
RankingMetrics evaluate_embeddings(const EmbeddingMatrix& users, const EmbeddingMatrix& communities,
                                   const MembershipNetwork& known, const MembershipNetwork& test,
                                   std::span<const Index> ks);

/// Runs the encoder pipeline for `state` and scores the split's test set,
/// treating train and validation memberships as known.
RankingMetrics evaluate(const ModelState& state, const SocialGraph& graph, const SplitResult& split,
                        const TrainingConfig& cfg, std::span<const Index> ks);

/// Partitions memberships into `folds` disjoint groups of near-equal size.
std::vector<std::vector<IndexPair>> fold_partition(const MembershipNetwork& memberships, Index folds,
                                                   std::uint64_t seed);

struct CrossValidationResult {
  std::vector<RankingMetrics> folds;
  RankingMetrics mean;
  RankingMetrics stddev;  // sample standard deviation across folds
};

/// Each fold is tested once; the remaining memberships are split into
/// train/validation with cfg.valid_frac.
CrossValidationResult cross_validate(const SocialGraph& graph, const MembershipNetwork& memberships,
                                     const TrainingConfig& cfg, Index folds, std::span<const Index> ks);

/// Mean and sample standard deviation of a metric list.
void summarize(const std::vector<RankingMetrics>& runs, RankingMetrics& mean, RankingMetrics& stddev);

}  // namespace caso
