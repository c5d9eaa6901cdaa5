#include "caso/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace caso {

SplitResult split_memberships(const MembershipNetwork& memberships, double train_frac, double valid_frac,
                              std::uint64_t seed) {
  if (!(train_frac > 0.0 && train_frac <= 1.0)) throw std::invalid_argument("train_frac must lie in (0, 1]");
  if (!(valid_frac >= 0.0 && valid_frac < 1.0)) throw std::invalid_argument("valid_frac must lie in [0, 1)");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double train_cut = train_frac * (1.0 - valid_frac);
  std::vector<IndexPair> train;
  std::vector<IndexPair> valid;
  std::vector<IndexPair> test;
  for (const auto& pair : memberships.pairs()) {
    const double draw = unit(rng);
    if (draw < train_cut) {
      train.push_back(pair);
    } else if (draw < train_frac) {
      valid.push_back(pair);
    } else {
      test.push_back(pair);
    }
  }
  const Index n = memberships.n_users();
  const Index m = memberships.n_communities();
  return {MembershipNetwork::from_pairs(n, m, train), MembershipNetwork::from_pairs(n, m, valid),
          MembershipNetwork::from_pairs(n, m, test)};
}

SplitResult split_for_config(const MembershipNetwork& memberships, const TrainingConfig& cfg) {
  return split_memberships(memberships, cfg.train_frac, cfg.valid_frac, mix_seed(cfg.seed, 7));
}

namespace {

std::vector<Index> candidates(const Vector& scores, std::span<const Index> known) {
  std::vector<Index> out;
  out.reserve(static_cast<std::size_t>(scores.size()));
  for (Index c = 0; c < scores.size(); ++c) {
    if (!std::binary_search(known.begin(), known.end(), c)) out.push_back(c);
  }
  return out;
}

auto score_order(const Vector& scores) {
  return [&scores](Index a, Index b) { return scores[a] > scores[b] || (scores[a] == scores[b] && a < b); };
}

}  // namespace

std::vector<Index> rank_candidates(const Vector& scores, std::span<const Index> known) {
  std::vector<Index> out = candidates(scores, known);
  std::sort(out.begin(), out.end(), score_order(scores));
  return out;
}

std::vector<Index> top_k_candidates(const Vector& scores, std::span<const Index> known, Index k) {
  std::vector<Index> out = candidates(scores, known);
  const auto keep = static_cast<std::size_t>(std::min<Index>(k, static_cast<Index>(out.size())));
  std::partial_sort(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(keep), out.end(), score_order(scores));
  out.resize(keep);
  return out;
}

double recall_at_k(std::span<const Index> ranked, std::span<const Index> test, Index k) {
  if (test.empty()) throw std::invalid_argument("recall: empty test set");
  const auto limit = std::min<std::size_t>(static_cast<std::size_t>(k), ranked.size());
  Index hits = 0;
  for (std::size_t r = 0; r < limit; ++r) hits += std::binary_search(test.begin(), test.end(), ranked[r]) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(test.size());
}

double ndcg_at_k(std::span<const Index> ranked, std::span<const Index> test, Index k) {
  if (test.empty()) throw std::invalid_argument("ndcg: empty test set");
  const auto limit = std::min<std::size_t>(static_cast<std::size_t>(k), ranked.size());
  double dcg = 0.0;
  for (std::size_t r = 0; r < limit; ++r) {
    if (std::binary_search(test.begin(), test.end(), ranked[r])) dcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
  }
  double ideal = 0.0;
  const auto ideal_len = std::min<std::size_t>(static_cast<std::size_t>(k), test.size());
  for (std::size_t r = 0; r < ideal_len; ++r) ideal += 1.0 / std::log2(static_cast<double>(r) + 2.0);
  return dcg / ideal;
}

RankingMetrics evaluate_embeddings(const EmbeddingMatrix& users, const EmbeddingMatrix& communities,
                                   const MembershipNetwork& known, const MembershipNetwork& test,
                                   std::span<const Index> ks) {
  if (ks.empty()) throw std::invalid_argument("evaluate: no cutoffs given");
  if (users.rows() != test.n_users() || communities.rows() != test.n_communities()) {
    throw std::invalid_argument("evaluate: embedding shapes do not match the split");
  }
  const Index max_k = *std::max_element(ks.begin(), ks.end());
  RankingMetrics metrics;
  for (Index k : ks) {
    if (k < 1) throw std::invalid_argument("evaluate: cutoffs must be positive");
    metrics.recall_at[k] = 0.0;
    metrics.ndcg_at[k] = 0.0;
  }
  for (Index u = 0; u < test.n_users(); ++u) {
    const auto held = test.communities_of(u);
    if (held.empty()) continue;
    const auto top = top_k_candidates(predict_scores(users, communities, u), known.communities_of(u), max_k);
    for (Index k : ks) {
      metrics.recall_at[k] += recall_at_k(top, held, k);
      metrics.ndcg_at[k] += ndcg_at_k(top, held, k);
    }
    ++metrics.n_evaluated_users;
  }
  if (metrics.n_evaluated_users == 0) throw std::runtime_error("no evaluable users");
  const auto n = static_cast<double>(metrics.n_evaluated_users);
  for (auto& [k, v] : metrics.recall_at) v /= n;
  for (auto& [k, v] : metrics.ndcg_at) v /= n;
  return metrics;
}

RankingMetrics evaluate(const ModelState& state, const SocialGraph& graph, const SplitResult& split,
                        const TrainingConfig& cfg, std::span<const Index> ks) {
  const EmbeddingMatrix users = user_embeddings(state, graph, split.train, cfg);
  return evaluate_embeddings(users, state.community_emb, merge(split.train, split.validation), split.test, ks);
}

std::vector<std::vector<IndexPair>> fold_partition(const MembershipNetwork& memberships, Index folds,
                                                   std::uint64_t seed) {
  if (folds < 2) throw std::invalid_argument("cross-validation needs at least two folds");
  std::vector<IndexPair> pairs = memberships.pairs();
  std::mt19937_64 rng(seed);
  std::shuffle(pairs.begin(), pairs.end(), rng);
  std::vector<std::vector<IndexPair>> out(static_cast<std::size_t>(folds));
  for (std::size_t i = 0; i < pairs.size(); ++i) out[i % out.size()].push_back(pairs[i]);
  return out;
}

void summarize(const std::vector<RankingMetrics>& runs, RankingMetrics& mean, RankingMetrics& stddev) {
  mean = {};
  stddev = {};
  if (runs.empty()) return;
  const auto n = static_cast<double>(runs.size());
  auto reduce = [&](auto member) {
    std::map<Index, double> avg;
    std::map<Index, double> sd;
    for (const auto& run : runs) {
      for (const auto& [k, v] : run.*member) avg[k] += v / n;
    }
    for (const auto& run : runs) {
      for (const auto& [k, v] : run.*member) sd[k] += (v - avg[k]) * (v - avg[k]);
    }
    for (auto& [k, v] : sd) v = runs.size() > 1 ? std::sqrt(v / (n - 1.0)) : 0.0;
    return std::pair{avg, sd};
  };
  std::tie(mean.recall_at, stddev.recall_at) = reduce(&RankingMetrics::recall_at);
  std::tie(mean.ndcg_at, stddev.ndcg_at) = reduce(&RankingMetrics::ndcg_at);
  Index users = 0;
  for (const auto& run : runs) users += run.n_evaluated_users;
  mean.n_evaluated_users = users / static_cast<Index>(runs.size());
}

CrossValidationResult cross_validate(const SocialGraph& graph, const MembershipNetwork& memberships,
                                     const TrainingConfig& cfg, Index folds, std::span<const Index> ks) {
  const auto groups = fold_partition(memberships, folds, mix_seed(cfg.seed, 3));
  const Index n = memberships.n_users();
  const Index m = memberships.n_communities();
  CrossValidationResult result;
  for (std::size_t f = 0; f < groups.size(); ++f) {
    std::mt19937_64 rng(mix_seed(cfg.seed, 100 + f));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<IndexPair> train;
    std::vector<IndexPair> valid;
    for (std::size_t g = 0; g < groups.size(); ++g) {
      if (g == f) continue;
      for (const auto& pair : groups[g]) (unit(rng) < cfg.valid_frac ? valid : train).push_back(pair);
    }
    SplitResult split{MembershipNetwork::from_pairs(n, m, train), MembershipNetwork::from_pairs(n, m, valid),
                      MembershipNetwork::from_pairs(n, m, groups[f])};
    TrainingConfig fold_cfg = cfg;
    fold_cfg.seed = mix_seed(cfg.seed, 200 + f);
    const FitResult fitted = fit(graph, split.train, split.validation, fold_cfg);
    result.folds.push_back(evaluate(fitted.state, graph, split, fold_cfg, ks));
  }
  summarize(result.folds, result.mean, result.stddev);
  return result;
}

}  // namespace caso
