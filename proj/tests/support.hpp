#pragma once

#include <cmath>
#include <algorithm>
#include <cstdint>
#include <string>
#include <utility>
#include <random>
#include <vector>

#include "caso/graph.hpp"
#include "caso/types.hpp"

namespace caso::testing {

// Erdos-Renyi graph; one extra edge is forced when none was drawn.
inline SocialGraph random_graph(Index n, double p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(p);
  std::vector<IndexPair> edges;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      if (coin(rng)) edges.emplace_back(i, j);
    }
  }
  if (edges.empty()) edges.emplace_back(0, n - 1);
  return SocialGraph::from_edges(n, edges);
}

// Each user joins each community with probability p; every community gets
// at least two members.
inline MembershipNetwork random_memberships(Index n, Index m, double p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(p);
  std::uniform_int_distribution<Index> user(0, n - 1);
  std::vector<IndexPair> pairs;
  for (Index u = 0; u < n; ++u) {
    for (Index c = 0; c < m; ++c) {
      if (coin(rng)) pairs.emplace_back(u, c);
    }
  }
  for (Index c = 0; c < m; ++c) {
    const Index a = user(rng);
    Index b = user(rng);
    while (b == a) b = user(rng);
    pairs.emplace_back(a, c);
    pairs.emplace_back(b, c);
  }
  return MembershipNetwork::from_pairs(n, m, pairs);
}

inline Matrix random_matrix(Index rows, Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  return Matrix::NullaryExpr(rows, cols, [&] { return normal(rng); });
}

inline Matrix dense_adjacency(const SocialGraph& g) {
  Matrix a = Matrix::Zero(g.n_users(), g.n_users());
  for (Index i = 0; i < g.n_users(); ++i) {
    for (Index j : g.neighbors(i)) a(i, j) = 1.0;
  }
  return a;
}

inline Matrix dense_incidence(const MembershipNetwork& b) {
  Matrix y = Matrix::Zero(b.n_users(), b.n_communities());
  for (const auto& [u, c] : b.pairs()) y(u, c) = 1.0;
  return y;
}

inline double relative_frobenius(const Matrix& a, const Matrix& b) {
  const double scale = std::max(b.norm(), 1e-300);
  return (a - b).norm() / scale;
}

}  // namespace caso::testing

#include "caso/model.hpp"

namespace caso::testing {

struct ToyInstance {
  SocialGraph graph;
  MembershipNetwork train;
  ModelState state;
  std::vector<TrainTriple> triples;
  std::vector<Index> kl_users;
};

// 8 users, 3 communities, d = 4. User 7 is isolated, user 6 has no memberships.
inline ToyInstance toy_instance(std::uint64_t seed) {
  ToyInstance t;
  const std::vector<IndexPair> edges{{0, 1}, {0, 2}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {3, 5}, {5, 6}, {1, 4}};
  t.graph = SocialGraph::from_edges(8, edges);
  const std::vector<IndexPair> pairs{{0, 0}, {1, 0}, {2, 0}, {2, 1}, {3, 1}, {4, 1}, {5, 2}, {7, 2}, {4, 2}};
  t.train = MembershipNetwork::from_pairs(8, 3, pairs);
  t.state = init_state(8, 3, 4, seed);
  t.triples = {{0, 0, 1}, {1, 0, 2}, {2, 1, 2}, {3, 1, 0}, {4, 2, 0}, {5, 2, 1}, {7, 2, 0}, {2, 0, 2}};
  t.kl_users = {0, 1, 2, 3, 4, 5, 6, 7};
  return t;
}

struct GradientCheck {
  double worst_relative = 0.0;
  double worst_absolute = 0.0;
};

// Elementwise |analytic - numeric| / max(|analytic|, |numeric|, floor), with
// central differences of step h on every entry of U0 and C.
inline GradientCheck check_gradients(const ToyInstance& t, const TrainingConfig& cfg, double h, double floor) {
  const EncoderOperators ops = EncoderOperators::build(t.graph, t.train, cfg.measure);
  const double theta = effective_weights(cfg).theta;
  const Gradients g = backward(t.state, ops, cfg, t.train, t.triples, t.kl_users);
  auto loss = [&](const Matrix& u0, const Matrix& c) {
    return joint_loss(forward(u0, ops, cfg), c, t.train, t.triples, t.kl_users, cfg.zeta, theta).total;
  };
  GradientCheck out;
  auto record = [&](double analytic, double numeric) {
    const double abs_err = std::abs(analytic - numeric);
    const double scale = std::max({std::abs(analytic), std::abs(numeric), floor});
    out.worst_absolute = std::max(out.worst_absolute, abs_err);
    out.worst_relative = std::max(out.worst_relative, abs_err / scale);
  };
  const Matrix& u0 = t.state.user_base;
  const Matrix& c = t.state.community_emb;
  for (Index i = 0; i < u0.rows(); ++i) {
    for (Index j = 0; j < u0.cols(); ++j) {
      Matrix up = u0, um = u0;
      up(i, j) += h;
      um(i, j) -= h;
      record(g.user_base(i, j), (loss(up, c) - loss(um, c)) / (2.0 * h));
    }
  }
  for (Index i = 0; i < c.rows(); ++i) {
    for (Index j = 0; j < c.cols(); ++j) {
      Matrix cp = c, cm = c;
      cp(i, j) += h;
      cm(i, j) -= h;
      record(g.community(i, j), (loss(u0, cp) - loss(u0, cm)) / (2.0 * h));
    }
  }
  return out;
}

inline std::vector<std::pair<std::string, TrainingConfig>> ablation_configs(const TrainingConfig& base) {
  std::vector<std::pair<std::string, TrainingConfig>> out;
  out.emplace_back("full", base);
  auto with = [&](const char* name, bool Ablations::*flag) {
    TrainingConfig cfg = base;
    cfg.ablations.*flag = true;
    out.emplace_back(name, cfg);
  };
  with("no_smm", &Ablations::no_smm);
  with("no_sca", &Ablations::no_sca);
  with("no_uce", &Ablations::no_uce);
  with("no_fme", &Ablations::no_fme);
  with("no_kl", &Ablations::no_kl);
  return out;
}

}  // namespace caso::testing
