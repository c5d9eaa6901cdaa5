#include "caso/structure_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

namespace caso {
namespace {

Index sorted_intersection_size(std::span<const Index> a, std::span<const Index> b) {
  Index count = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++count;
      ++ia;
      ++ib;
    }
  }
  return count;
}

double intra_denominator(const MembershipNetwork& b) {
  double total = 0.0;
  for (Index k = 0; k < b.n_communities(); ++k) {
    const double s = static_cast<double>(b.community_size(k));
    total += s * (s - 1.0);
  }
  if (total <= 0.0) throw std::domain_error("no intra pairs");
  return total;
}

double inter_denominator(const MembershipNetwork& b) {
  const double y = static_cast<double>(b.n_memberships());
  return y * y - b.community_sizes().squaredNorm();
}

void check_shapes(const SocialGraph& g, const MembershipNetwork& b) {
  if (g.n_users() != b.n_users()) throw std::invalid_argument("graph and memberships disagree on user count");
}

// Per-pair summands, used by the sampling estimator.
enum class Statistic { Connectivity, CommonNeighbors, CommonCommunities };

double pair_summand(Statistic stat, const SocialGraph* g, const MembershipNetwork& b, Index i, Index j) {
  switch (stat) {
    case Statistic::Connectivity:
      return g->has_edge(i, j) ? 1.0 : 0.0;
    case Statistic::CommonNeighbors:
      return static_cast<double>(sorted_intersection_size(g->neighbors(i), g->neighbors(j)));
    case Statistic::CommonCommunities:
      return static_cast<double>(sorted_intersection_size(b.communities_of(i), b.communities_of(j)));
  }
  return 0.0;
}

PairAverages sample_averages(Statistic stat, const SocialGraph* g, const MembershipNetwork& b,
                             const PairSampling& sampling) {
  intra_denominator(b);
  std::mt19937_64 rng(sampling.seed);
  std::vector<double> intra_weights(static_cast<std::size_t>(b.n_communities()));
  std::vector<double> size_weights(static_cast<std::size_t>(b.n_communities()));
  for (Index k = 0; k < b.n_communities(); ++k) {
    const double s = static_cast<double>(b.community_size(k));
    intra_weights[static_cast<std::size_t>(k)] = s * (s - 1.0);
    size_weights[static_cast<std::size_t>(k)] = s;
  }
  std::discrete_distribution<Index> pick_intra(intra_weights.begin(), intra_weights.end());
  std::discrete_distribution<Index> pick_sized(size_weights.begin(), size_weights.end());

  PairAverages out;
  double intra_sum = 0.0;
  for (std::uint64_t s = 0; s < sampling.samples; ++s) {
    const Index k = pick_intra(rng);
    const auto members = b.members_of(k);
    std::uniform_int_distribution<std::size_t> first(0, members.size() - 1);
    std::uniform_int_distribution<std::size_t> second(0, members.size() - 2);
    const std::size_t a = first(rng);
    std::size_t c = second(rng);
    if (c >= a) ++c;
    double value = pair_summand(stat, g, b, members[a], members[c]);
    if (stat == Statistic::CommonCommunities) value -= 1.0;
    intra_sum += value;
  }
  out.intra = intra_sum / static_cast<double>(sampling.samples);

  if (inter_denominator(b) <= 0.0) return out;
  double inter_sum = 0.0;
  for (std::uint64_t s = 0; s < sampling.samples; ++s) {
    Index k = 0;
    Index l = 0;
    do {
      k = pick_sized(rng);
      l = pick_sized(rng);
    } while (k == l);
    const auto mk = b.members_of(k);
    const auto ml = b.members_of(l);
    const Index i = mk[std::uniform_int_distribution<std::size_t>(0, mk.size() - 1)(rng)];
    const Index j = ml[std::uniform_int_distribution<std::size_t>(0, ml.size() - 1)(rng)];
    if (i != j) inter_sum += pair_summand(stat, g, b, i, j);
  }
  out.inter = inter_sum / static_cast<double>(sampling.samples);
  return out;
}

}  // namespace

// The exact paths never enumerate inter pairs. A pair (i, j) occupies
// delta_i delta_j - c_ij inter slots and c_ij intra slots, where c_ij is the
// number of shared communities, so every inter numerator is a degree-weighted
// total minus the matching intra numerator.

PairAverages average_connectivity(const SocialGraph& g, const MembershipNetwork& b, const PairSampling& sampling) {
  check_shapes(g, b);
  if (sampling.samples > 0) return sample_averages(Statistic::Connectivity, &g, b, sampling);
  const double intra_den = intra_denominator(b);

  std::vector<char> marked(static_cast<std::size_t>(g.n_users()), 0);
  double intra_num = 0.0;
  for (Index k = 0; k < b.n_communities(); ++k) {
    const auto members = b.members_of(k);
    for (Index i : members) marked[static_cast<std::size_t>(i)] = 1;
    for (Index i : members) {
      for (Index j : g.neighbors(i)) intra_num += marked[static_cast<std::size_t>(j)];
    }
    for (Index i : members) marked[static_cast<std::size_t>(i)] = 0;
  }

  const Vector& delta = b.user_degrees();
  double weighted_edges = 0.0;
  for (Index i = 0; i < g.n_users(); ++i) {
    for (Index j : g.neighbors(i)) weighted_edges += delta[i] * delta[j];
  }
  const double inter_den = inter_denominator(b);
  PairAverages out;
  out.intra = intra_num / intra_den;
  out.inter = inter_den > 0.0 ? (weighted_edges - intra_num) / inter_den : 0.0;
  return out;
}

PairAverages average_common_neighbors(const SocialGraph& g, const MembershipNetwork& b, const PairSampling& sampling) {
  check_shapes(g, b);
  if (sampling.samples > 0) return sample_averages(Statistic::CommonNeighbors, &g, b, sampling);
  const double intra_den = intra_denominator(b);

  // For a fixed community, sum_{i != j} |N(i) & N(j)| = sum_w m_w (m_w - 1)
  // with m_w the number of members adjacent to w.
  std::vector<double> adjacent(static_cast<std::size_t>(g.n_users()), 0.0);
  std::vector<Index> touched;
  double intra_num = 0.0;
  for (Index k = 0; k < b.n_communities(); ++k) {
    for (Index i : b.members_of(k)) {
      for (Index w : g.neighbors(i)) {
        if (adjacent[static_cast<std::size_t>(w)] == 0.0) touched.push_back(w);
        adjacent[static_cast<std::size_t>(w)] += 1.0;
      }
    }
    for (Index w : touched) {
      const double m = adjacent[static_cast<std::size_t>(w)];
      intra_num += m * (m - 1.0);
      adjacent[static_cast<std::size_t>(w)] = 0.0;
    }
    touched.clear();
  }

  const Vector& delta = b.user_degrees();
  double weighted = 0.0;
  for (Index w = 0; w < g.n_users(); ++w) {
    double sum = 0.0;
    double sum_sq = 0.0;
    for (Index i : g.neighbors(w)) {
      sum += delta[i];
      sum_sq += delta[i] * delta[i];
    }
    weighted += sum * sum - sum_sq;
  }
  const double inter_den = inter_denominator(b);
  PairAverages out;
  out.intra = intra_num / intra_den;
  out.inter = inter_den > 0.0 ? (weighted - intra_num) / inter_den : 0.0;
  return out;
}

PairAverages average_common_communities(const MembershipNetwork& b, const PairSampling& sampling) {
  if (sampling.samples > 0) return sample_averages(Statistic::CommonCommunities, nullptr, b, sampling);
  const double intra_den = intra_denominator(b);

  // shared = sum_k sum_{i != j in c_k} c_ij, counted as sum_l n_l (n_l - 1)
  // where n_l is the number of c_k's members that also belong to c_l.
  std::vector<double> overlap(static_cast<std::size_t>(b.n_communities()), 0.0);
  std::vector<Index> touched;
  double shared = 0.0;
  double weighted = 0.0;
  const Vector& delta = b.user_degrees();
  for (Index k = 0; k < b.n_communities(); ++k) {
    double sum = 0.0;
    double sum_sq = 0.0;
    for (Index i : b.members_of(k)) {
      sum += delta[i];
      sum_sq += delta[i] * delta[i];
      for (Index l : b.communities_of(i)) {
        if (overlap[static_cast<std::size_t>(l)] == 0.0) touched.push_back(l);
        overlap[static_cast<std::size_t>(l)] += 1.0;
      }
    }
    weighted += sum * sum - sum_sq;
    for (Index l : touched) {
      const double n = overlap[static_cast<std::size_t>(l)];
      shared += n * (n - 1.0);
      overlap[static_cast<std::size_t>(l)] = 0.0;
    }
    touched.clear();
  }
  // sum_{i != j} c_ij^2 over all pairs equals `shared`; the intra numerator
  // subtracts one per enumerated slot.
  const double intra_num = shared - intra_den;
  const double inter_den = inter_denominator(b);
  PairAverages out;
  out.intra = intra_num / intra_den;
  out.inter = inter_den > 0.0 ? (weighted - shared) / inter_den : 0.0;
  return out;
}

double modularity_score(const SocialGraph& g, const MembershipNetwork& b, bool normalized) {
  check_shapes(g, b);
  if (g.n_edges() < 1) throw std::invalid_argument("modularity needs at least one edge");
  const Vector& d = g.degrees();
  const double edges = static_cast<double>(g.n_edges());
  std::vector<char> marked(static_cast<std::size_t>(g.n_users()), 0);
  double total = 0.0;
  for (Index k = 0; k < b.n_communities(); ++k) {
    const auto members = b.members_of(k);
    for (Index i : members) marked[static_cast<std::size_t>(i)] = 1;
    double inside = 0.0;
    double mass = 0.0;
    for (Index i : members) {
      mass += normalized ? std::sqrt(d[i]) : d[i];
      for (Index j : g.neighbors(i)) {
        if (marked[static_cast<std::size_t>(j)] == 0) continue;
        inside += normalized ? 1.0 / std::sqrt(d[i] * d[j]) : 1.0;
      }
    }
    for (Index i : members) marked[static_cast<std::size_t>(i)] = 0;
    total += inside - mass * mass / edges;
  }
  return total;
}

StructureReport structure_report(const SocialGraph& g, const MembershipNetwork& b, const PairSampling& sampling) {
  StructureReport r;
  const auto ac = average_connectivity(g, b, sampling);
  const auto acn = average_common_neighbors(g, b, sampling);
  const auto acc = average_common_communities(b, sampling);
  r.ac_intra = ac.intra;
  r.ac_inter = ac.inter;
  r.acn_intra = acn.intra;
  r.acn_inter = acn.inter;
  r.acc_intra = acc.intra;
  r.acc_inter = acc.inter;
  r.modularity_std = modularity_score(g, b, false);
  r.modularity_norm = modularity_score(g, b, true);
  return r;
}

}  // namespace caso
