#pragma once

#include <cstdint>

#include "caso/graph.hpp"

namespace caso {

/// Intra-community and inter-community averages of one pair statistic.
struct PairAverages {
  double intra = 0.0;
  double inter = 0.0;
};

struct StructureReport {
  double ac_intra = 0.0;
  double ac_inter = 0.0;
  double acn_intra = 0.0;
  double acn_inter = 0.0;
  double acc_intra = 0.0;
  double acc_inter = 0.0;
  double modularity_std = 0.0;
  double modularity_norm = 0.0;
};

struct PairSampling {
  // 0 enumerates exactly; otherwise number of sampled pairs per average.
  std::uint64_t samples = 0;
  std::uint64_t seed = 0;
};

// Pair conventions:
//  intra: ordered pairs (u_i, u_j), i != j, both members of the same community
//         c_k, summed over k; denominator sum_k sigma_k (sigma_k - 1).
//  inter: ordered community pairs k != l, u_i in c_k, u_j in c_l, u_i != u_j;
//         denominator sum_{k != l} sigma_k sigma_l (counts u_i == u_j slots).
// A user in several communities contributes once per enumeration slot.
//
// Throws std::domain_error("no intra pairs") when no community has two
// members. The inter value is 0 when there is only one community.

PairAverages average_connectivity(const SocialGraph& graph, const MembershipNetwork& memberships,
                                  const PairSampling& sampling = {});
PairAverages average_common_neighbors(const SocialGraph& graph, const MembershipNetwork& memberships,
                                      const PairSampling& sampling = {});
/// The intra summand subtracts one for the community the pair is enumerated under.
PairAverages average_common_communities(const MembershipNetwork& memberships, const PairSampling& sampling = {});

/// trace(Y^T M Y) with M = A - d d^T/|E| (standard) or
/// D^{-1/2} A D^{-1/2} - sqrt(d) sqrt(d)^T/|E| (normalized). Sums over all
/// user pairs, so a pair sharing m communities is weighted m times.
double modularity_score(const SocialGraph& graph, const MembershipNetwork& memberships, bool normalized);

StructureReport structure_report(const SocialGraph& graph, const MembershipNetwork& memberships,
                                 const PairSampling& sampling = {});

}  // namespace caso
