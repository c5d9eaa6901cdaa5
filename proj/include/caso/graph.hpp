#pragma once

#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "caso/linear_operator.hpp"
#include "caso/types.hpp"

namespace caso {

using IndexPair = std::pair<Index, Index>;
using TokenPair = std::pair<std::string, std::string>;

/// Token <-> dense index table. Indices are assigned in order of first
/// appearance, so the same input always yields the same mapping.
class IdMap {
 public:
  Index intern(std::string_view token);
  [[nodiscard]] Index find(std::string_view token) const;  // -1 when absent
  [[nodiscard]] const std::string& token(Index index) const { return tokens_.at(static_cast<std::size_t>(index)); }
  [[nodiscard]] Index size() const { return static_cast<Index>(tokens_.size()); }
  [[nodiscard]] const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::unordered_map<std::string, Index> index_;
  std::vector<std::string> tokens_;
};

/// Undirected, unweighted user graph in compressed row form.
///
/// Neighbor lists are sorted and deduplicated, there are no self-loops and
/// the adjacency is symmetric. n_edges() counts every undirected edge once.
class SocialGraph {
 public:
  SocialGraph() = default;

  /// Builds from index pairs over [0, n_users). Duplicate and reversed pairs
  /// collapse to one edge; self-loops are dropped and counted.
  static SocialGraph from_edges(Index n_users, std::span<const IndexPair> edges,
                                Index* dropped_self_loops = nullptr);

  [[nodiscard]] Index n_users() const { return static_cast<Index>(offsets_.size()) - 1; }
  [[nodiscard]] Index n_edges() const { return n_edges_; }
  [[nodiscard]] std::span<const Index> neighbors(Index user) const;
  [[nodiscard]] Index degree(Index user) const { return offsets_[user + 1] - offsets_[user]; }
  [[nodiscard]] const Vector& degrees() const { return degree_; }
  [[nodiscard]] const std::vector<Index>& row_offsets() const { return offsets_; }
  [[nodiscard]] const std::vector<Index>& column_indices() const { return columns_; }
  [[nodiscard]] bool has_edge(Index a, Index b) const;

  /// 0/1 adjacency as a sparse matrix.
  [[nodiscard]] SparseMatrix adjacency() const;

 private:
  std::vector<Index> offsets_{0};
  std::vector<Index> columns_;
  Vector degree_;
  Index n_edges_ = 0;
};

struct GraphBuild {
  SocialGraph graph;
  IdMap users;
  Index dropped_self_loops = 0;
};

/// Remaps arbitrary tokens to dense ids and builds the graph.
/// Throws std::invalid_argument("empty graph") when no edges are given.
GraphBuild build_social_graph(std::span<const TokenPair> edges);

/// Bipartite user-community incidence, stored both user-major and
/// community-major.
class MembershipNetwork {
 public:
  MembershipNetwork() = default;

  /// Duplicate pairs collapse; indices must lie within the given dimensions.
  static MembershipNetwork from_pairs(Index n_users, Index n_communities, std::span<const IndexPair> pairs);

  [[nodiscard]] Index n_users() const { return static_cast<Index>(user_offsets_.size()) - 1; }
  [[nodiscard]] Index n_communities() const { return static_cast<Index>(community_offsets_.size()) - 1; }
  [[nodiscard]] Index n_memberships() const { return static_cast<Index>(user_columns_.size()); }

  [[nodiscard]] std::span<const Index> communities_of(Index user) const;
  [[nodiscard]] std::span<const Index> members_of(Index community) const;
  [[nodiscard]] Index user_degree(Index user) const { return user_offsets_[user + 1] - user_offsets_[user]; }
  [[nodiscard]] Index community_size(Index community) const {
    return community_offsets_[community + 1] - community_offsets_[community];
  }
  [[nodiscard]] const Vector& user_degrees() const { return user_degree_; }
  [[nodiscard]] const Vector& community_sizes() const { return community_size_; }
  [[nodiscard]] bool contains(Index user, Index community) const;

  /// All (user, community) pairs in user-major order.
  [[nodiscard]] std::vector<IndexPair> pairs() const;

  /// 0/1 bi-adjacency as a sparse users x communities matrix.
  [[nodiscard]] SparseMatrix incidence() const;

 private:
  std::vector<Index> user_offsets_{0};
  std::vector<Index> user_columns_;
  std::vector<Index> community_offsets_{0};
  std::vector<Index> community_rows_;
  Vector user_degree_;
  Vector community_size_;
};

/// Union of two networks with identical dimensions.
MembershipNetwork merge(const MembershipNetwork& a, const MembershipNetwork& b);

/// D^{-1/2} A D^{-1/2}; isolated users get zero rows.
LinearOperator normalized_adjacency(const SocialGraph& graph);

/// D^{-1/2} A D^{-1/2} - sqrt(d) sqrt(d)^T / |E|. Requires at least one edge.
LinearOperator modularity_operator(const SocialGraph& graph);

}  // namespace caso
