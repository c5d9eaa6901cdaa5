#include "caso/graph.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace caso {

Index IdMap::intern(std::string_view token) {
  auto [it, inserted] = index_.try_emplace(std::string(token), size());
  if (inserted) tokens_.emplace_back(token);
  return it->second;
}

Index IdMap::find(std::string_view token) const {
  const auto it = index_.find(std::string(token));
  return it == index_.end() ? -1 : it->second;
}

namespace {

// Builds CSR offsets/columns from (row, col) pairs; columns per row end up
// sorted and unique.
void build_csr(Index n_rows, std::vector<IndexPair>& entries, std::vector<Index>& offsets, std::vector<Index>& columns) {
  std::sort(entries.begin(), entries.end());
  entries.erase(std::unique(entries.begin(), entries.end()), entries.end());
  offsets.assign(static_cast<std::size_t>(n_rows) + 1, 0);
  columns.clear();
  columns.reserve(entries.size());
  for (const auto& [row, col] : entries) {
    ++offsets[static_cast<std::size_t>(row) + 1];
    columns.push_back(col);
  }
  for (std::size_t i = 1; i < offsets.size(); ++i) offsets[i] += offsets[i - 1];
}

std::span<const Index> row_view(const std::vector<Index>& offsets, const std::vector<Index>& columns, Index row) {
  const auto begin = static_cast<std::size_t>(offsets[static_cast<std::size_t>(row)]);
  const auto end = static_cast<std::size_t>(offsets[static_cast<std::size_t>(row) + 1]);
  return {columns.data() + begin, end - begin};
}

SparseMatrix csr_to_sparse(Index n_rows, Index n_cols, const std::vector<Index>& offsets,
                           const std::vector<Index>& columns) {
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(columns.size());
  for (Index r = 0; r < n_rows; ++r) {
    for (Index c : row_view(offsets, columns, r)) triplets.emplace_back(r, c, 1.0);
  }
  SparseMatrix m(n_rows, n_cols);
  m.setFromTriplets(triplets.begin(), triplets.end());
  return m;
}

}  // namespace

SocialGraph SocialGraph::from_edges(Index n_users, std::span<const IndexPair> edges, Index* dropped_self_loops) {
  if (n_users < 0) throw std::invalid_argument("negative user count");
  Index dropped = 0;
  std::vector<IndexPair> entries;
  entries.reserve(edges.size() * 2);
  for (const auto& [a, b] : edges) {
    if (a < 0 || b < 0 || a >= n_users || b >= n_users) throw std::out_of_range("edge endpoint out of range");
    if (a == b) {
      ++dropped;
      continue;
    }
    entries.emplace_back(a, b);
    entries.emplace_back(b, a);
  }
  SocialGraph g;
  build_csr(n_users, entries, g.offsets_, g.columns_);
  g.n_edges_ = static_cast<Index>(g.columns_.size()) / 2;
  g.degree_.resize(n_users);
  for (Index u = 0; u < n_users; ++u) g.degree_[u] = static_cast<double>(g.degree(u));
  if (dropped_self_loops != nullptr) *dropped_self_loops = dropped;
  return g;
}

std::span<const Index> SocialGraph::neighbors(Index user) const { return row_view(offsets_, columns_, user); }

bool SocialGraph::has_edge(Index a, Index b) const {
  const auto row = neighbors(a);
  return std::binary_search(row.begin(), row.end(), b);
}

SparseMatrix SocialGraph::adjacency() const { return csr_to_sparse(n_users(), n_users(), offsets_, columns_); }

GraphBuild build_social_graph(std::span<const TokenPair> edges) {
  if (edges.empty()) throw std::invalid_argument("empty graph");
  GraphBuild out;
  std::vector<IndexPair> indexed;
  indexed.reserve(edges.size());
  for (const auto& [a, b] : edges) {
    const Index ia = out.users.intern(a);
    const Index ib = out.users.intern(b);
    indexed.emplace_back(ia, ib);
  }
  out.graph = SocialGraph::from_edges(out.users.size(), indexed, &out.dropped_self_loops);
  if (out.graph.n_edges() == 0) throw std::invalid_argument("empty graph");
  return out;
}

MembershipNetwork MembershipNetwork::from_pairs(Index n_users, Index n_communities, std::span<const IndexPair> pairs) {
  if (n_users < 0 || n_communities < 0) throw std::invalid_argument("negative dimension");
  std::vector<IndexPair> by_user;
  std::vector<IndexPair> by_community;
  by_user.reserve(pairs.size());
  by_community.reserve(pairs.size());
  for (const auto& [u, c] : pairs) {
    if (u < 0 || u >= n_users || c < 0 || c >= n_communities) throw std::out_of_range("membership out of range");
    by_user.emplace_back(u, c);
    by_community.emplace_back(c, u);
  }
  MembershipNetwork b;
  build_csr(n_users, by_user, b.user_offsets_, b.user_columns_);
  build_csr(n_communities, by_community, b.community_offsets_, b.community_rows_);
  b.user_degree_.resize(n_users);
  for (Index u = 0; u < n_users; ++u) b.user_degree_[u] = static_cast<double>(b.user_degree(u));
  b.community_size_.resize(n_communities);
  for (Index c = 0; c < n_communities; ++c) b.community_size_[c] = static_cast<double>(b.community_size(c));
  return b;
}

std::span<const Index> MembershipNetwork::communities_of(Index user) const {
  return row_view(user_offsets_, user_columns_, user);
}

std::span<const Index> MembershipNetwork::members_of(Index community) const {
  return row_view(community_offsets_, community_rows_, community);
}

bool MembershipNetwork::contains(Index user, Index community) const {
  const auto row = communities_of(user);
  return std::binary_search(row.begin(), row.end(), community);
}

std::vector<IndexPair> MembershipNetwork::pairs() const {
  std::vector<IndexPair> out;
  out.reserve(user_columns_.size());
  for (Index u = 0; u < n_users(); ++u) {
    for (Index c : communities_of(u)) out.emplace_back(u, c);
  }
  return out;
}

SparseMatrix MembershipNetwork::incidence() const {
  return csr_to_sparse(n_users(), n_communities(), user_offsets_, user_columns_);
}

MembershipNetwork merge(const MembershipNetwork& a, const MembershipNetwork& b) {
  if (a.n_users() != b.n_users() || a.n_communities() != b.n_communities()) {
    throw std::invalid_argument("merge: dimension mismatch");
  }
  auto pairs = a.pairs();
  const auto more = b.pairs();
  pairs.insert(pairs.end(), more.begin(), more.end());
  return MembershipNetwork::from_pairs(a.n_users(), a.n_communities(), pairs);
}

LinearOperator normalized_adjacency(const SocialGraph& graph) {
  const Index n = graph.n_users();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(graph.column_indices().size());
  const Vector& d = graph.degrees();
  for (Index i = 0; i < n; ++i) {
    for (Index j : graph.neighbors(i)) triplets.emplace_back(i, j, 1.0 / std::sqrt(d[i] * d[j]));
  }
  SparseMatrix m(n, n);
  m.setFromTriplets(triplets.begin(), triplets.end());
  return LinearOperator(std::move(m));
}

LinearOperator modularity_operator(const SocialGraph& graph) {
  if (graph.n_edges() < 1) throw std::invalid_argument("modularity operator needs at least one edge");
  const Vector sqrt_d = graph.degrees().cwiseSqrt();
  LinearOperator normalized = normalized_adjacency(graph);
  std::vector<LowRankTerm> terms{{-1.0 / static_cast<double>(graph.n_edges()), sqrt_d, sqrt_d}};
  return LinearOperator(normalized.sparse_part(), std::move(terms));
}

}  // namespace caso
