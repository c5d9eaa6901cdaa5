#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "caso/graph.hpp"
#include "caso/model.hpp"

namespace caso {

/// Reads whitespace-separated token pairs, one per line. Blank lines and
/// lines starting with '#' are skipped; a trailing '\r' is accepted.
/// Throws std::runtime_error naming the line on malformed input, and on an
/// input without any pairs.
std::vector<TokenPair> parse_pairs(std::istream& in, const std::string& source);
std::vector<TokenPair> load_edge_list(const std::filesystem::path& path);
std::vector<TokenPair> load_memberships(const std::filesystem::path& path);
void write_pairs(const std::filesystem::path& path, const std::vector<TokenPair>& pairs);

struct DatasetBundle {
  SocialGraph graph;
  MembershipNetwork memberships;
  IdMap users;
  IdMap communities;
  std::string source;
  std::uint64_t content_hash = 0;
  Index dropped_self_loops = 0;
};

/// Users are numbered by first appearance in the edge list, then in the
/// membership list; membership users without edges become isolated nodes.
DatasetBundle make_bundle(const std::vector<TokenPair>& edges, const std::vector<TokenPair>& memberships,
                          std::string source = {});
DatasetBundle load_dataset(const std::filesystem::path& graph_path, const std::filesystem::path& memberships_path);

/// Writes graph.txt and memberships.txt into `dir`.
void write_dataset(const DatasetBundle& bundle, const std::filesystem::path& dir);

/// FNV-1a over the canonical edge and membership lists.
std::uint64_t bundle_hash(const DatasetBundle& bundle);

struct SynthSpec {
  Index n_users = 400;
  Index n_blocks = 4;
  double p_in = 0.3;
  double p_out = 0.01;
  Index memberships_per_user = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Equal-size blocks (sizes differ by at most one), Bernoulli(p_in) edges
/// inside blocks and Bernoulli(p_out) across. Each block is a community;
/// users join memberships_per_user - 1 extra random communities.
DatasetBundle generate_planted_partition(const SynthSpec& spec);

/// Binary checkpoint container.
///
///   "CASO1"                          5 bytes magic
///   u64 n_users, u64 n_communities, u64 dim
///   u64 provenance hash
///   u64 config length, config text (key = value lines)
///   f64[n_users * dim]        U0   (row-major)
///   f64[n_communities * dim]  C
///   f64[n_users * dim]        U    (fused user embeddings)
///
/// All integers and floats are little-endian.
struct Checkpoint {
  std::string config_text;
  std::uint64_t provenance = 0;
  EmbeddingMatrix user_base;
  EmbeddingMatrix community_emb;
  EmbeddingMatrix user_emb;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace caso
