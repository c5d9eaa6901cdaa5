#include "caso/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace caso {

std::vector<TokenPair> parse_pairs(std::istream& in, const std::string& source) {
  std::vector<TokenPair> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    std::string a;
    std::string b;
    std::string extra;
    if (!(fields >> a >> b) || (fields >> extra)) {
      throw std::runtime_error(source + ":" + std::to_string(line_no) + ": expected two tokens");
    }
    out.emplace_back(std::move(a), std::move(b));
  }
  if (out.empty()) throw std::runtime_error(source + ": empty file");
  return out;
}

namespace {

std::vector<TokenPair> load_pairs(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return parse_pairs(in, path.string());
}

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

void fnv_mix(std::uint64_t& h, std::string_view bytes) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= kFnvPrime;
  }
}

DatasetBundle assemble(IdMap users, IdMap communities, const std::vector<IndexPair>& edges,
                       const std::vector<IndexPair>& memberships, std::string source) {
  DatasetBundle bundle;
  bundle.graph = SocialGraph::from_edges(users.size(), edges, &bundle.dropped_self_loops);
  if (bundle.graph.n_edges() == 0) throw std::invalid_argument("empty graph");
  bundle.memberships = MembershipNetwork::from_pairs(users.size(), communities.size(), memberships);
  bundle.users = std::move(users);
  bundle.communities = std::move(communities);
  bundle.source = std::move(source);
  bundle.content_hash = bundle_hash(bundle);
  return bundle;
}

}  // namespace

std::vector<TokenPair> load_edge_list(const std::filesystem::path& path) { return load_pairs(path); }

std::vector<TokenPair> load_memberships(const std::filesystem::path& path) { return load_pairs(path); }

void write_pairs(const std::filesystem::path& path, const std::vector<TokenPair>& pairs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& [a, b] : pairs) out << a << ' ' << b << '\n';
}

DatasetBundle make_bundle(const std::vector<TokenPair>& edges, const std::vector<TokenPair>& memberships,
                          std::string source) {
  if (edges.empty()) throw std::invalid_argument("empty graph");
  IdMap users;
  IdMap communities;
  std::vector<IndexPair> edge_ids;
  edge_ids.reserve(edges.size());
  for (const auto& [a, b] : edges) {
    const Index ia = users.intern(a);
    edge_ids.emplace_back(ia, users.intern(b));
  }
  std::vector<IndexPair> member_ids;
  member_ids.reserve(memberships.size());
  for (const auto& [u, c] : memberships) {
    const Index iu = users.intern(u);
    member_ids.emplace_back(iu, communities.intern(c));
  }
  return assemble(std::move(users), std::move(communities), edge_ids, member_ids, std::move(source));
}

DatasetBundle load_dataset(const std::filesystem::path& graph_path, const std::filesystem::path& memberships_path) {
  return make_bundle(load_edge_list(graph_path), load_memberships(memberships_path),
                     graph_path.string() + "," + memberships_path.string());
}

void write_dataset(const DatasetBundle& bundle, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<TokenPair> edges;
  for (Index i = 0; i < bundle.graph.n_users(); ++i) {
    for (Index j : bundle.graph.neighbors(i)) {
      if (i < j) edges.emplace_back(bundle.users.token(i), bundle.users.token(j));
    }
  }
  std::vector<TokenPair> memberships;
  for (const auto& [u, c] : bundle.memberships.pairs()) {
    memberships.emplace_back(bundle.users.token(u), bundle.communities.token(c));
  }
  write_pairs(dir / "graph.txt", edges);
  write_pairs(dir / "memberships.txt", memberships);
}

std::uint64_t bundle_hash(const DatasetBundle& bundle) {
  // Token-level canonical form, so the hash survives a write/reload cycle
  // that renumbers users.
  std::vector<std::string> edges;
  for (Index i = 0; i < bundle.graph.n_users(); ++i) {
    for (Index j : bundle.graph.neighbors(i)) {
      const auto& a = bundle.users.token(i);
      const auto& b = bundle.users.token(j);
      if (a < b) edges.push_back(a + '\t' + b);
    }
  }
  std::vector<std::string> memberships;
  for (const auto& [u, c] : bundle.memberships.pairs()) {
    memberships.push_back(bundle.users.token(u) + '\t' + bundle.communities.token(c));
  }
  std::sort(edges.begin(), edges.end());
  std::sort(memberships.begin(), memberships.end());
  std::uint64_t h = kFnvOffset;
  for (const auto& e : edges) {
    fnv_mix(h, e);
    fnv_mix(h, "\n");
  }
  fnv_mix(h, "--\n");
  for (const auto& m : memberships) {
    fnv_mix(h, m);
    fnv_mix(h, "\n");
  }
  return h;
}

void SynthSpec::validate() const {
  if (n_users < 2) throw std::invalid_argument("synth: need at least two users");
  if (n_blocks < 1 || n_blocks > n_users) throw std::invalid_argument("synth: blocks must lie in [1, n]");
  if (!(p_out >= 0.0 && p_out < p_in && p_in <= 1.0)) throw std::invalid_argument("synth: need 0 <= p_out < p_in <= 1");
  if (memberships_per_user < 1) throw std::invalid_argument("synth: memberships_per_user must be positive");
}

DatasetBundle generate_planted_partition(const SynthSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::bernoulli_distribution inside(spec.p_in);
  std::bernoulli_distribution across(spec.p_out);
  const Index n = spec.n_users;
  auto block_of = [&](Index u) { return u * spec.n_blocks / n; };

  IdMap users;
  IdMap communities;
  for (Index u = 0; u < n; ++u) users.intern("u" + std::to_string(u));
  for (Index k = 0; k < spec.n_blocks; ++k) communities.intern("c" + std::to_string(k));

  std::vector<IndexPair> edges;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      if (block_of(i) == block_of(j) ? inside(rng) : across(rng)) edges.emplace_back(i, j);
    }
  }

  std::vector<IndexPair> memberships;
  const Index extra = std::min(spec.memberships_per_user - 1, spec.n_blocks - 1);
  std::vector<Index> others;
  for (Index u = 0; u < n; ++u) {
    const Index own = block_of(u);
    memberships.emplace_back(u, own);
    if (extra == 0) continue;
    others.clear();
    for (Index k = 0; k < spec.n_blocks; ++k) {
      if (k != own) others.push_back(k);
    }
    std::shuffle(others.begin(), others.end(), rng);
    for (Index e = 0; e < extra; ++e) memberships.emplace_back(u, others[static_cast<std::size_t>(e)]);
  }
  return assemble(std::move(users), std::move(communities), edges, memberships, "synth");
}

namespace {

void write_u64(std::ostream& out, std::uint64_t v) {
  std::array<char, 8> bytes{};
  for (std::size_t i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xffU);
  out.write(bytes.data(), 8);
}

std::uint64_t read_u64(std::istream& in) {
  std::array<unsigned char, 8> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), 8);
  if (!in) throw std::runtime_error("checkpoint truncated");
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return v;
}

void write_block(std::ostream& out, const Matrix& m) {
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) write_u64(out, std::bit_cast<std::uint64_t>(m(i, j)));
  }
}

Matrix read_block(std::istream& in, Index rows, Index cols) {
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) m(i, j) = std::bit_cast<double>(read_u64(in));
  }
  return m;
}

constexpr std::string_view kMagic = "CASO1";

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const Index n = ckpt.user_base.rows();
  const Index d = ckpt.user_base.cols();
  if (ckpt.user_emb.rows() != n || ckpt.user_emb.cols() != d || ckpt.community_emb.cols() != d) {
    throw std::invalid_argument("checkpoint blocks disagree on shape");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(kMagic.data(), static_cast<std::streamsize>(kMagic.size()));
  write_u64(out, static_cast<std::uint64_t>(n));
  write_u64(out, static_cast<std::uint64_t>(ckpt.community_emb.rows()));
  write_u64(out, static_cast<std::uint64_t>(d));
  write_u64(out, ckpt.provenance);
  write_u64(out, ckpt.config_text.size());
  out.write(ckpt.config_text.data(), static_cast<std::streamsize>(ckpt.config_text.size()));
  write_block(out, ckpt.user_base);
  write_block(out, ckpt.community_emb);
  write_block(out, ckpt.user_emb);
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string magic(kMagic.size(), '\0');
  in.read(magic.data(), static_cast<std::streamsize>(magic.size()));
  if (!in || magic != kMagic) throw std::runtime_error(path.string() + ": not a CASO1 checkpoint");
  const auto n = static_cast<Index>(read_u64(in));
  const auto m = static_cast<Index>(read_u64(in));
  const auto d = static_cast<Index>(read_u64(in));
  Checkpoint ckpt;
  ckpt.provenance = read_u64(in);
  const auto len = read_u64(in);
  if (len > (1ULL << 24)) throw std::runtime_error("checkpoint config block too large");
  ckpt.config_text.resize(len);
  in.read(ckpt.config_text.data(), static_cast<std::streamsize>(len));
  if (!in) throw std::runtime_error("checkpoint truncated");
  ckpt.user_base = read_block(in, n, d);
  ckpt.community_emb = read_block(in, m, d);
  ckpt.user_emb = read_block(in, n, d);
  return ckpt;
}

}  // namespace caso
