#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "caso/config.hpp"
#include "caso/io.hpp"
#include "caso/structure_metrics.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace caso;
using namespace caso::testing;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("caso_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

}  // namespace

TEST_CASE("parse_pairs skips comments and blank lines and accepts CRLF") {
  std::istringstream in("# header\n\na b\r\n  # indented comment\nb\tc\n");
  const auto pairs = parse_pairs(in, "mem");
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0] == TokenPair{"a", "b"});
  CHECK(pairs[1] == TokenPair{"b", "c"});
}

TEST_CASE("parse_pairs reports the offending line") {
  std::istringstream three("a b\nb c d\n");
  CHECK_THROWS_WITH_AS(parse_pairs(three, "g.txt"), "g.txt:2: expected two tokens", std::runtime_error);
  std::istringstream one("a b\nlonely\n");
  CHECK_THROWS_WITH_AS(parse_pairs(one, "g.txt"), "g.txt:2: expected two tokens", std::runtime_error);
  std::istringstream empty("# nothing\n");
  CHECK_THROWS_WITH_AS(parse_pairs(empty, "g.txt"), "g.txt: empty file", std::runtime_error);
}

TEST_CASE("edge list round trip preserves degrees") {
  const fs::path dir = scratch_dir("edges");
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> pick(0, 29);
  std::vector<TokenPair> edges;
  for (int e = 0; e < 100; ++e) edges.emplace_back("n" + std::to_string(pick(rng)), "n" + std::to_string(pick(rng)));
  write_pairs(dir / "g.txt", edges);
  const auto reloaded = load_edge_list(dir / "g.txt");
  CHECK(reloaded == edges);
  const GraphBuild a = build_social_graph(edges);
  const GraphBuild b = build_social_graph(reloaded);
  CHECK(a.graph.degrees() == b.graph.degrees());
  CHECK_THROWS_AS(load_edge_list(dir / "missing.txt"), std::runtime_error);
}

TEST_CASE("dataset bundles add membership-only users as isolated nodes") {
  const std::vector<TokenPair> edges{{"a", "b"}, {"b", "c"}};
  const std::vector<TokenPair> memberships{{"a", "x"}, {"d", "y"}, {"c", "x"}};
  const DatasetBundle bundle = make_bundle(edges, memberships);
  CHECK(bundle.graph.n_users() == 4);
  CHECK(bundle.users.find("d") == 3);
  CHECK(bundle.graph.degree(3) == 0);
  CHECK(bundle.memberships.n_communities() == 2);
  CHECK(bundle.memberships.community_size(bundle.communities.find("x")) == 2);
  CHECK_THROWS_AS(make_bundle({}, memberships), std::invalid_argument);
}

TEST_CASE("write_dataset and load_dataset round trip with equal hashes") {
  SynthSpec spec;
  spec.n_users = 60;
  spec.memberships_per_user = 2;
  spec.seed = 3;
  const DatasetBundle original = generate_planted_partition(spec);
  const fs::path dir = scratch_dir("bundle");
  write_dataset(original, dir);
  const DatasetBundle reloaded = load_dataset(dir / "graph.txt", dir / "memberships.txt");
  CHECK(reloaded.content_hash == original.content_hash);
  CHECK(reloaded.graph.n_edges() == original.graph.n_edges());
  CHECK(reloaded.memberships.n_memberships() == original.memberships.n_memberships());
  for (Index c = 0; c < original.communities.size(); ++c) {
    const Index mapped = reloaded.communities.find(original.communities.token(c));
    CHECK(reloaded.memberships.community_size(mapped) == original.memberships.community_size(c));
  }
}

TEST_CASE("planted partition generator") {
  SynthSpec spec;
  spec.n_users = 10;
  spec.n_blocks = 2;
  spec.p_in = 1.0;
  spec.p_out = 0.0;
  const DatasetBundle cliques = generate_planted_partition(spec);
  CHECK(cliques.graph.n_edges() == 20);
  const auto ac = average_connectivity(cliques.graph, cliques.memberships);
  CHECK(ac.intra == 1.0);
  CHECK(ac.inter == 0.0);

  SynthSpec big;
  big.seed = 8;
  CHECK(generate_planted_partition(big).content_hash == generate_planted_partition(big).content_hash);
  SynthSpec other = big;
  other.seed = 9;
  CHECK(generate_planted_partition(big).content_hash != generate_planted_partition(other).content_hash);

  big.memberships_per_user = 3;
  const DatasetBundle overlapping = generate_planted_partition(big);
  for (Index u = 0; u < overlapping.memberships.n_users(); ++u) CHECK(overlapping.memberships.user_degree(u) == 3);

  SynthSpec bad;
  bad.p_out = 0.5;
  bad.p_in = 0.5;
  CHECK_THROWS_AS(generate_planted_partition(bad), std::invalid_argument);
}

TEST_CASE("planted partitions show the connectivity gap over many seeds") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SynthSpec spec;
    spec.seed = seed;
    const DatasetBundle data = generate_planted_partition(spec);
    const StructureReport r = structure_report(data.graph, data.memberships);
    CHECK(r.ac_intra > r.ac_inter);
    CHECK(r.acn_intra > r.acn_inter);
  }
}

TEST_CASE("checkpoint round trip is bit exact and little-endian") {
  Checkpoint ckpt;
  ckpt.config_text = "alpha = 0.33\n";
  ckpt.provenance = 0x0102030405060708ULL;
  ckpt.user_base = random_matrix(5, 3, 1);
  ckpt.community_emb = random_matrix(2, 3, 2);
  ckpt.user_emb = random_matrix(5, 3, 3);
  const fs::path dir = scratch_dir("ckpt");
  save_checkpoint(dir / "m.caso", ckpt);
  const Checkpoint back = load_checkpoint(dir / "m.caso");
  CHECK(back.config_text == ckpt.config_text);
  CHECK(back.provenance == ckpt.provenance);
  CHECK(back.user_base == ckpt.user_base);
  CHECK(back.community_emb == ckpt.community_emb);
  CHECK(back.user_emb == ckpt.user_emb);

  std::ifstream in(dir / "m.caso", std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(bytes.substr(0, 5) == "CASO1");
  CHECK(static_cast<unsigned char>(bytes[5]) == 5);  // n_users, low byte first
  CHECK(static_cast<unsigned char>(bytes[29]) == 0x08);  // provenance, low byte first
  const std::size_t first_value = 5 + 5 * 8 + ckpt.config_text.size();
  double stored = 0.0;
  std::memcpy(&stored, bytes.data() + first_value, 8);
  CHECK(stored == ckpt.user_base(0, 0));
  CHECK(bytes.size() == first_value + 8 * (15 + 6 + 15));

  write_text(dir / "bad.caso", "NOPE!");
  CHECK_THROWS_AS(load_checkpoint(dir / "bad.caso"), std::runtime_error);
  write_text(dir / "short.caso", bytes.substr(0, bytes.size() - 4));
  CHECK_THROWS_AS(load_checkpoint(dir / "short.caso"), std::runtime_error);
}

TEST_CASE("config text round trips every field") {
  TrainingConfig cfg;
  cfg.alpha = 0.1 + 0.2;
  cfg.zeta = 3.7e-7;
  cfg.steps = 5;
  cfg.measure = NscMeasure::LHNI;
  cfg.ablations.no_uce = true;
  cfg.mode = PipelineMode::PerEpoch;
  cfg.seed = 18446744073709551615ULL;
  const std::string text = format_config(cfg);
  TrainingConfig back;
  apply_settings(back, parse_key_values(text));
  CHECK(format_config(back) == text);
  CHECK(back.alpha == cfg.alpha);
  CHECK(back.zeta == cfg.zeta);
  CHECK(back.ablations.no_uce);
  CHECK(back.seed == cfg.seed);
}

TEST_CASE("config parsing errors") {
  TrainingConfig cfg;
  CHECK_THROWS_AS(apply_setting(cfg, "alpah", "0.1"), std::invalid_argument);
  CHECK_THROWS_AS(apply_setting(cfg, "alpha", "0.1x"), std::invalid_argument);
  CHECK_THROWS_AS(apply_setting(cfg, "no_kl", "maybe"), std::invalid_argument);
  CHECK_THROWS_AS(apply_setting(cfg, "mode", "sometimes"), std::invalid_argument);
  CHECK_THROWS_AS(parse_key_values("alpha 0.1\n"), std::invalid_argument);
  const auto kv = parse_key_values("# comment\n  beta = 0.5  \n\nmeasure=CN\n");
  apply_settings(cfg, kv);
  CHECK(cfg.beta == 0.5);
  CHECK(cfg.measure == NscMeasure::CN);
}
