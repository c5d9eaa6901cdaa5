#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "caso/config.hpp"
#include "caso/eval.hpp"
#include "caso/io.hpp"
#include "caso/structure_metrics.hpp"

namespace fs = std::filesystem;
using namespace caso;

namespace {

struct DataOptions {
  std::string graph;
  std::string memberships;
};

// Flags that override the config file; unset flags leave it alone.
struct ConfigOptions {
  std::string config_file;
  std::optional<double> alpha, beta, gamma, lambda, theta, zeta, learning_rate;
  std::optional<Index> steps, dim, batch_size, max_epochs, patience;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> measure, mode;
  bool no_smm = false, no_sca = false, no_uce = false, no_fme = false, no_kl = false;
  std::vector<std::string> settings;
};

void add_data_options(CLI::App* cmd, DataOptions& data) {
  cmd->add_option("--graph", data.graph, "Edge list: one 'user user' pair per line")->required()->check(CLI::ExistingFile);
  cmd->add_option("--memberships", data.memberships, "Membership list: one 'user community' pair per line")
      ->required()
      ->check(CLI::ExistingFile);
}

void add_config_options(CLI::App* cmd, ConfigOptions& c) {
  cmd->add_option("--config", c.config_file, "key = value configuration file")->check(CLI::ExistingFile);
  cmd->add_option("--alpha", c.alpha, "SMM propagation weight, [0, 1/3)");
  cmd->add_option("--beta", c.beta, "Social vs collaborative fusion weight");
  cmd->add_option("--gamma", c.gamma, "SMM vs SCA fusion weight");
  cmd->add_option("--lambda", c.lambda, "FME penalty weight");
  cmd->add_option("--theta", c.theta, "KL loss weight");
  cmd->add_option("--zeta", c.zeta, "L2 regularization weight");
  cmd->add_option("--T", c.steps, "SMM propagation steps");
  cmd->add_option("--dim", c.dim, "Embedding size");
  cmd->add_option("--learning-rate", c.learning_rate, "Adam learning rate");
  cmd->add_option("--batch-size", c.batch_size, "Triples per optimizer step");
  cmd->add_option("--max-epochs", c.max_epochs, "Epoch limit");
  cmd->add_option("--patience", c.patience, "Early-stopping patience in epochs");
  cmd->add_option("--seed", c.seed, "Random seed");
  cmd->add_option("--measure", c.measure, "Closeness measure")
      ->check(CLI::IsMember({"cn", "aai", "rai", "si", "lhni"}, CLI::ignore_case));
  cmd->add_option("--mode", c.mode, "Pipeline recomputation")->check(CLI::IsMember({"per_step", "per_epoch"}));
  cmd->add_flag("--no-smm", c.no_smm, "Disable the modularity encoder");
  cmd->add_flag("--no-sca", c.no_sca, "Disable the closeness encoder");
  cmd->add_flag("--no-uce", c.no_uce, "Disable the collaborative encoder");
  cmd->add_flag("--no-fme", c.no_fme, "Bypass feature mutual exclusion");
  cmd->add_flag("--no-kl", c.no_kl, "Drop the KL community loss");
  cmd->add_option("--set", c.settings, "Extra key=value setting (repeatable)");
}

TrainingConfig resolve_config(const ConfigOptions& c) {
  TrainingConfig cfg;
  if (!c.config_file.empty()) apply_settings(cfg, load_key_values(c.config_file));
  for (const auto& kv : c.settings) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
    apply_setting(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  auto set = [](auto& field, const auto& value) {
    if (value) field = *value;
  };
  set(cfg.alpha, c.alpha);
  set(cfg.beta, c.beta);
  set(cfg.gamma, c.gamma);
  set(cfg.lambda, c.lambda);
  set(cfg.theta, c.theta);
  set(cfg.zeta, c.zeta);
  set(cfg.learning_rate, c.learning_rate);
  set(cfg.steps, c.steps);
  set(cfg.dim, c.dim);
  set(cfg.batch_size, c.batch_size);
  set(cfg.max_epochs, c.max_epochs);
  set(cfg.patience, c.patience);
  set(cfg.seed, c.seed);
  if (c.measure) cfg.measure = parse_measure(*c.measure);
  if (c.mode) apply_setting(cfg, "mode", *c.mode);
  cfg.ablations.no_smm |= c.no_smm;
  cfg.ablations.no_sca |= c.no_sca;
  cfg.ablations.no_uce |= c.no_uce;
  cfg.ablations.no_fme |= c.no_fme;
  cfg.ablations.no_kl |= c.no_kl;
  cfg.validate();
  return cfg;
}

void echo_config(std::ostream& out, const TrainingConfig& cfg) {
  out << "[config]\n" << format_config(cfg) << '\n';
}

DatasetBundle load(const DataOptions& data) {
  DatasetBundle bundle = load_dataset(data.graph, data.memberships);
  if (bundle.dropped_self_loops > 0) {
    std::cerr << "warning: dropped " << bundle.dropped_self_loops << " self-loop edge(s)\n";
  }
  return bundle;
}

std::string format_value(double v) {
  std::ostringstream s;
  s << std::setprecision(6) << std::fixed << v;
  return s.str();
}

void print_metrics(std::ostream& out, const RankingMetrics& m, const std::string& prefix = "") {
  out << std::left << std::setw(6) << "K" << std::setw(12) << "Recall" << "NDCG\n";
  for (const auto& [k, recall] : m.recall_at) {
    out << std::setw(6) << k << std::setw(12) << format_value(recall) << format_value(m.ndcg_at.at(k)) << '\n';
  }
  out << "evaluated users: " << m.n_evaluated_users << '\n';
  for (const auto& [k, recall] : m.recall_at) out << "metric." << prefix << "recall@" << k << " = " << recall << '\n';
  for (const auto& [k, ndcg] : m.ndcg_at) out << "metric." << prefix << "ndcg@" << k << " = " << ndcg << '\n';
}

void write_log(const fs::path& path, const TrainingConfig& cfg, const DatasetBundle& data, const FitResult& fitted) {
  std::ofstream log(path);
  if (!log) throw std::runtime_error("cannot write " + path.string());
  echo_config(log, cfg);
  log << "dataset = " << data.source << "\ncontent_hash = " << data.content_hash << "\n\n";
  log << "epoch\tloss\tbpr\tkl\tvalid_ndcg\n";
  log << std::setprecision(17);
  for (const auto& e : fitted.log) {
    log << e.epoch << '\t' << e.loss << '\t' << e.bpr << '\t' << e.kl << '\t' << e.valid_ndcg << '\n';
  }
  log << "best_epoch = " << fitted.best_epoch << "\nbest_valid_ndcg = " << fitted.best_valid_ndcg
      << "\ninitial_valid_ndcg = " << fitted.initial_valid_ndcg << '\n';
}

int run_stats(const DataOptions& data, std::uint64_t samples, std::uint64_t seed) {
  const DatasetBundle bundle = load(data);
  std::cout << "users = " << bundle.graph.n_users() << "\nedges = " << bundle.graph.n_edges()
            << "\ncommunities = " << bundle.memberships.n_communities()
            << "\nmemberships = " << bundle.memberships.n_memberships()
            << "\ndropped_self_loops = " << bundle.dropped_self_loops << '\n';
  const StructureReport r = structure_report(bundle.graph, bundle.memberships, {samples, seed});
  std::cout << std::left << std::setw(6) << "" << std::setw(12) << "intra" << "inter\n";
  std::cout << std::setw(6) << "AC" << std::setw(12) << format_value(r.ac_intra) << format_value(r.ac_inter) << '\n';
  std::cout << std::setw(6) << "ACN" << std::setw(12) << format_value(r.acn_intra) << format_value(r.acn_inter) << '\n';
  std::cout << std::setw(6) << "ACC" << std::setw(12) << format_value(r.acc_intra) << format_value(r.acc_inter) << '\n';
  std::cout << "ac_intra = " << r.ac_intra << "\nac_inter = " << r.ac_inter << "\nacn_intra = " << r.acn_intra
            << "\nacn_inter = " << r.acn_inter << "\nacc_intra = " << r.acc_intra << "\nacc_inter = " << r.acc_inter
            << "\nmodularity = " << r.modularity_std << "\nmodularity_normalized = " << r.modularity_norm << '\n';
  return 0;
}

int run_train(const DataOptions& data, const ConfigOptions& options, const std::vector<Index>& ks,
              const std::string& out) {
  const TrainingConfig cfg = resolve_config(options);
  echo_config(std::cout, cfg);
  const DatasetBundle bundle = load(data);
  const SplitResult split = split_for_config(bundle.memberships, cfg);
  const FitResult fitted = fit(bundle.graph, split.train, split.validation, cfg);
  const EmbeddingMatrix users = user_embeddings(fitted.state, bundle.graph, split.train, cfg);
  std::cout << "epochs = " << fitted.log.size() << "\nbest_epoch = " << fitted.best_epoch
            << "\nbest_valid_ndcg = " << fitted.best_valid_ndcg << '\n';
  if (split.test.n_memberships() > 0) {
    print_metrics(std::cout, evaluate_embeddings(users, fitted.state.community_emb,
                                                 merge(split.train, split.validation), split.test, ks));
  }
  if (!out.empty()) {
    save_checkpoint(out, {format_config(cfg), bundle.content_hash, fitted.state.user_base,
                          fitted.state.community_emb, users});
    write_log(out + ".log", cfg, bundle, fitted);
    std::cout << "checkpoint = " << out << '\n';
  }
  return 0;
}

int run_evaluate(const DataOptions& data, const std::string& checkpoint_path, const std::vector<Index>& ks) {
  const Checkpoint ckpt = load_checkpoint(checkpoint_path);
  TrainingConfig cfg;
  apply_settings(cfg, parse_key_values(ckpt.config_text));
  echo_config(std::cout, cfg);
  const DatasetBundle bundle = load(data);
  if (bundle.content_hash != ckpt.provenance) {
    std::cerr << "warning: dataset hash differs from the one recorded in the checkpoint\n";
  }
  if (ckpt.user_emb.rows() != bundle.graph.n_users() || ckpt.community_emb.rows() != bundle.memberships.n_communities()) {
    throw std::runtime_error("checkpoint dimensions do not match the dataset");
  }
  const SplitResult split = split_for_config(bundle.memberships, cfg);
  print_metrics(std::cout, evaluate_embeddings(ckpt.user_emb, ckpt.community_emb,
                                               merge(split.train, split.validation), split.test, ks));
  return 0;
}

int run_cross_validate(const DataOptions& data, const ConfigOptions& options, Index folds,
                       const std::vector<Index>& ks) {
  const TrainingConfig cfg = resolve_config(options);
  echo_config(std::cout, cfg);
  const DatasetBundle bundle = load(data);
  const CrossValidationResult r = cross_validate(bundle.graph, bundle.memberships, cfg, folds, ks);
  for (std::size_t f = 0; f < r.folds.size(); ++f) {
    std::cout << "fold " << f + 1 << ":";
    for (const auto& [k, v] : r.folds[f].recall_at) std::cout << " recall@" << k << "=" << format_value(v);
    for (const auto& [k, v] : r.folds[f].ndcg_at) std::cout << " ndcg@" << k << "=" << format_value(v);
    std::cout << '\n';
  }
  std::cout << "mean over " << folds << " folds\n";
  print_metrics(std::cout, r.mean);
  for (const auto& [k, v] : r.stddev.recall_at) std::cout << "metric.recall_std@" << k << " = " << v << '\n';
  for (const auto& [k, v] : r.stddev.ndcg_at) std::cout << "metric.ndcg_std@" << k << " = " << v << '\n';
  return 0;
}

RankingMetrics train_and_score(const DatasetBundle& bundle, const SplitResult& split, const TrainingConfig& cfg,
                               const std::vector<Index>& ks) {
  const FitResult fitted = fit(bundle.graph, split.train, split.validation, cfg);
  return evaluate(fitted.state, bundle.graph, split, cfg, ks);
}

int run_ablate(const DataOptions& data, const ConfigOptions& options, const std::vector<Index>& ks) {
  const TrainingConfig base = resolve_config(options);
  echo_config(std::cout, base);
  const DatasetBundle bundle = load(data);
  const SplitResult split = split_for_config(bundle.memberships, base);
  std::vector<std::pair<std::string, TrainingConfig>> variants{{"full", base}};
  auto variant = [&](const char* name, bool Ablations::*flag) {
    TrainingConfig cfg = base;
    cfg.ablations.*flag = true;
    variants.emplace_back(name, cfg);
  };
  variant("no_smm", &Ablations::no_smm);
  variant("no_sca", &Ablations::no_sca);
  variant("no_uce", &Ablations::no_uce);
  variant("no_fme", &Ablations::no_fme);
  variant("no_kl", &Ablations::no_kl);
  for (const auto& [name, cfg] : variants) {
    std::cout << "== " << name << '\n';
    print_metrics(std::cout, train_and_score(bundle, split, cfg, ks), name + ".");
  }
  return 0;
}

int run_sweep(const DataOptions& data, const ConfigOptions& options, const std::string& param,
              const std::vector<std::string>& values, const std::vector<Index>& ks) {
  const TrainingConfig base = resolve_config(options);
  echo_config(std::cout, base);
  const DatasetBundle bundle = load(data);
  const SplitResult split = split_for_config(bundle.memberships, base);
  std::cout << std::left << std::setw(12) << param;
  for (Index k : ks) std::cout << std::setw(12) << ("recall@" + std::to_string(k)) << std::setw(12) << ("ndcg@" + std::to_string(k));
  std::cout << '\n';
  std::ostringstream lines;
  for (const auto& value : values) {
    TrainingConfig cfg = base;
    apply_setting(cfg, param, value);
    cfg.validate();
    const RankingMetrics m = train_and_score(bundle, split, cfg, ks);
    std::cout << std::setw(12) << value;
    for (Index k : ks) std::cout << std::setw(12) << format_value(m.recall_at.at(k)) << std::setw(12) << format_value(m.ndcg_at.at(k));
    std::cout << '\n';
    for (Index k : ks) {
      lines << "metric." << param << "=" << value << ".recall@" << k << " = " << m.recall_at.at(k) << '\n';
      lines << "metric." << param << "=" << value << ".ndcg@" << k << " = " << m.ndcg_at.at(k) << '\n';
    }
  }
  std::cout << lines.str();
  return 0;
}

int run_synth(const SynthSpec& spec, const std::string& out) {
  const DatasetBundle bundle = generate_planted_partition(spec);
  write_dataset(bundle, out);
  std::cout << "users = " << bundle.graph.n_users() << "\nedges = " << bundle.graph.n_edges()
            << "\ncommunities = " << bundle.memberships.n_communities()
            << "\nmemberships = " << bundle.memberships.n_memberships() << "\ncontent_hash = " << bundle.content_hash
            << "\nwrote " << (fs::path(out) / "graph.txt").string() << " and "
            << (fs::path(out) / "memberships.txt").string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Community recommendation with community-aware social encoders"};
  app.require_subcommand(1);

  DataOptions data;
  ConfigOptions options;
  std::vector<Index> ks{1, 3, 5, 10};
  std::string out;

  auto add_ks = [&](CLI::App* cmd) {
    cmd->add_option("--K", ks, "Ranking cutoff (repeatable)")->check(CLI::PositiveNumber);
  };

  std::uint64_t samples = 0;
  std::uint64_t sample_seed = 0;
  auto* stats = app.add_subcommand("stats", "Dataset statistics and structural diagnostics");
  add_data_options(stats, data);
  stats->add_option("--samples", samples, "Sampled pairs per average (0 = exact)");
  stats->add_option("--sample-seed", sample_seed, "Seed for pair sampling");

  auto* train = app.add_subcommand("train", "Train on an 80/20 split, report test metrics, save a checkpoint");
  add_data_options(train, data);
  add_config_options(train, options);
  add_ks(train);
  train->add_option("--out", out, "Checkpoint path; the training log goes to <out>.log");

  std::string checkpoint;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score a checkpoint on the split it was trained with");
  add_data_options(evaluate_cmd, data);
  evaluate_cmd->add_option("--checkpoint", checkpoint, "Checkpoint written by train")
      ->required()
      ->check(CLI::ExistingFile);
  add_ks(evaluate_cmd);

  Index folds = 5;
  auto* cv = app.add_subcommand("cross-validate", "k-fold cross-validation");
  add_data_options(cv, data);
  add_config_options(cv, options);
  add_ks(cv);
  cv->add_option("--folds", folds, "Number of folds")->check(CLI::Range(2, 1000));

  auto* ablate = app.add_subcommand("ablate", "Full model and the five single-component ablations");
  add_data_options(ablate, data);
  add_config_options(ablate, options);
  add_ks(ablate);

  std::string param;
  std::vector<std::string> values;
  auto* sweep = app.add_subcommand("sweep", "Train once per value of one hyperparameter");
  add_data_options(sweep, data);
  add_config_options(sweep, options);
  add_ks(sweep);
  sweep->add_option("--param", param, "Config key to vary, e.g. lambda")->required();
  sweep->add_option("--values", values, "Values to try")->required()->delimiter(',');

  SynthSpec spec;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "Write a planted-partition dataset");
  synth->add_option("--n", spec.n_users, "Users");
  synth->add_option("--blocks", spec.n_blocks, "Blocks (one community each)");
  synth->add_option("--p-in", spec.p_in, "Edge probability inside a block");
  synth->add_option("--p-out", spec.p_out, "Edge probability across blocks");
  synth->add_option("--memberships-per-user", spec.memberships_per_user, "Communities per user");
  synth->add_option("--seed", spec.seed, "Random seed");
  synth->add_option("--out", synth_out, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*stats) return run_stats(data, samples, sample_seed);
    if (*train) return run_train(data, options, ks, out);
    if (*evaluate_cmd) return run_evaluate(data, checkpoint, ks);
    if (*cv) return run_cross_validate(data, options, folds, ks);
    if (*ablate) return run_ablate(data, options, ks);
    if (*sweep) return run_sweep(data, options, param, values, ks);
    if (*synth) return run_synth(spec, synth_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
