#include "caso/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "caso/eval.hpp"

namespace caso {

void TrainingConfig::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument(what); };
  if (!(alpha >= 0.0 && alpha < 1.0 / 3.0)) fail("alpha must lie in [0, 1/3)");
  if (!(beta >= 0.0 && beta <= 1.0)) fail("beta must lie in [0, 1]");
  if (!(gamma >= 0.0 && gamma <= 1.0)) fail("gamma must lie in [0, 1]");
  if (!(lambda >= 0.0 && lambda <= 1.0)) fail("lambda must lie in [0, 1]");
  if (!(theta >= 0.0)) fail("theta must be non-negative");
  if (!(zeta >= 0.0)) fail("zeta must be non-negative");
  if (steps < 0) fail("T must be non-negative");
  if (dim < 1) fail("dim must be positive");
  if (!(learning_rate >= 0.0)) fail("learning_rate must be non-negative");
  if (batch_size < 1) fail("batch_size must be positive");
  if (max_epochs < 0) fail("max_epochs must be non-negative");
  if (patience < 1) fail("patience must be positive");
  if (fme_iterations < 0) fail("fme_iterations must be non-negative");
  if (!(train_frac > 0.0 && train_frac <= 1.0)) fail("train_frac must lie in (0, 1]");
  if (!(valid_frac >= 0.0 && valid_frac < 1.0)) fail("valid_frac must lie in [0, 1)");
  if (validation_k < 1) fail("validation_k must be positive");
}

ModelState init_state(Index n_users, Index n_communities, Index dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(dim)));
  ModelState state;
  state.user_base = EmbeddingMatrix::NullaryExpr(n_users, dim, [&] { return normal(rng); });
  state.community_emb = EmbeddingMatrix::NullaryExpr(n_communities, dim, [&] { return normal(rng); });
  state.user_moments = {Matrix::Zero(n_users, dim), Matrix::Zero(n_users, dim)};
  state.community_moments = {Matrix::Zero(n_communities, dim), Matrix::Zero(n_communities, dim)};
  return state;
}

EffectiveWeights effective_weights(const TrainingConfig& cfg) {
  EffectiveWeights w;
  w.gamma = cfg.gamma;
  w.beta = cfg.beta;
  w.theta = cfg.theta;
  const Ablations& a = cfg.ablations;
  if (a.no_smm) {
    w.use_smm = false;
    w.gamma = 0.0;
  }
  if (a.no_sca) {
    w.use_sca = false;
    w.gamma = a.no_smm ? 0.0 : 1.0;
  }
  if (a.no_uce) {
    w.use_uce = false;
    w.beta = 1.0;
  }
  if (a.no_fme) w.use_fme = false;
  if (a.no_kl) w.theta = 0.0;
  return w;
}

EmbeddingMatrix forward(const EmbeddingMatrix& user_base, const EncoderOperators& ops, const TrainingConfig& cfg,
                        ForwardCache* cache) {
  if (user_base.rows() != ops.n_users()) throw std::invalid_argument("forward: user count mismatch");
  const EffectiveWeights w = effective_weights(cfg);
  const Index n = user_base.rows();
  const Index d = user_base.cols();

  EmbeddingMatrix social = EmbeddingMatrix::Zero(n, d);
  if (w.use_smm && w.gamma != 0.0) {
    social += w.gamma * smm_encode(ops.smm_operator, user_base, cfg.alpha, cfg.steps);
  }
  if (w.use_sca && w.gamma != 1.0) {
    social += (1.0 - w.gamma) * sca_encode(ops.sca_scale, ops.sca_fa, user_base);
  }
  EmbeddingMatrix collaborative =
      w.use_uce ? uce_encode(ops.yhat, user_base) : EmbeddingMatrix::Zero(n, d).eval();

  ForwardCache local;
  ForwardCache& c = cache != nullptr ? *cache : local;
  if (w.use_fme) {
    FmeResult refined = fme_update(social, collaborative, {cfg.lambda, cfg.fme_iterations}, &c.fme);
    c.social = std::move(refined.s);
    c.collaborative = std::move(refined.x);
  } else {
    c.social = std::move(social);
    c.collaborative = std::move(collaborative);
  }
  c.users = w.beta * c.social + (1.0 - w.beta) * c.collaborative;
  return c.users;
}

EmbeddingMatrix forward(const ModelState& state, const EncoderOperators& ops, const TrainingConfig& cfg,
                        ForwardCache* cache) {
  return forward(state.user_base, ops, cfg, cache);
}

EmbeddingMatrix backward_pipeline(const ForwardCache& cache, const EncoderOperators& ops, const TrainingConfig& cfg,
                                  const EmbeddingMatrix& grad_users) {
  const EffectiveWeights w = effective_weights(cfg);
  EmbeddingMatrix grad_social = w.beta * grad_users;
  EmbeddingMatrix grad_collab = (1.0 - w.beta) * grad_users;
  if (w.use_fme) {
    FmeResult g = fme_backward(cache.fme, grad_social, grad_collab, cfg.fme_stop_gradient);
    grad_social = std::move(g.s);
    grad_collab = std::move(g.x);
  }
  EmbeddingMatrix grad = EmbeddingMatrix::Zero(grad_users.rows(), grad_users.cols());
  if (w.use_smm && w.gamma != 0.0) {
    grad += w.gamma * smm_encode_transpose(ops.smm_operator, grad_social, cfg.alpha, cfg.steps);
  }
  if (w.use_sca && w.gamma != 1.0) {
    grad += (1.0 - w.gamma) * sca_encode_transpose(ops.sca_scale, ops.sca_fa, grad_social);
  }
  if (w.use_uce) grad += uce_encode(ops.yhat, grad_collab);
  return grad;
}

Vector predict_scores(const EmbeddingMatrix& users, const EmbeddingMatrix& communities, Index user) {
  return communities * users.row(user).transpose();
}

namespace {

// ln(1 + e^z) without overflow.
double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

std::vector<Index> unique_sorted(std::span<const Index> values) {
  std::vector<Index> out(values.begin(), values.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// Student-t kernel values w_k = (1 + ||u - c_k||^2)^-1 for one user.
Vector kernel_row(const EmbeddingMatrix& users, const EmbeddingMatrix& communities, Index user) {
  const Eigen::RowVectorXd u = users.row(user);
  Vector w(communities.rows());
  for (Index k = 0; k < communities.rows(); ++k) w[k] = 1.0 / (1.0 + (u - communities.row(k)).squaredNorm());
  return w;
}

void check_triple(const TrainTriple& t, Index n_users, Index n_communities) {
  if (t.user < 0 || t.user >= n_users || t.positive < 0 || t.positive >= n_communities || t.negative < 0 ||
      t.negative >= n_communities) {
    throw std::out_of_range("training triple out of range");
  }
}

}  // namespace

double bpr_loss(const EmbeddingMatrix& users, const EmbeddingMatrix& communities, std::span<const TrainTriple> triples,
                double zeta) {
  double loss = 0.0;
  for (const auto& t : triples) {
    check_triple(t, users.rows(), communities.rows());
    const double margin = users.row(t.user).dot(communities.row(t.positive) - communities.row(t.negative));
    loss += softplus(-margin);
  }
  return loss + zeta * (users.squaredNorm() + communities.squaredNorm());
}

Vector soft_assignment(const EmbeddingMatrix& users, const EmbeddingMatrix& communities, Index user) {
  Vector w = kernel_row(users, communities, user);
  return w / w.sum();
}

KlResult kl_loss(const EmbeddingMatrix& users, const EmbeddingMatrix& communities, const MembershipNetwork& memberships,
                 std::span<const Index> batch_users) {
  KlResult out;
  for (Index i : unique_sorted(batch_users)) {
    const auto joined = memberships.communities_of(i);
    if (joined.empty()) {
      ++out.skipped;
      continue;
    }
    const Vector q = soft_assignment(users, communities, i);
    const double p = 1.0 / static_cast<double>(joined.size());
    for (Index k : joined) out.loss += p * std::log(p / q[k]);
  }
  return out;
}

LossTerms joint_loss(const EmbeddingMatrix& users, const EmbeddingMatrix& communities,
                     const MembershipNetwork& memberships, std::span<const TrainTriple> triples,
                     std::span<const Index> kl_users, double zeta, double theta) {
  LossTerms terms;
  terms.bpr = bpr_loss(users, communities, triples, zeta);
  if (theta != 0.0) terms.kl = kl_loss(users, communities, memberships, kl_users).loss;
  terms.total = terms.bpr + theta * terms.kl;
  return terms;
}

Gradients loss_gradients(const EmbeddingMatrix& users, const EmbeddingMatrix& communities,
                         const MembershipNetwork& memberships, std::span<const TrainTriple> triples,
                         std::span<const Index> kl_users, double zeta, double theta) {
  Gradients g;
  g.user_base = 2.0 * zeta * users;
  g.community = 2.0 * zeta * communities;
  double bpr = 0.0;
  for (const auto& t : triples) {
    check_triple(t, users.rows(), communities.rows());
    const Eigen::RowVectorXd diff = communities.row(t.positive) - communities.row(t.negative);
    const double margin = users.row(t.user).dot(diff);
    bpr += softplus(-margin);
    const double coef = -sigmoid(-margin);
    g.community.row(t.positive) += coef * users.row(t.user);
    g.community.row(t.negative) -= coef * users.row(t.user);
    g.user_base.row(t.user) += coef * diff;
  }
  g.loss.bpr = bpr + zeta * (users.squaredNorm() + communities.squaredNorm());

  if (theta != 0.0) {
    double kl = 0.0;
    for (Index i : unique_sorted(kl_users)) {
      const auto joined = memberships.communities_of(i);
      if (joined.empty()) continue;
      const Vector w = kernel_row(users, communities, i);
      const Vector q = w / w.sum();
      const double p_joined = 1.0 / static_cast<double>(joined.size());
      Vector p = Vector::Zero(communities.rows());
      for (Index k : joined) {
        p[k] = p_joined;
        kl += p_joined * std::log(p_joined / q[k]);
      }
      // d/dU_i = 2 sum_k (p_k - q_k) w_k (U_i - C_k); C_k receives the negation.
      for (Index k = 0; k < communities.rows(); ++k) {
        const double coef = 2.0 * theta * (p[k] - q[k]) * w[k];
        const Eigen::RowVectorXd delta = users.row(i) - communities.row(k);
        g.user_base.row(i) += coef * delta;
        g.community.row(k) -= coef * delta;
      }
    }
    g.loss.kl = kl;
  }
  g.loss.total = g.loss.bpr + theta * g.loss.kl;
  return g;
}

Gradients backward(const ModelState& state, const EncoderOperators& ops, const TrainingConfig& cfg,
                   const MembershipNetwork& train, std::span<const TrainTriple> triples,
                   std::span<const Index> kl_users) {
  const EffectiveWeights w = effective_weights(cfg);
  ForwardCache cache;
  const EmbeddingMatrix users = forward(state.user_base, ops, cfg, &cache);
  Gradients g = loss_gradients(users, state.community_emb, train, triples, kl_users, cfg.zeta, w.theta);
  g.user_base = backward_pipeline(cache, ops, cfg, g.user_base);
  return g;
}

Index sample_negative(const MembershipNetwork& train, Index user, std::mt19937_64& rng) {
  const Index m = train.n_communities();
  const auto joined = train.communities_of(user);
  const auto taken = static_cast<Index>(joined.size());
  if (taken >= m) throw std::runtime_error("no negatives");
  if (2 * taken <= m) {
    std::uniform_int_distribution<Index> pick(0, m - 1);
    while (true) {
      const Index c = pick(rng);
      if (!std::binary_search(joined.begin(), joined.end(), c)) return c;
    }
  }
  // Dense users: draw the r-th free community directly.
  std::uniform_int_distribution<Index> pick(0, m - taken - 1);
  Index r = pick(rng);
  for (Index c = 0; c < m; ++c) {
    if (std::binary_search(joined.begin(), joined.end(), c)) continue;
    if (r-- == 0) return c;
  }
  throw std::logic_error("negative sampling fell through");
}

void adam_step(ModelState& state, const Gradients& grads, double learning_rate) {
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(kBeta1, t);
  const double correction2 = 1.0 - std::pow(kBeta2, t);
  auto update = [&](Matrix& param, AdamMoments& moments, const Matrix& grad) {
    moments.first = kBeta1 * moments.first + (1.0 - kBeta1) * grad;
    moments.second = kBeta2 * moments.second + (1.0 - kBeta2) * grad.cwiseProduct(grad);
    param.array() -= learning_rate * (moments.first.array() / correction1) /
                     ((moments.second.array() / correction2).sqrt() + kEps);
  };
  update(state.user_base, state.user_moments, grads.user_base);
  update(state.community_emb, state.community_moments, grads.community);
}

EmbeddingMatrix user_embeddings(const ModelState& state, const SocialGraph& graph, const MembershipNetwork& train,
                                const TrainingConfig& cfg) {
  const EncoderOperators ops = EncoderOperators::build(graph, train, cfg.measure);
  return forward(state, ops, cfg);
}

namespace {

double validation_ndcg(const EmbeddingMatrix& users, const EmbeddingMatrix& communities,
                       const MembershipNetwork& train, const MembershipNetwork& validation, Index k) {
  double total = 0.0;
  Index counted = 0;
  for (Index u = 0; u < validation.n_users(); ++u) {
    const auto held = validation.communities_of(u);
    if (held.empty()) continue;
    const auto top = top_k_candidates(predict_scores(users, communities, u), train.communities_of(u), k);
    total += ndcg_at_k(top, held, k);
    ++counted;
  }
  return counted > 0 ? total / static_cast<double>(counted) : 0.0;
}

bool finite(const LossTerms& loss) { return std::isfinite(loss.total); }

}  // namespace

FitResult fit(const SocialGraph& graph, const MembershipNetwork& train, const MembershipNetwork& validation,
              const TrainingConfig& cfg) {
  cfg.validate();
  if (train.n_users() != graph.n_users() || validation.n_users() != graph.n_users() ||
      validation.n_communities() != train.n_communities()) {
    throw std::invalid_argument("fit: dataset dimensions disagree");
  }
  for (Index u = 0; u < validation.n_users(); ++u) {
    for (Index c : validation.communities_of(u)) {
      if (train.contains(u, c)) throw std::invalid_argument("fit: train and validation memberships overlap");
    }
  }
  const EncoderOperators ops = EncoderOperators::build(graph, train, cfg.measure);
  const EffectiveWeights weights = effective_weights(cfg);
  ModelState state = init_state(graph.n_users(), train.n_communities(), cfg.dim, mix_seed(cfg.seed, 1));
  std::mt19937_64 rng(mix_seed(cfg.seed, 2));
  const bool has_validation = validation.n_memberships() > 0;

  std::vector<IndexPair> positives = train.pairs();
  std::vector<Index> kl_all;
  for (Index u = 0; u < train.n_users(); ++u) {
    if (train.user_degree(u) > 0) kl_all.push_back(u);
  }

  FitResult result;
  auto current_ndcg = [&]() {
    const EmbeddingMatrix users = forward(state, ops, cfg);
    return validation_ndcg(users, state.community_emb, train, validation, cfg.validation_k);
  };
  result.initial_valid_ndcg = has_validation ? current_ndcg() : 0.0;
  result.best_valid_ndcg = result.initial_valid_ndcg;
  result.state = state;
  Index since_best = 0;

  std::vector<TrainTriple> triples(positives.size());
  std::vector<Index> batch_users;
  for (Index epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::shuffle(positives.begin(), positives.end(), rng);
    for (std::size_t p = 0; p < positives.size(); ++p) {
      const auto [u, c] = positives[p];
      triples[p] = {u, c, sample_negative(train, u, rng)};
    }

    EpochLog entry;
    entry.epoch = epoch;
    if (cfg.mode == PipelineMode::PerStep) {
      for (std::size_t start = 0; start < triples.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
        const std::size_t len = std::min(static_cast<std::size_t>(cfg.batch_size), triples.size() - start);
        const std::span<const TrainTriple> batch(triples.data() + start, len);
        batch_users.clear();
        if (weights.theta != 0.0) {
          for (const auto& t : batch) batch_users.push_back(t.user);
        }
        const Gradients g = backward(state, ops, cfg, train, batch, batch_users);
        if (!finite(g.loss)) {
          throw std::runtime_error("non-finite loss at epoch " + std::to_string(epoch));
        }
        entry.loss += g.loss.total;
        entry.bpr += g.loss.bpr;
        entry.kl += g.loss.kl;
        adam_step(state, g, cfg.learning_rate);
      }
    } else {
      const std::span<const Index> kl_users = weights.theta != 0.0 ? std::span<const Index>(kl_all)
                                                                   : std::span<const Index>();
      const Gradients g = backward(state, ops, cfg, train, triples, kl_users);
      if (!finite(g.loss)) throw std::runtime_error("non-finite loss at epoch " + std::to_string(epoch));
      entry.loss = g.loss.total;
      entry.bpr = g.loss.bpr;
      entry.kl = g.loss.kl;
      adam_step(state, g, cfg.learning_rate);
    }

    if (has_validation) {
      entry.valid_ndcg = current_ndcg();
      if (entry.valid_ndcg > result.best_valid_ndcg) {
        result.best_valid_ndcg = entry.valid_ndcg;
        result.best_epoch = epoch;
        result.state = state;
        since_best = 0;
      } else {
        ++since_best;
      }
    } else {
      result.state = state;
      result.best_epoch = epoch;
    }
    result.log.push_back(entry);
    if (has_validation && since_best >= cfg.patience) break;
  }
  return result;
}

}  // namespace caso
