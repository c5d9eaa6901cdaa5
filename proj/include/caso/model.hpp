#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "caso/encoders.hpp"
#include "caso/fme.hpp"
#include "caso/graph.hpp"

namespace caso {

struct Ablations {
  bool no_smm = false;
  bool no_sca = false;
  bool no_uce = false;
  bool no_fme = false;
  bool no_kl = false;
};

/// per_step recomputes the encoder pipeline for every mini-batch; per_epoch
/// runs it once per epoch and takes one optimizer step on the accumulated
/// epoch gradient.
enum class PipelineMode { PerStep, PerEpoch };

struct TrainingConfig {
  double alpha = 0.33;
  double beta = 0.6;
  double gamma = 0.3;
  double lambda = 0.01;
  double theta = 0.05;
  double zeta = 1e-4;
  Index steps = 2;  // T
  Index dim = 64;
  double learning_rate = 0.01;
  Index batch_size = 2048;
  Index max_epochs = 1000;
  Index patience = 20;
  std::uint64_t seed = 0;
  NscMeasure measure = NscMeasure::RAI;
  Ablations ablations;
  PipelineMode mode = PipelineMode::PerStep;
  Index fme_iterations = 1;
  bool fme_stop_gradient = false;
  // Evaluation protocol.
  double train_frac = 0.8;
  double valid_frac = 0.125;
  Index validation_k = 5;

  /// Throws std::invalid_argument naming the first violated constraint.
  void validate() const;
};

struct AdamMoments {
  Matrix first;
  Matrix second;
};

struct ModelState {
  EmbeddingMatrix user_base;      // U0
  EmbeddingMatrix community_emb;  // C
  AdamMoments user_moments;
  AdamMoments community_moments;
  std::int64_t step = 0;
};

/// U0 and C i.i.d. N(0, 1/dim), zero optimizer moments.
ModelState init_state(Index n_users, Index n_communities, Index dim, std::uint64_t seed);

/// Intermediate values of one forward pass, needed by the backward pass.
struct ForwardCache {
  EmbeddingMatrix social;         // S after FME (or S0 when bypassed)
  EmbeddingMatrix collaborative;  // X after FME (or X0 when bypassed)
  EmbeddingMatrix users;          // U
  FmeTape fme;
};

/// Fusion weights after ablations are applied.
struct EffectiveWeights {
  double gamma = 0.0;
  double beta = 0.0;
  double theta = 0.0;
  bool use_smm = true;
  bool use_sca = true;
  bool use_uce = true;
  bool use_fme = true;
};
EffectiveWeights effective_weights(const TrainingConfig& cfg);

/// U = beta S + (1 - beta) X with (S, X) = FME(gamma G + (1 - gamma) L, X0).
EmbeddingMatrix forward(const EmbeddingMatrix& user_base, const EncoderOperators& ops, const TrainingConfig& cfg,
                        ForwardCache* cache = nullptr);
EmbeddingMatrix forward(const ModelState& state, const EncoderOperators& ops, const TrainingConfig& cfg,
                        ForwardCache* cache = nullptr);

/// Adjoint of forward: maps dLoss/dU to dLoss/dU0.
EmbeddingMatrix backward_pipeline(const ForwardCache& cache, const EncoderOperators& ops, const TrainingConfig& cfg,
                                  const EmbeddingMatrix& grad_users);

/// Inner products U_i . C_k for every community.
Vector predict_scores(const EmbeddingMatrix& users, const EmbeddingMatrix& communities, Index user);

struct TrainTriple {
  Index user = 0;
  Index positive = 0;
  Index negative = 0;
};

/// -sum ln sigmoid(y_pos - y_neg) + zeta (||U||^2 + ||C||^2).
double bpr_loss(const EmbeddingMatrix& users, const EmbeddingMatrix& communities, std::span<const TrainTriple> triples,
                double zeta);

struct KlResult {
  double loss = 0.0;
  Index skipped = 0;  // users without memberships
};

/// sum_i sum_k p_ik log(p_ik / q_ik), p from normalized memberships and q
/// the Student-t soft assignment of U_i to the community embeddings.
KlResult kl_loss(const EmbeddingMatrix& users, const EmbeddingMatrix& communities, const MembershipNetwork& memberships,
                 std::span<const Index> batch_users);

/// Soft-assignment row q_i.
Vector soft_assignment(const EmbeddingMatrix& users, const EmbeddingMatrix& communities, Index user);

struct LossTerms {
  double bpr = 0.0;
  double kl = 0.0;
  double total = 0.0;
};

/// L_BPR + theta L_KL.
LossTerms joint_loss(const EmbeddingMatrix& users, const EmbeddingMatrix& communities,
                     const MembershipNetwork& memberships, std::span<const TrainTriple> triples,
                     std::span<const Index> kl_users, double zeta, double theta);

struct Gradients {
  EmbeddingMatrix user_base;
  EmbeddingMatrix community;
  LossTerms loss;
};

/// Joint loss and its gradient with respect to (U, C), no pipeline.
Gradients loss_gradients(const EmbeddingMatrix& users, const EmbeddingMatrix& communities,
                         const MembershipNetwork& memberships, std::span<const TrainTriple> triples,
                         std::span<const Index> kl_users, double zeta, double theta);

/// Full gradient of the joint loss with respect to U0 and C.
Gradients backward(const ModelState& state, const EncoderOperators& ops, const TrainingConfig& cfg,
                   const MembershipNetwork& train, std::span<const TrainTriple> triples,
                   std::span<const Index> kl_users);

/// Uniform draw from the communities the user has not joined.
/// Throws std::runtime_error("no negatives") when there are none.
Index sample_negative(const MembershipNetwork& train, Index user, std::mt19937_64& rng);

/// In-place Adam step (beta1 0.9, beta2 0.999, eps 1e-8).
void adam_step(ModelState& state, const Gradients& grads, double learning_rate);

struct EpochLog {
  Index epoch = 0;
  double loss = 0.0;
  double bpr = 0.0;
  double kl = 0.0;
  double valid_ndcg = 0.0;
};

struct FitResult {
  ModelState state;  // best validation state
  std::vector<EpochLog> log;
  Index best_epoch = 0;
  double best_valid_ndcg = 0.0;
  double initial_valid_ndcg = 0.0;
};

/// Trains on `train`, early-stopping on validation NDCG@validation_k.
/// Throws std::runtime_error on a non-finite loss.
FitResult fit(const SocialGraph& graph, const MembershipNetwork& train, const MembershipNetwork& validation,
              const TrainingConfig& cfg);

/// Fresh state through the same pipeline; used for chance-level baselines.
EmbeddingMatrix user_embeddings(const ModelState& state, const SocialGraph& graph, const MembershipNetwork& train,
                                const TrainingConfig& cfg);

}  // namespace caso
