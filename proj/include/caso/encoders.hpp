#pragma once

#include <string_view>

#include "caso/graph.hpp"
#include "caso/linear_operator.hpp"

namespace caso {

/// Neighborhood-based social closeness measures. Each one factors as
/// p(u_i, u_j) = f(A)_i . f(A)_j.
enum class NscMeasure { CN, AAI, RAI, SI, LHNI };

NscMeasure parse_measure(std::string_view name);  // case-insensitive; throws std::invalid_argument
std::string_view measure_name(NscMeasure measure);  // lower-case

/// Truncated modularity propagation
///   G = sum_{t=0..steps} (alpha / (1 - alpha))^t M^t U0,
/// evaluated incrementally with one operator application per step.
/// Requires 0 <= alpha < 1/3; throws std::domain_error otherwise.
EmbeddingMatrix smm_encode(const LinearOperator& modularity, const EmbeddingMatrix& u0, double alpha, Index steps);

/// Adjoint of smm_encode (same series with M^T).
EmbeddingMatrix smm_encode_transpose(const LinearOperator& modularity, const EmbeddingMatrix& grad, double alpha,
                                     Index steps);

/// f(A) for the chosen measure:
///   CN -> A, AAI -> A D_log^{-1/2}, RAI -> A D^{-1/2}, SI -> D^{-1/2} A, LHNI -> D^{-1} A.
/// For AAI, intermediate users with degree <= 1 get a zero column (1/ln d undefined).
LinearOperator nsc_feature_map(const SocialGraph& graph, NscMeasure measure);

/// Per-user 1/d_i, zero for isolated users.
Vector inverse_degree(const SocialGraph& graph);

/// L = D^{-1} f(A) (f(A)^T U0), evaluated right to left.
EmbeddingMatrix sca_encode(const SocialGraph& graph, const LinearOperator& feature_map, const EmbeddingMatrix& u0);
EmbeddingMatrix sca_encode(const Vector& row_scale, const LinearOperator& feature_map, const EmbeddingMatrix& u0);

/// Adjoint of sca_encode: f(A) f(A)^T D^{-1} grad.
EmbeddingMatrix sca_encode_transpose(const Vector& row_scale, const LinearOperator& feature_map,
                                     const EmbeddingMatrix& grad);

/// Yhat_{ik} = Y_{ik} / sqrt(delta_i sigma_k) - sqrt(delta_i / |Y|) sqrt(sigma_k / |Y|),
/// held as a sparse part plus the rank-one term (-1/|Y|, sqrt(delta), sqrt(sigma)).
/// Empty communities and users without memberships come out as zero columns/rows.
/// Throws std::invalid_argument("empty membership network") when |Y| = 0.
LinearOperator build_yhat(const MembershipNetwork& memberships);

/// X = Yhat (Yhat^T U0). Self-adjoint in U0.
EmbeddingMatrix uce_encode(const LinearOperator& yhat, const EmbeddingMatrix& u0);

/// Everything the encoders need for one fitted dataset.
struct EncoderOperators {
  LinearOperator smm_operator;
  LinearOperator sca_fa;
  Vector sca_scale;
  LinearOperator yhat;

  static EncoderOperators build(const SocialGraph& graph, const MembershipNetwork& train, NscMeasure measure);
  [[nodiscard]] Index n_users() const { return sca_fa.rows(); }
  [[nodiscard]] Index n_communities() const { return yhat.cols(); }
};

}  // namespace caso
