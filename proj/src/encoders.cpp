#include "caso/encoders.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>
#include <string>

namespace caso {

NscMeasure parse_measure(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "cn") return NscMeasure::CN;
  if (lower == "aai") return NscMeasure::AAI;
  if (lower == "rai") return NscMeasure::RAI;
  if (lower == "si") return NscMeasure::SI;
  if (lower == "lhni") return NscMeasure::LHNI;
  throw std::invalid_argument("unknown closeness measure: " + std::string(name));
}

std::string_view measure_name(NscMeasure measure) {
  switch (measure) {
    case NscMeasure::CN: return "cn";
    case NscMeasure::AAI: return "aai";
    case NscMeasure::RAI: return "rai";
    case NscMeasure::SI: return "si";
    case NscMeasure::LHNI: return "lhni";
  }
  return "rai";
}

namespace {

double propagation_ratio(double alpha) {
  if (!(alpha >= 0.0)) throw std::domain_error("alpha must be non-negative");
  if (alpha >= 1.0 / 3.0) throw std::domain_error("series divergence risk");
  return alpha / (1.0 - alpha);
}

}  // namespace

EmbeddingMatrix smm_encode(const LinearOperator& modularity, const EmbeddingMatrix& u0, double alpha, Index steps) {
  const double ratio = propagation_ratio(alpha);
  if (steps < 0) throw std::invalid_argument("negative propagation steps");
  EmbeddingMatrix term = u0;
  EmbeddingMatrix total = u0;
  for (Index t = 1; t <= steps; ++t) {
    term = ratio * modularity.apply(term);
    total += term;
  }
  return total;
}

EmbeddingMatrix smm_encode_transpose(const LinearOperator& modularity, const EmbeddingMatrix& grad, double alpha,
                                     Index steps) {
  const double ratio = propagation_ratio(alpha);
  if (steps < 0) throw std::invalid_argument("negative propagation steps");
  EmbeddingMatrix term = grad;
  EmbeddingMatrix total = grad;
  for (Index t = 1; t <= steps; ++t) {
    term = ratio * modularity.apply_transpose(term);
    total += term;
  }
  return total;
}

LinearOperator nsc_feature_map(const SocialGraph& graph, NscMeasure measure) {
  const Index n = graph.n_users();
  const Vector& d = graph.degrees();
  Vector column_scale = Vector::Ones(n);
  Vector row_scale = Vector::Ones(n);
  for (Index i = 0; i < n; ++i) {
    switch (measure) {
      case NscMeasure::CN:
        break;
      case NscMeasure::AAI:
        column_scale[i] = d[i] > 1.0 ? 1.0 / std::sqrt(std::log(d[i])) : 0.0;
        break;
      case NscMeasure::RAI:
        column_scale[i] = d[i] > 0.0 ? 1.0 / std::sqrt(d[i]) : 0.0;
        break;
      case NscMeasure::SI:
        row_scale[i] = d[i] > 0.0 ? 1.0 / std::sqrt(d[i]) : 0.0;
        break;
      case NscMeasure::LHNI:
        row_scale[i] = d[i] > 0.0 ? 1.0 / d[i] : 0.0;
        break;
    }
  }
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(graph.column_indices().size());
  for (Index i = 0; i < n; ++i) {
    for (Index j : graph.neighbors(i)) {
      const double value = row_scale[i] * column_scale[j];
      if (value != 0.0) triplets.emplace_back(i, j, value);
    }
  }
  SparseMatrix fa(n, n);
  fa.setFromTriplets(triplets.begin(), triplets.end());
  return LinearOperator(std::move(fa));
}

Vector inverse_degree(const SocialGraph& graph) {
  return graph.degrees().unaryExpr([](double d) { return d > 0.0 ? 1.0 / d : 0.0; });
}

EmbeddingMatrix sca_encode(const SocialGraph& graph, const LinearOperator& feature_map, const EmbeddingMatrix& u0) {
  return sca_encode(inverse_degree(graph), feature_map, u0);
}

EmbeddingMatrix sca_encode(const Vector& row_scale, const LinearOperator& feature_map, const EmbeddingMatrix& u0) {
  EmbeddingMatrix out = feature_map.apply(feature_map.apply_transpose(u0));
  return row_scale.asDiagonal() * out;
}

EmbeddingMatrix sca_encode_transpose(const Vector& row_scale, const LinearOperator& feature_map,
                                     const EmbeddingMatrix& grad) {
  const EmbeddingMatrix scaled = row_scale.asDiagonal() * grad;
  return feature_map.apply(feature_map.apply_transpose(scaled));
}

LinearOperator build_yhat(const MembershipNetwork& memberships) {
  const Index total = memberships.n_memberships();
  if (total == 0) throw std::invalid_argument("empty membership network");
  const Vector& delta = memberships.user_degrees();
  const Vector& sigma = memberships.community_sizes();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(total));
  for (Index i = 0; i < memberships.n_users(); ++i) {
    for (Index k : memberships.communities_of(i)) {
      triplets.emplace_back(i, k, 1.0 / std::sqrt(delta[i] * sigma[k]));
    }
  }
  SparseMatrix normalized(memberships.n_users(), memberships.n_communities());
  normalized.setFromTriplets(triplets.begin(), triplets.end());
  std::vector<LowRankTerm> bias{{-1.0 / static_cast<double>(total), delta.cwiseSqrt(), sigma.cwiseSqrt()}};
  return LinearOperator(std::move(normalized), std::move(bias));
}

EmbeddingMatrix uce_encode(const LinearOperator& yhat, const EmbeddingMatrix& u0) {
  return yhat.apply(yhat.apply_transpose(u0));
}

EncoderOperators EncoderOperators::build(const SocialGraph& graph, const MembershipNetwork& train,
                                         NscMeasure measure) {
  if (graph.n_users() != train.n_users()) throw std::invalid_argument("graph and memberships disagree on user count");
  EncoderOperators ops;
  ops.smm_operator = modularity_operator(graph);
  ops.sca_fa = nsc_feature_map(graph, measure);
  ops.sca_scale = inverse_degree(graph);
  ops.yhat = build_yhat(train);
  return ops;
}

}  // namespace caso
