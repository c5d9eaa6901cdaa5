#pragma once

#include <vector>

#include "caso/types.hpp"

namespace caso {

struct FmeConfig {
  double lambda = 0.01;
  Index iterations = 1;
};

/// Scales every nonzero row to unit L2 norm; zero rows stay zero.
EmbeddingMatrix row_normalize(const EmbeddingMatrix& m);

/// ||S^T X||_F^2 via the d x d cross product.
double hsic_simplified(const EmbeddingMatrix& s, const EmbeddingMatrix& x);

/// Centered empirical HSIC with linear kernels,
/// trace(K_s E K_x E) / (n - 1)^2 with E = I - 11^T / n.
/// Forms the n x n Gram matrices; meant for small inputs. Throws for n < 2.
double hsic_centered_oracle(const EmbeddingMatrix& s, const EmbeddingMatrix& x);

struct FmeResult {
  EmbeddingMatrix s;
  EmbeddingMatrix x;
};

/// Intermediate values kept by the forward pass for fme_backward.
struct FmeTape {
  EmbeddingMatrix s_raw;
  EmbeddingMatrix x_raw;
  Vector s_norms;
  Vector x_norms;
  std::vector<EmbeddingMatrix> s_iterates;  // S^(0) .. S^(iterations - 1)
  std::vector<EmbeddingMatrix> x_iterates;
  double lambda = 0.0;
};

/// Row-normalizes the inputs once, then runs simultaneous updates
///   S^(i+1) = S0 - lambda X^(i) (X^(i)^T S^(i))
///   X^(i+1) = X0 - lambda S^(i) (S^(i)^T X^(i))
/// where both right-hand sides read iteration-i values.
FmeResult fme_update(const EmbeddingMatrix& s0, const EmbeddingMatrix& x0, const FmeConfig& cfg,
                     FmeTape* tape = nullptr);

/// Vector-Jacobian product of fme_update with respect to its raw inputs.
/// With stop_norm_gradient the row norms are treated as constants.
FmeResult fme_backward(const FmeTape& tape, const EmbeddingMatrix& grad_s, const EmbeddingMatrix& grad_x,
                       bool stop_norm_gradient = false);

}  // namespace caso
