#pragma once

#include <vector>

#include "caso/types.hpp"

namespace caso {

/// One rank-one correction coeff * left * right^T.
struct LowRankTerm {
  double coeff = 0.0;
  Vector left;
  Vector right;
};

/// Sparse matrix plus a sum of rank-one corrections, applied lazily.
///
/// apply(V)           = S V   + sum_t c_t a_t (b_t^T V)
/// apply_transpose(W) = S^T W + sum_t c_t b_t (a_t^T W)
///
/// The dense rows x cols matrix is never formed except through densify(),
/// which exists for small test oracles only.
class LinearOperator {
 public:
  static constexpr Index kMaxDenseDim = 64;

  LinearOperator() = default;
  explicit LinearOperator(SparseMatrix sparse, std::vector<LowRankTerm> low_rank = {});

  [[nodiscard]] Index rows() const { return sparse_.rows(); }
  [[nodiscard]] Index cols() const { return sparse_.cols(); }
  [[nodiscard]] const SparseMatrix& sparse_part() const { return sparse_; }
  [[nodiscard]] const std::vector<LowRankTerm>& low_rank_parts() const { return low_rank_; }

  [[nodiscard]] Matrix apply(const Matrix& v) const;
  [[nodiscard]] Matrix apply_transpose(const Matrix& w) const;

  /// Throws std::length_error when either dimension exceeds kMaxDenseDim.
  [[nodiscard]] Matrix densify() const;

 private:
  SparseMatrix sparse_;
  std::vector<LowRankTerm> low_rank_;
};

}  // namespace caso
