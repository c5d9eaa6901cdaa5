#include "caso/linear_operator.hpp"

#include <stdexcept>
#include <utility>

namespace caso {

LinearOperator::LinearOperator(SparseMatrix sparse, std::vector<LowRankTerm> low_rank)
    : sparse_(std::move(sparse)), low_rank_(std::move(low_rank)) {
  sparse_.makeCompressed();
  for (const auto& term : low_rank_) {
    if (term.left.size() != rows() || term.right.size() != cols()) {
      throw std::invalid_argument("low-rank term does not match operator shape");
    }
  }
}

Matrix LinearOperator::apply(const Matrix& v) const {
  if (v.rows() != cols()) throw std::invalid_argument("operator apply: shape mismatch");
  Matrix out = sparse_ * v;
  for (const auto& term : low_rank_) {
    const Eigen::RowVectorXd projected = term.right.transpose() * v;
    out.noalias() += term.coeff * term.left * projected;
  }
  return out;
}

Matrix LinearOperator::apply_transpose(const Matrix& w) const {
  if (w.rows() != rows()) throw std::invalid_argument("operator apply_transpose: shape mismatch");
  Matrix out = sparse_.transpose() * w;
  for (const auto& term : low_rank_) {
    const Eigen::RowVectorXd projected = term.left.transpose() * w;
    out.noalias() += term.coeff * term.right * projected;
  }
  return out;
}

Matrix LinearOperator::densify() const {
  if (rows() > kMaxDenseDim || cols() > kMaxDenseDim) {
    throw std::length_error("densify is limited to operators of at most 64 x 64");
  }
  Matrix dense = Matrix(sparse_);
  for (const auto& term : low_rank_) dense.noalias() += term.coeff * term.left * term.right.transpose();
  return dense;
}

}  // namespace caso
