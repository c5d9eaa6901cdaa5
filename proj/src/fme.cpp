#include "caso/fme.hpp"

#include <stdexcept>

namespace caso {
namespace {

Vector row_norms(const EmbeddingMatrix& m) { return m.rowwise().norm(); }

EmbeddingMatrix scale_rows(const EmbeddingMatrix& m, const Vector& norms) {
  EmbeddingMatrix out = m;
  for (Index i = 0; i < m.rows(); ++i) {
    if (norms[i] > 0.0) {
      out.row(i) /= norms[i];
    } else {
      out.row(i).setZero();
    }
  }
  return out;
}

// d(r / ||r||) transposed, applied row-wise to grad.
EmbeddingMatrix normalize_backward(const EmbeddingMatrix& raw, const Vector& norms, const EmbeddingMatrix& grad,
                                   bool stop_norm_gradient) {
  EmbeddingMatrix out(raw.rows(), raw.cols());
  for (Index i = 0; i < raw.rows(); ++i) {
    if (norms[i] <= 0.0) {
      out.row(i).setZero();
      continue;
    }
    if (stop_norm_gradient) {
      out.row(i) = grad.row(i) / norms[i];
      continue;
    }
    const Eigen::RowVectorXd unit = raw.row(i) / norms[i];
    out.row(i) = (grad.row(i) - unit * unit.dot(grad.row(i))) / norms[i];
  }
  return out;
}

}  // namespace

EmbeddingMatrix row_normalize(const EmbeddingMatrix& m) { return scale_rows(m, row_norms(m)); }

double hsic_simplified(const EmbeddingMatrix& s, const EmbeddingMatrix& x) {
  if (s.rows() != x.rows()) throw std::invalid_argument("hsic: row count mismatch");
  const Matrix cross = s.transpose() * x;
  return cross.squaredNorm();
}

double hsic_centered_oracle(const EmbeddingMatrix& s, const EmbeddingMatrix& x) {
  if (s.rows() != x.rows()) throw std::invalid_argument("hsic: row count mismatch");
  const Index n = s.rows();
  if (n < 2) throw std::invalid_argument("centered hsic needs at least two rows");
  const Matrix ks = s * s.transpose();
  const Matrix kx = x * x.transpose();
  const Matrix centering = Matrix::Identity(n, n) - Matrix::Constant(n, n, 1.0 / static_cast<double>(n));
  const double nm1 = static_cast<double>(n - 1);
  return (ks * centering * kx * centering).trace() / (nm1 * nm1);
}

FmeResult fme_update(const EmbeddingMatrix& s0, const EmbeddingMatrix& x0, const FmeConfig& cfg, FmeTape* tape) {
  if (s0.rows() != x0.rows() || s0.cols() != x0.cols()) throw std::invalid_argument("fme: shape mismatch");
  if (cfg.iterations < 0) throw std::invalid_argument("fme: negative iteration count");
  const Vector s_norms = row_norms(s0);
  const Vector x_norms = row_norms(x0);
  const EmbeddingMatrix s_anchor = scale_rows(s0, s_norms);
  const EmbeddingMatrix x_anchor = scale_rows(x0, x_norms);
  if (tape != nullptr) {
    tape->s_raw = s0;
    tape->x_raw = x0;
    tape->s_norms = s_norms;
    tape->x_norms = x_norms;
    tape->s_iterates.clear();
    tape->x_iterates.clear();
    tape->lambda = cfg.lambda;
  }
  FmeResult cur{s_anchor, x_anchor};
  for (Index it = 0; it < cfg.iterations; ++it) {
    if (tape != nullptr) {
      tape->s_iterates.push_back(cur.s);
      tape->x_iterates.push_back(cur.x);
    }
    const Matrix xs = cur.x.transpose() * cur.s;  // d x d
    FmeResult next;
    next.s = s_anchor - cfg.lambda * (cur.x * xs);
    next.x = x_anchor - cfg.lambda * (cur.s * xs.transpose());
    cur = std::move(next);
  }
  return cur;
}

FmeResult fme_backward(const FmeTape& tape, const EmbeddingMatrix& grad_s, const EmbeddingMatrix& grad_x,
                       bool stop_norm_gradient) {
  const double lambda = tape.lambda;
  EmbeddingMatrix anchor_s = EmbeddingMatrix::Zero(grad_s.rows(), grad_s.cols());
  EmbeddingMatrix anchor_x = EmbeddingMatrix::Zero(grad_x.rows(), grad_x.cols());
  EmbeddingMatrix gs = grad_s;
  EmbeddingMatrix gx = grad_x;
  for (auto it = static_cast<Index>(tape.s_iterates.size()) - 1; it >= 0; --it) {
    const EmbeddingMatrix& s = tape.s_iterates[static_cast<std::size_t>(it)];
    const EmbeddingMatrix& x = tape.x_iterates[static_cast<std::size_t>(it)];
    anchor_s += gs;
    anchor_x += gx;
    const Matrix xs = x.transpose() * s;   // S update used X (X^T S)
    const Matrix x_gs = x.transpose() * gs;
    const Matrix s_gx = s.transpose() * gx;
    EmbeddingMatrix prev_s = -lambda * (x * x_gs + gx * xs + x * s_gx.transpose());
    EmbeddingMatrix prev_x = -lambda * (s * s_gx + gs * xs.transpose() + s * x_gs.transpose());
    gs = std::move(prev_s);
    gx = std::move(prev_x);
  }
  anchor_s += gs;
  anchor_x += gx;
  return {normalize_backward(tape.s_raw, tape.s_norms, anchor_s, stop_norm_gradient),
          normalize_backward(tape.x_raw, tape.x_norms, anchor_x, stop_norm_gradient)};
}

}  // namespace caso
