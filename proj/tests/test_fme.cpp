#include <cmath>
#include <stdexcept>

#include "caso/fme.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace caso;
using caso::testing::random_matrix;
using caso::testing::relative_frobenius;

namespace {

// Simultaneous updates on inputs that are already normalized.
FmeResult iterate(const Matrix& s0, const Matrix& x0, double lambda, Index iterations) {
  Matrix s = s0;
  Matrix x = x0;
  for (Index i = 0; i < iterations; ++i) {
    const Matrix cross = x.transpose() * s;  // d x d
    const Matrix s_next = s0 - lambda * x * cross;
    const Matrix x_next = x0 - lambda * s * cross.transpose();
    s = s_next;
    x = x_next;
  }
  return {s, x};
}

Matrix normalize_by(const Matrix& m, const Vector& norms) {
  Matrix out = m;
  for (Index i = 0; i < m.rows(); ++i) {
    if (norms[i] > 0.0) out.row(i) /= norms[i];
  }
  return out;
}

double probe(const FmeResult& r, const Matrix& gs, const Matrix& gx) {
  return r.s.cwiseProduct(gs).sum() + r.x.cwiseProduct(gx).sum();
}

}  // namespace

TEST_CASE("row_normalize gives unit rows and keeps zero rows") {
  Matrix m = random_matrix(5, 3, 1);
  m.row(2).setZero();
  const Matrix n = row_normalize(m);
  for (Index i = 0; i < 5; ++i) CHECK(n.row(i).norm() == doctest::Approx(i == 2 ? 0.0 : 1.0));
}

TEST_CASE("simplified HSIC equals trace(S^T X X^T S)") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Matrix s = random_matrix(30, 6, seed);
    const Matrix x = random_matrix(30, 6, 100 + seed);
    const double trace = (s.transpose() * x * x.transpose() * s).trace();
    CHECK(hsic_simplified(s, x) == doctest::Approx(trace).epsilon(1e-12));
  }
}

TEST_CASE("centered HSIC reduces to the simplified form on centered columns") {
  Matrix s = random_matrix(12, 3, 4);
  Matrix x = random_matrix(12, 3, 5);
  s.rowwise() -= s.colwise().mean();
  x.rowwise() -= x.colwise().mean();
  CHECK(hsic_centered_oracle(s, x) == doctest::Approx(hsic_simplified(s, x) / (11.0 * 11.0)).epsilon(1e-12));
  CHECK_THROWS_AS(hsic_centered_oracle(s.topRows(1), x.topRows(1)), std::invalid_argument);
}

TEST_CASE("fme_update normalizes once and applies simultaneous updates") {
  const Matrix s0 = random_matrix(10, 4, 1);
  const Matrix x0 = random_matrix(10, 4, 2);
  for (Index iterations : {0, 1, 3}) {
    const FmeResult expected = iterate(row_normalize(s0), row_normalize(x0), 0.05, iterations);
    const FmeResult got = fme_update(s0, x0, {0.05, iterations});
    CHECK(relative_frobenius(got.s, expected.s) < 1e-13);
    CHECK(relative_frobenius(got.x, expected.x) < 1e-13);
  }
  CHECK_THROWS_AS(fme_update(s0, x0.topRows(9), {0.01, 1}), std::invalid_argument);
}

TEST_CASE("one FME step with small lambda does not increase HSIC") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Matrix s0 = random_matrix(40, 8, seed);
    const Matrix x0 = random_matrix(40, 8, 1000 + seed);
    const double before = hsic_simplified(row_normalize(s0), row_normalize(x0));
    const FmeResult r = fme_update(s0, x0, {0.01, 1});
    CHECK(hsic_simplified(r.s, r.x) <= before);
  }
}

TEST_CASE("fme_backward matches central differences") {
  const Matrix s0 = random_matrix(6, 3, 11);
  const Matrix x0 = random_matrix(6, 3, 12);
  const Matrix gs = random_matrix(6, 3, 13);
  const Matrix gx = random_matrix(6, 3, 14);
  const double h = 1e-6;
  for (Index iterations : {1, 2}) {
    const FmeConfig cfg{0.2, iterations};
    FmeTape tape;
    fme_update(s0, x0, cfg, &tape);
    const FmeResult grad = fme_backward(tape, gs, gx);
    for (Index i = 0; i < 6; ++i) {
      for (Index j = 0; j < 3; ++j) {
        Matrix sp = s0, sm = s0, xp = x0, xm = x0;
        sp(i, j) += h;
        sm(i, j) -= h;
        xp(i, j) += h;
        xm(i, j) -= h;
        const double ds = (probe(fme_update(sp, x0, cfg), gs, gx) - probe(fme_update(sm, x0, cfg), gs, gx)) / (2 * h);
        const double dx = (probe(fme_update(s0, xp, cfg), gs, gx) - probe(fme_update(s0, xm, cfg), gs, gx)) / (2 * h);
        CHECK(grad.s(i, j) == doctest::Approx(ds).epsilon(1e-6));
        CHECK(grad.x(i, j) == doctest::Approx(dx).epsilon(1e-6));
      }
    }
  }
}

TEST_CASE("stop-gradient treats the row norms as constants") {
  const Matrix s0 = random_matrix(5, 3, 21);
  const Matrix x0 = random_matrix(5, 3, 22);
  const Matrix gs = random_matrix(5, 3, 23);
  const Matrix gx = random_matrix(5, 3, 24);
  const FmeConfig cfg{0.1, 2};
  FmeTape tape;
  fme_update(s0, x0, cfg, &tape);
  const FmeResult grad = fme_backward(tape, gs, gx, true);
  const Vector s_norms = s0.rowwise().norm();
  const Vector x_norms = x0.rowwise().norm();
  auto frozen = [&](const Matrix& s, const Matrix& x) {
    return probe(iterate(normalize_by(s, s_norms), normalize_by(x, x_norms), cfg.lambda, cfg.iterations), gs, gx);
  };
  const double h = 1e-6;
  for (Index i = 0; i < 5; ++i) {
    for (Index j = 0; j < 3; ++j) {
      Matrix sp = s0, sm = s0;
      sp(i, j) += h;
      sm(i, j) -= h;
      CHECK(grad.s(i, j) == doctest::Approx((frozen(sp, x0) - frozen(sm, x0)) / (2 * h)).epsilon(1e-6));
    }
  }
}

TEST_CASE("hand-computed FME examples") {
  Matrix row(1, 2);
  row << 3.0, 4.0;
  CHECK(row_normalize(row)(0, 0) == doctest::Approx(0.6));
  CHECK(row_normalize(row)(0, 1) == doctest::Approx(0.8));

  Matrix s(4, 2);
  Matrix x(4, 2);
  s << 1, 0, 0, 1, 0, 0, 0, 0;
  x << 0, 0, 0, 0, 1, 0, 0, 1;
  CHECK(hsic_simplified(s, x) == 0.0);
  CHECK(hsic_simplified(s, s) == doctest::Approx(2.0));

  Matrix s1(1, 2);
  Matrix x1(1, 2);
  s1 << 1.0, 0.0;
  x1 << 0.0, 1.0;
  const FmeResult one = fme_update(s1, x1, {0.1, 1});
  CHECK(one.s(0, 0) == doctest::Approx(0.9));
  CHECK(one.s(0, 1) == doctest::Approx(0.0));

  const Matrix a = random_matrix(6, 3, 1);
  const Matrix b = random_matrix(6, 3, 2);
  const FmeResult frozen = fme_update(a, b, {0.0, 1});
  CHECK(frozen.s == row_normalize(a));
  CHECK(frozen.x == row_normalize(b));
}

TEST_CASE("FME is symmetric in its arguments and HSIC in its inputs") {
  const Matrix a = random_matrix(8, 3, 3);
  const Matrix b = random_matrix(8, 3, 4);
  const FmeResult ab = fme_update(a, b, {0.3, 2});
  const FmeResult ba = fme_update(b, a, {0.3, 2});
  CHECK(ab.s == ba.x);
  CHECK(ab.x == ba.s);
  CHECK(hsic_simplified(a, b) == hsic_simplified(b, a));
}

TEST_CASE("centered HSIC oracle") {
  Matrix s = random_matrix(5, 2, 7);
  Matrix x = random_matrix(5, 2, 8);
  double naive = 0.0;
  const double n = 5.0;
  auto centered = [&](const Matrix& m, Index i, Index j) {
    double total = 0.0;
    for (Index a = 0; a < 5; ++a) {
      for (Index b = 0; b < 5; ++b) {
        const double ei = (i == a ? 1.0 : 0.0) - 1.0 / n;
        const double ej = (b == j ? 1.0 : 0.0) - 1.0 / n;
        total += ei * m.row(a).dot(m.row(b)) * ej;
      }
    }
    return total;
  };
  for (Index i = 0; i < 5; ++i) {
    for (Index j = 0; j < 5; ++j) naive += centered(s, i, j) * centered(x, j, i);
  }
  CHECK(hsic_centered_oracle(s, x) == doctest::Approx(naive / 16.0).epsilon(1e-10));

  const Matrix flat = Matrix::Ones(6, 3);
  CHECK(std::abs(hsic_centered_oracle(flat, random_matrix(6, 3, 9))) < 1e-12);
  CHECK(hsic_centered_oracle(random_matrix(500, 2, 10), random_matrix(500, 2, 11)) < 0.05);
}
