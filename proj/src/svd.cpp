#include "gsr/svd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/QR>

#include "gsr/errors.hpp"

namespace gsr {

namespace {

constexpr int max_sweeps = 80;

// Right-rotates the columns of `b` until they are mutually orthogonal;
// `v` accumulates the rotations, so b_in * v == b_out.
void orthogonalize_columns(Eigen::MatrixXd &b, Eigen::MatrixXd &v)
{
  Eigen::Index const n = b.cols();
  double const tol = static_cast<double>(std::max<Eigen::Index>(n, 1)) * std::numeric_limits<double>::epsilon();

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    bool rotated = false;
    for (Eigen::Index p = 0; p + 1 < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        double const alpha = b.col(p).squaredNorm();
        double const beta = b.col(q).squaredNorm();
        double const gamma = b.col(p).dot(b.col(q));
        if (alpha == 0.0 || beta == 0.0 || std::abs(gamma) <= tol * std::sqrt(alpha * beta)) { continue; }
        rotated = true;

        double const zeta = (beta - alpha) / (2.0 * gamma);
        double const t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::hypot(1.0, zeta));
        double const c = 1.0 / std::sqrt(1.0 + t * t);
        double const s = c * t;
        for (Eigen::Index k = 0; k < b.rows(); ++k) {
          double const bp = b(k, p);
          double const bq = b(k, q);
          b(k, p) = c * bp - s * bq;
          b(k, q) = s * bp + c * bq;
        }
        for (Eigen::Index k = 0; k < v.rows(); ++k) {
          double const vp = v(k, p);
          double const vq = v(k, q);
          v(k, p) = c * vp - s * vq;
          v(k, q) = s * vp + c * vq;
        }
      }
    }
    if (!rotated) { return; }
  }
}

// Replaces the columns of the square matrix `u` not flagged in `good` with
// unit vectors orthogonal to every other column.
void complete_basis(Eigen::MatrixXd &u, std::vector<bool> &good)
{
  Eigen::Index const n = u.rows();
  for (Eigen::Index j = 0; j < u.cols(); ++j) {
    if (good[static_cast<std::size_t>(j)]) { continue; }
    Eigen::VectorXd best;
    double best_norm = -1.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::VectorXd cand = Eigen::VectorXd::Unit(n, i);
      for (int pass = 0; pass < 2; ++pass) {
        for (Eigen::Index k = 0; k < u.cols(); ++k) {
          if (good[static_cast<std::size_t>(k)]) { cand -= u.col(k).dot(cand) * u.col(k); }
        }
      }
      double const norm = cand.norm();
      if (norm > best_norm) {
        best_norm = norm;
        best = std::move(cand);
      }
    }
    u.col(j) = best / best_norm;
    good[static_cast<std::size_t>(j)] = true;
  }
}

// SVD of a tall (rows >= cols) matrix.
SvdFactors svd_tall(Eigen::MatrixXd const &a)
{
  Eigen::Index const p = a.rows();
  Eigen::Index const q = a.cols();

  // a = Q R; the Jacobi sweeps then run on the small square R.
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd r = qr.matrixQR().topRows(q).triangularView<Eigen::Upper>();
  Eigen::MatrixXd const qthin = qr.householderQ() * Eigen::MatrixXd::Identity(p, q);

  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(q, q);
  orthogonalize_columns(r, v);

  Eigen::VectorXd norms(q);
  for (Eigen::Index j = 0; j < q; ++j) { norms[j] = r.col(j).norm(); }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(q));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) { return norms[i] > norms[j]; });

  SvdFactors out;
  out.sigma.resize(q);
  out.V.resize(q, q);
  Eigen::MatrixXd ur(q, q);
  double const top = q > 0 ? norms[order[0]] : 0.0;
  double const negligible = top * static_cast<double>(q) * 10.0 * std::numeric_limits<double>::epsilon();
  std::vector<bool> good(static_cast<std::size_t>(q));
  for (Eigen::Index j = 0; j < q; ++j) {
    auto const src = order[static_cast<std::size_t>(j)];
    out.sigma[j] = norms[src];
    out.V.col(j) = v.col(src);
    bool const ok = norms[src] > negligible && norms[src] > 0.0;
    good[static_cast<std::size_t>(j)] = ok;
    ur.col(j) = ok ? Eigen::VectorXd(r.col(src) / norms[src]) : Eigen::VectorXd::Zero(q);
  }
  complete_basis(ur, good);
  out.U = qthin * ur;
  return out;
}

void fix_signs(SvdFactors &f)
{
  for (Eigen::Index j = 0; j < f.U.cols(); ++j) {
    for (Eigen::Index i = 0; i < f.U.rows(); ++i) {
      double const x = f.U(i, j);
      if (std::abs(x) > 1e-10) {
        if (x < 0.0) {
          f.U.col(j) *= -1.0;
          f.V.col(j) *= -1.0;
        }
        break;
      }
    }
  }
}

} // namespace

SvdFactors svd_small(Eigen::MatrixXd const &m)
{
  if (!m.allFinite()) { throw DomainError("svd_small: matrix has non-finite entries"); }

  SvdFactors out;
  if (m.rows() == 0 || m.cols() == 0) {
    out.U.resize(m.rows(), 0);
    out.V.resize(m.cols(), 0);
    out.sigma.resize(0);
    return out;
  }
  if (m.rows() >= m.cols()) {
    out = svd_tall(m);
  } else {
    // m^T = U' S V'^T  =>  m = V' S U'^T
    auto t = svd_tall(m.transpose());
    out.U = std::move(t.V);
    out.V = std::move(t.U);
    out.sigma = std::move(t.sigma);
  }
  fix_signs(out);
  return out;
}

} // namespace gsr
