#include "ratecert/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace ratecert {

namespace {

double off_diag_norm(const Eigen::MatrixXd& a) {
  double s = 0.0;
  for (int p = 0; p < a.rows(); ++p)
    for (int q = 0; q < a.cols(); ++q)
      if (p != q) s += a(p, q) * a(p, q);
  return std::sqrt(s);
}

void canonicalize_sign(Eigen::MatrixXd& v) {
  for (int j = 0; j < v.cols(); ++j) {
    const double scale = v.col(j).cwiseAbs().maxCoeff();
    for (int i = 0; i < v.rows(); ++i) {
      if (std::abs(v(i, j)) > 1e-12 * scale) {
        if (v(i, j) < 0.0) v.col(j) = -v.col(j);
        break;
      }
    }
  }
}

}  // namespace

SymEig jacobi_eigen(const Eigen::MatrixXd& a_in) {
  if (a_in.rows() != a_in.cols())
    throw std::invalid_argument("jacobi_eigen: matrix must be square");
  const int n = static_cast<int>(a_in.rows());
  Eigen::MatrixXd a = symmetrize(a_in);
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
  const double scale = std::max(a.norm(), 1e-300);
  const double threshold = 1e-13 * scale;

  for (int sweep = 0; sweep < 100; ++sweep) {
    if (off_diag_norm(a) <= threshold) break;
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) <= 1e-300) continue;
        const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        // A <- J^T A J with J the (p,q) rotation.
        for (int k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (int k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  if (off_diag_norm(a) > 1e3 * threshold)
    throw std::runtime_error("jacobi_eigen: did not converge in 100 sweeps");

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int i, int j) { return a(i, i) < a(j, j); });
  SymEig out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (int j = 0; j < n; ++j) {
    out.values[j] = a(order[j], order[j]);
    out.vectors.col(j) = v.col(order[j]);
  }
  canonicalize_sign(out.vectors);
  return out;
}

Eigen::MatrixXd sym_sqrt(const Eigen::MatrixXd& a) { return sym_pow(a, 0.5); }

Eigen::MatrixXd sym_inverse(const Eigen::MatrixXd& a) {
  const SymEig e = jacobi_eigen(a);
  const double top = e.values.cwiseAbs().maxCoeff();
  Eigen::VectorXd inv(e.values.size());
  for (int i = 0; i < e.values.size(); ++i) {
    if (std::abs(e.values[i]) <= 1e-14 * std::max(top, 1e-300))
      throw std::domain_error("sym_inverse: singular matrix");
    inv[i] = 1.0 / e.values[i];
  }
  return e.vectors * inv.asDiagonal() * e.vectors.transpose();
}

Eigen::MatrixXd sym_pinv_sqrt(const Eigen::MatrixXd& a, double cutoff_rel) {
  const SymEig e = jacobi_eigen(a);
  const double top = e.values.maxCoeff();
  const double cutoff = cutoff_rel * std::max(top, 0.0);
  Eigen::VectorXd d(e.values.size());
  for (int i = 0; i < e.values.size(); ++i)
    d[i] = e.values[i] > cutoff ? 1.0 / std::sqrt(e.values[i]) : 0.0;
  return e.vectors * d.asDiagonal() * e.vectors.transpose();
}

Eigen::MatrixXd sym_pow(const Eigen::MatrixXd& a, double s) {
  const SymEig e = jacobi_eigen(a);
  Eigen::VectorXd d(e.values.size());
  for (int i = 0; i < e.values.size(); ++i) {
    const double ev = std::max(e.values[i], 0.0);
    if (ev == 0.0 && s < 0.0)
      throw std::domain_error("sym_pow: negative power of singular matrix");
    d[i] = std::pow(ev, s);
  }
  return e.vectors * d.asDiagonal() * e.vectors.transpose();
}

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& a) {
  return 0.5 * (a + a.transpose());
}

Eigen::VectorXd pack_square(const Eigen::MatrixXd& a) {
  return Eigen::Map<const Eigen::VectorXd>(a.data(), a.size());
}

Eigen::MatrixXd unpack_square(const Eigen::VectorXd& v) {
  const int n = static_cast<int>(std::llround(std::sqrt(double(v.size()))));
  if (n * n != v.size())
    throw std::invalid_argument("unpack_square: length is not a perfect square");
  return Eigen::Map<const Eigen::MatrixXd>(v.data(), n, n);
}

}  // namespace ratecert
