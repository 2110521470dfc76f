#include "irltrack/jacobi.hpp"

#include <algorithm>
#include <cmath>

#include "irltrack/errors.hpp"

namespace irltrack {
namespace {

constexpr double kSymmetryTol = 1e-9;
constexpr double kOffDiagTol = 1e-10;
constexpr int kMaxSweeps = 100;

double off_diagonal_norm(const Eigen::MatrixXd& a) {
  double s = 0.0;
  for (Eigen::Index p = 0; p < a.rows(); ++p)
    for (Eigen::Index q = 0; q < a.cols(); ++q)
      if (p != q) s += a(p, q) * a(p, q);
  return std::sqrt(s);
}

}  // namespace

Eigen::VectorXd symmetric_eigenvalues(const Eigen::Ref<const Eigen::MatrixXd>& input) {
  if (input.rows() != input.cols()) throw DomainError("symmetric_eigenvalues: matrix is not square");
  if (!input.allFinite()) throw NumericalFailure("symmetric_eigenvalues: non-finite entry");
  const Eigen::Index n = input.rows();
  if (n == 0) return {};

  const double scale = std::max(1.0, input.cwiseAbs().maxCoeff());
  if ((input - input.transpose()).cwiseAbs().maxCoeff() > kSymmetryTol * scale)
    throw DomainError("symmetric_eigenvalues: matrix is not symmetric");

  // Work on the exactly symmetrized copy so rotations stay consistent.
  Eigen::MatrixXd a = 0.5 * (input + input.transpose());

  for (int sweep = 0; sweep < kMaxSweeps && off_diagonal_norm(a) > kOffDiagTol; ++sweep) {
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        // Rotation angle zeroing a(p,q); t is the smaller root of t^2 + 2 theta t - 1 = 0.
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        const double tau = s / (1.0 + c);

        a(p, p) -= t * apq;
        a(q, q) += t * apq;
        a(p, q) = a(q, p) = 0.0;
        for (Eigen::Index r = 0; r < n; ++r) {
          if (r == p || r == q) continue;
          const double arp = a(r, p);
          const double arq = a(r, q);
          a(r, p) = a(p, r) = arp - s * (arq + tau * arp);
          a(r, q) = a(q, r) = arq + s * (arp - tau * arq);
        }
      }
    }
  }

  Eigen::VectorXd eig = a.diagonal();
  std::sort(eig.data(), eig.data() + eig.size());
  return eig;
}

double min_eig_sym(const Eigen::Ref<const Eigen::MatrixXd>& a) {
  if (a.size() == 0) throw DomainError("min_eig_sym: empty matrix");
  return symmetric_eigenvalues(a)(0);
}

}  // namespace irltrack
