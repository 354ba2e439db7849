#include "qf/zeta.hpp"

namespace qf {

ZetaProfile::ZetaProfile(double l) : lambda(l) {
  if (l != 0.0 && !(l > 0.0 && l <= 0.5))
    throw argument_error("ZetaProfile: lambda must be 0 or in (0, 1/2]");
}

double zeta_scalar(double x, const ZetaProfile& profile) {
  const double l = profile.lambda;
  if (l == 0.0) {
    if (x <= 0.0) return x * x;
    if (x >= 1.0) return (x - 1.0) * (x - 1.0);
    return 0.0;
  }
  if (x <= -l) return x * x + l * l / 3.0;
  if (x <= l) {
    const double u = l - x;
    return u * u * u / (6.0 * l);
  }
  if (x <= 1.0 - l) return 0.0;
  if (x <= 1.0 + l) {
    const double u = x - 1.0 + l;
    return u * u * u / (6.0 * l);
  }
  return (x - 1.0) * (x - 1.0) + l * l / 3.0;
}

double zeta_scalar_d1(double x, const ZetaProfile& profile) {
  const double l = profile.lambda;
  if (l == 0.0) {
    if (x <= 0.0) return 2.0 * x;
    if (x >= 1.0) return 2.0 * (x - 1.0);
    return 0.0;
  }
  if (x <= -l) return 2.0 * x;
  if (x <= l) {
    const double u = l - x;
    return -u * u / (2.0 * l);
  }
  if (x <= 1.0 - l) return 0.0;
  if (x <= 1.0 + l) {
    const double u = x - 1.0 + l;
    return u * u / (2.0 * l);
  }
  return 2.0 * (x - 1.0);
}

double zeta_scalar_d2(double x, const ZetaProfile& profile) {
  const double l = profile.lambda;
  if (l == 0.0) throw domain_error("zeta_scalar_d2: exact profile is not twice differentiable");
  if (x <= -l) return 2.0;
  if (x <= l) return (l - x) / l;
  if (x <= 1.0 - l) return 0.0;
  if (x <= 1.0 + l) return (x - 1.0 + l) / l;
  return 2.0;
}

double zeta_scalar_d3(double x, const ZetaProfile& profile) {
  const double l = profile.lambda;
  if (l == 0.0) throw domain_error("zeta_scalar_d3: exact profile is not twice differentiable");
  if (x < -l) return 0.0;
  if (x < l) return -1.0 / l;
  if (x < 1.0 - l) return 0.0;
  if (x < 1.0 + l) return 1.0 / l;
  return 0.0;
}

double trace_zeta(const HermitianOperator& p, const ZetaProfile& profile) {
  Eigen::SelfAdjointEigenSolver<cmat> es(p.matrix(), Eigen::EigenvaluesOnly);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    acc += zeta_scalar(es.eigenvalues()[i], profile);
  return acc;
}

MeasurementOperator round_to_measurement(const HermitianOperator& p) {
  auto [vals, vecs] = spectral_decomposition(p);
  rvec clamped = vals.cwiseMax(0.0).cwiseMin(1.0);
  cmat out = vecs * clamped.asDiagonal() * vecs.adjoint();
  return MeasurementOperator(HermitianOperator(std::move(out)));
}

HermitianOperator ell_q(const HermitianOperator& p, const HermitianOperator& q) {
  if (p.n_qubits() != q.n_qubits()) throw argument_error("ell_q: operand sizes differ");
  auto [vals, vecs] = spectral_decomposition(p);
  if (vals.cwiseAbs().minCoeff() <= 1e-10)
    throw singularity_error("ell_q: P must be invertible");
  // In P's eigenbasis: X_ij = Q_ij (a_i + a_j) / (|a_i| + |a_j|).
  cmat qt = vecs.adjoint() * q.matrix() * vecs;
  for (Eigen::Index i = 0; i < vals.size(); ++i)
    for (Eigen::Index j = 0; j < vals.size(); ++j)
      qt(i, j) *= (vals[i] + vals[j]) / (std::abs(vals[i]) + std::abs(vals[j]));
  return HermitianOperator(vecs * qt * vecs.adjoint());
}

HermitianOperator kappa_q(const HermitianOperator& p, const HermitianOperator& q) {
  const cmat ell = ell_q(p, q).matrix();
  return HermitianOperator(p.matrix() * ell + ell * p.matrix());
}

namespace {

double trace_f(const std::function<double(double)>& f, const cmat& m) {
  Eigen::SelfAdjointEigenSolver<cmat> es(m, Eigen::EigenvaluesOnly);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) acc += f(es.eigenvalues()[i]);
  return acc;
}

double frobenius(const HermitianOperator& p) { return p.matrix().norm(); }

}  // namespace

double frechet_fd(const std::function<double(double)>& f, const HermitianOperator& p,
                  const HermitianOperator& q, int order, double step) {
  if (p.n_qubits() != q.n_qubits()) throw argument_error("frechet_fd: operand sizes differ");
  if (order < 1 || order > 3) throw argument_error("frechet_fd: order must be 1, 2 or 3");
  const double h = step > 0.0 ? step : 1e-4 * std::max(1.0, frobenius(q));
  const auto g = [&](double t) { return trace_f(f, p.matrix() + t * q.matrix()); };
  const auto stencil = [&](double s) {
    switch (order) {
      case 1:
        return (g(s) - g(-s)) / (2.0 * s);
      case 2:
        return (g(s) - 2.0 * g(0.0) + g(-s)) / (s * s);
      default:
        return (g(2.0 * s) - 2.0 * g(s) + 2.0 * g(-s) - g(-2.0 * s)) / (2.0 * s * s * s);
    }
  };
  // central stencils have O(s^2) error; one Richardson level cancels it
  return (4.0 * stencil(0.5 * h) - stencil(h)) / 3.0;
}

bool spectrum_clear_of_breakpoints(const HermitianOperator& p, double lambda, double margin) {
  Eigen::SelfAdjointEigenSolver<cmat> es(p.matrix(), Eigen::EigenvaluesOnly);
  const double marks[4] = {-lambda, lambda, 1.0 - lambda, 1.0 + lambda};
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    for (double m : marks)
      if (std::abs(es.eigenvalues()[i] - m) < margin) return false;
  return true;
}

RemainderReport taylor_remainder_check(const HermitianOperator& p, const HermitianOperator& q,
                                       double lambda, double constant, std::uint64_t seed) {
  if (!(lambda > 0.0 && lambda < 0.5))
    throw argument_error("taylor_remainder_check: lambda must lie in (0, 1/2)");
  const ZetaProfile profile(lambda);
  const auto f = [&](double x) { return zeta_scalar(x, profile); };
  const double g1 = trace_zeta(HermitianOperator(p.matrix() + q.matrix()), profile);
  const double g0 = trace_zeta(p, profile);
  const double d1 = frechet_fd(f, p, q, 1);
  const double d2 = frechet_fd(f, p, q, 2);
  const double lhs = std::abs(g1 - g0 - d1 - 0.5 * d2);
  const double q2 = frobenius(q);
  Eigen::SelfAdjointEigenSolver<cmat> es(q.matrix(), Eigen::EigenvaluesOnly);
  double quartic = 0.0;  // ||Q||_4^4
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    quartic += std::pow(es.eigenvalues()[i], 4.0);
  const double bound = constant * q2 * std::sqrt(quartic) / lambda;
  return {lhs, bound, constant, lhs <= bound, seed};
}

AdditivityReport zeta_additivity_check(const HermitianOperator& p, const HermitianOperator& q) {
  if (p.n_qubits() != q.n_qubits())
    throw argument_error("zeta_additivity_check: operand sizes differ");
  const ZetaProfile exact;
  const double lhs = std::abs(
      trace_zeta(HermitianOperator(p.matrix() + q.matrix()), exact) - trace_zeta(p, exact));
  const double p2 = frobenius(p), q2 = frobenius(q);
  const double bound = 4.0 * (p2 * q2 + q2 * q2);
  return {lhs, bound, lhs <= bound + 1e-9};
}

}  // namespace qf
