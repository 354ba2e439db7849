#include "qf/channels.hpp"

namespace qf {

FourierExpansion noise_operator(const FourierExpansion& f, double rho) {
  if (!(rho >= 0.0 && rho <= 1.0))
    throw argument_error("noise_operator: rho must lie in [0,1]");
  const int n = f.n_qubits();
  rvec out = f.coeffs();
  for (std::int64_t s = 0; s < out.size(); ++s)
    out[s] *= int_pow(rho, FourierExpansion::sigma_weight(s, n));
  return FourierExpansion(n, f.basis(), std::move(out));
}

HermitianOperator lyapunov_solve(const HermitianOperator& p, const HermitianOperator& q) {
  if (p.n_qubits() != q.n_qubits())
    throw argument_error("lyapunov_solve: operand sizes differ");
  auto [d, u] = spectral_decomposition(p);
  for (Eigen::Index i = 0; i < d.size(); ++i)
    for (Eigen::Index j = i; j < d.size(); ++j)
      if (std::abs(d[i] + d[j]) <= 1e-12)
        throw singularity_error("lyapunov_solve: resonant spectrum");
  cmat qt = u.adjoint() * q.matrix() * u;
  for (Eigen::Index i = 0; i < d.size(); ++i)
    for (Eigen::Index j = 0; j < d.size(); ++j) qt(i, j) /= d[i] + d[j];
  return HermitianOperator(u * qt * u.adjoint());
}

HermitianOperator markov_superoperator(const BipartiteState& psi, const HermitianOperator& q) {
  if (q.n_qubits() != 1)
    throw argument_error("markov_superoperator: Q must be a single-qubit operator");
  // id x Q with Alice on the low bit of the 2-qubit state.
  cmat iq = cmat::Zero(4, 4);
  for (int rb = 0; rb < 2; ++rb)
    for (int ra = 0; ra < 2; ++ra)
      for (int cb = 0; cb < 2; ++cb)
        iq(ra + 2 * rb, ra + 2 * cb) = q.matrix()(rb, cb);
  const cmat r = 2.0 * partial_trace_raw(iq * psi.density().matrix(), 2, {1});
  return lyapunov_solve(HermitianOperator(psi.marginal_a()), HermitianOperator(r));
}

double correlation_value(const FourierExpansion& p, const FourierExpansion& q,
                         const BipartiteState& psi, int n_copies) {
  const int n = n_copies;
  if (p.n_qubits() != n || q.n_qubits() != n)
    throw argument_error("correlation_value: expansions must live on one qubit per copy");
  if (!p.basis().approx_equal(psi.aligned_basis_a()) ||
      !q.basis().approx_equal(psi.aligned_basis_b()))
    throw argument_error("correlation_value: expansions are not in the state's aligned bases");
  const std::array<double, 4>& c = psi.correlation_coeffs();
  double acc = 0.0;
  for (std::int64_t s = 0; s < p.coeffs().size(); ++s) {
    double w = p.coeff(s) * q.coeff(s);
    if (w == 0.0) continue;
    for (int i = 1; i <= n; ++i) w *= c[FourierExpansion::sigma_digit(s, i)];
    acc += w;
  }
  return acc;
}

double tsmooth_gamma(double rho, double epsilon, double c) {
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw argument_error("tsmooth_gamma: epsilon must lie in (0,1)");
  if (!(rho >= 0.0 && rho <= 1.0))
    throw argument_error("tsmooth_gamma: rho must lie in [0,1]");
  return c * (1.0 - rho) * epsilon / std::log(1.0 / epsilon);
}

}  // namespace qf
