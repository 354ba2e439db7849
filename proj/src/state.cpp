#include "qf/state.hpp"

#include <Eigen/SVD>

namespace qf {

namespace {

// Kronecker with Alice on the low bit: index = a + 2b.
cmat kron_ab(const Eigen::Matrix2cd& a, const Eigen::Matrix2cd& b) {
  cmat out(4, 4);
  for (int rb = 0; rb < 2; ++rb)
    for (int ra = 0; ra < 2; ++ra)
      for (int cb = 0; cb < 2; ++cb)
        for (int ca = 0; ca < 2; ++ca)
          out(ra + 2 * rb, ca + 2 * cb) = a(ra, ca) * b(rb, cb);
  return out;
}

bool is_half_identity(const cmat& m) {
  return (m - 0.5 * cmat::Identity(2, 2)).cwiseAbs().maxCoeff() <= 1e-9;
}

rmat pauli_correlation(const cmat& rho) {
  const StandardBasis pauli = StandardBasis::pauli();
  rmat corr(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      corr(i, j) = (kron_ab(pauli.element(i), pauli.element(j)) * rho).trace().real();
  return corr;
}

}  // namespace

BipartiteState::BipartiteState(DensityOperator rho) : rho_(std::move(rho)) {
  if (rho_.n_qubits() != 2)
    throw argument_error("BipartiteState: density operator must live on 2 qubits");
  psi_a_ = partial_trace_raw(rho_.matrix(), 2, {1});
  psi_b_ = partial_trace_raw(rho_.matrix(), 2, {2});
  mm_ = is_half_identity(psi_a_) && is_half_identity(psi_b_);
  if (!mm_) return;

  const rmat corr = pauli_correlation(rho_.matrix());
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(corr.block(1, 1, 3, 3),
                                        Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d u = svd.matrixU();
  Eigen::Matrix3d v = svd.matrixV();
  // Deterministic representative: first nonzero entry of each u column made
  // positive, the paired v column flipped with it. Keeps u*S*v^T intact.
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) {
      if (std::abs(u(k, i)) <= 1e-12) continue;
      if (u(k, i) < 0) {
        u.col(i) = -u.col(i);
        v.col(i) = -v.col(i);
      }
      break;
    }
  basis_a_ = rotate_basis(StandardBasis::pauli(), u.transpose());
  basis_b_ = rotate_basis(StandardBasis::pauli(), v.transpose());
  for (int i = 0; i < 3; ++i) c_[i + 1] = svd.singularValues()[i];
}

void BipartiteState::require_mm() const {
  if (!mm_)
    throw unsupported_state_error(
        "BipartiteState: marginals are not maximally mixed");
}

double BipartiteState::maximal_correlation() const {
  require_mm();
  return c_[1];
}

const StandardBasis& BipartiteState::aligned_basis_a() const {
  require_mm();
  return *basis_a_;
}

const StandardBasis& BipartiteState::aligned_basis_b() const {
  require_mm();
  return *basis_b_;
}

const std::array<double, 4>& BipartiteState::correlation_coeffs() const {
  require_mm();
  return c_;
}

NoisyEprState::NoisyEprState(BipartiteState base) : base_(std::move(base)) {
  if (!base_.maximally_mixed())
    throw unsupported_state_error("NoisyEprState: marginals must be id/2");
  if (base_.maximal_correlation() >= 1.0 - 1e-9)
    throw argument_error("NoisyEprState: maximal correlation must be below 1");
}

NoisyEprState depolarized_epr(double epsilon) {
  if (!(epsilon > 0.0 && epsilon <= 1.0))
    throw argument_error("depolarized_epr: epsilon must lie in (0,1]");
  cmat m = cmat::Zero(4, 4);
  const double p = 0.5 * (1.0 - epsilon);
  m(0, 0) = m(0, 3) = m(3, 0) = m(3, 3) = p;
  m += (epsilon / 4.0) * cmat::Identity(4, 4);
  return NoisyEprState(BipartiteState(DensityOperator(HermitianOperator(m))));
}

rmat correlation_matrix(const BipartiteState& psi, const StandardBasis& basis_a,
                        const StandardBasis& basis_b) {
  rmat corr(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      corr(i, j) = (kron_ab(basis_a.element(i), basis_b.element(j)) *
                    psi.density().matrix())
                       .trace()
                       .real();
  return corr;
}

double maximal_correlation(const BipartiteState& psi) {
  return psi.maximal_correlation();
}

AlignedBases aligned_bases(const BipartiteState& psi) {
  return {psi.aligned_basis_a(), psi.aligned_basis_b(), psi.correlation_coeffs()};
}

}  // namespace qf
