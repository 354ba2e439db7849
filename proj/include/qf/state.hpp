#pragma once

#include <array>
#include <optional>

#include "qf/basis.hpp"
#include "qf/operator.hpp"

namespace qf {

// Two-qubit bipartite density operator, Alice on qubit 1, Bob on qubit 2.
// Marginals are always cached. Maximal correlation, aligned bases and the
// correlation coefficients c0..c3 exist only when both marginals are id/2;
// their accessors throw unsupported_state_error otherwise.
class BipartiteState {
 public:
  explicit BipartiteState(DensityOperator rho);

  const DensityOperator& density() const { return rho_; }
  const cmat& marginal_a() const { return psi_a_; }
  const cmat& marginal_b() const { return psi_b_; }
  bool maximally_mixed() const { return mm_; }

  double maximal_correlation() const;
  const StandardBasis& aligned_basis_a() const;
  const StandardBasis& aligned_basis_b() const;
  // c0 = 1 >= c1 >= c2 >= c3 >= 0; c1 equals the maximal correlation.
  const std::array<double, 4>& correlation_coeffs() const;

 private:
  void require_mm() const;

  DensityOperator rho_;
  cmat psi_a_, psi_b_;
  bool mm_;
  std::optional<StandardBasis> basis_a_, basis_b_;
  std::array<double, 4> c_{1.0, 0.0, 0.0, 0.0};
};

// Maximally mixed marginals and maximal correlation strictly below 1.
class NoisyEprState {
 public:
  explicit NoisyEprState(BipartiteState base);
  const BipartiteState& base() const { return base_; }
  double rho() const { return base_.maximal_correlation(); }

 private:
  BipartiteState base_;
};

// (1-eps)|Phi><Phi| + eps*(id/2 x id/2); maximal correlation 1-eps.
NoisyEprState depolarized_epr(double epsilon);

// Entries Tr((A_i x B_j) psi), real for Hermitian basis elements.
rmat correlation_matrix(const BipartiteState& psi, const StandardBasis& basis_a,
                        const StandardBasis& basis_b);

double maximal_correlation(const BipartiteState& psi);

struct AlignedBases {
  StandardBasis a;
  StandardBasis b;
  std::array<double, 4> c;
};
AlignedBases aligned_bases(const BipartiteState& psi);

}  // namespace qf
