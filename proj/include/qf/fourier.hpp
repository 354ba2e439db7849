#pragma once

#include "qf/basis.hpp"
#include "qf/operator.hpp"

namespace qf {

// Coefficient table of an operator over tensor products B_sigma of a
// StandardBasis. sigma in {0,1,2,3}^n is packed base-4 little-endian:
// coordinate 1 is the least significant digit. Coefficients of a Hermitian
// operator in a Hermitian basis are real.
class FourierExpansion {
 public:
  FourierExpansion(int n_qubits, StandardBasis basis, rvec coeffs);

  int n_qubits() const { return n_qubits_; }
  const StandardBasis& basis() const { return basis_; }
  const rvec& coeffs() const { return coeffs_; }
  double coeff(std::int64_t sigma) const { return coeffs_[sigma]; }

  static int sigma_digit(std::int64_t sigma, int i);  // 1-based coordinate
  static int sigma_weight(std::int64_t sigma, int n); // # nonzero digits

  int degree() const;  // max weight with nonzero coefficient; 0 for the zero table

 private:
  int n_qubits_;
  StandardBasis basis_;
  rvec coeffs_;
};

FourierExpansion fourier_expand(const HermitianOperator& p, const StandardBasis& basis);
HermitianOperator reconstruct(const FourierExpansion& f);

enum class DegreeMode { kAtMost, kAbove, kExact };
FourierExpansion degree_truncate(const FourierExpansion& f, DegreeMode mode, int t);

// Terms with supp(sigma) = S exactly (S is 1-based).
FourierExpansion efron_stein_component(const FourierExpansion& f, const std::vector<int>& s);

double influence(const FourierExpansion& f, int i);  // 1-based coordinate
double variance(const FourierExpansion& f);

// Terms supported inside S, re-indexed on S's qubits (sorted order); equals
// the partial trace over the complement divided by its dimension.
FourierExpansion marginal(const FourierExpansion& f, const std::vector<int>& s);

}  // namespace qf
