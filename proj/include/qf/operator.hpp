#pragma once

#include "qf/common.hpp"

namespace qf {

// Qubit convention, used everywhere: qubit i (1-based) owns bit i-1 of the
// matrix index, i.e. qubit 1 is the least significant. tensor(A, B) therefore
// places A on the low qubits and B above them, matching the written order
// "A (x) B" with coordinates numbered from the left.

class HermitianOperator {
 public:
  // Validates: square 2^n dimension, Hermitian within 1e-10 entrywise
  // (symmetrized), n <= max_qubits.
  explicit HermitianOperator(cmat m, int max_qubits = kMaxQubits);

  static HermitianOperator zero(int n_qubits);
  static HermitianOperator identity(int n_qubits);

  int n_qubits() const { return n_qubits_; }
  int dim() const { return static_cast<int>(m_.rows()); }
  const cmat& matrix() const { return m_; }

  HermitianOperator tensor(const HermitianOperator& high) const;

  HermitianOperator operator+(const HermitianOperator& o) const;
  HermitianOperator operator-(const HermitianOperator& o) const;
  HermitianOperator operator*(double c) const;

  double trace() const { return m_.trace().real(); }

 private:
  HermitianOperator() = default;
  int n_qubits_ = 0;
  cmat m_;
};

class DensityOperator {
 public:
  // PSD within -1e-10, unit trace within 1e-10.
  explicit DensityOperator(HermitianOperator base);
  const HermitianOperator& base() const { return base_; }
  const cmat& matrix() const { return base_.matrix(); }
  int n_qubits() const { return base_.n_qubits(); }

 private:
  HermitianOperator base_;
};

class MeasurementOperator {
 public:
  // Eigenvalues within [-tol, 1+tol], tol defaults to the global 1e-9.
  explicit MeasurementOperator(HermitianOperator base, double tol = kEigTol);
  const HermitianOperator& base() const { return base_; }
  const cmat& matrix() const { return base_.matrix(); }
  int n_qubits() const { return base_.n_qubits(); }

 private:
  HermitianOperator base_;
};

// (1/2^n) Tr(P^dag Q); real for Hermitian inputs.
double normalized_inner_product(const HermitianOperator& p, const HermitianOperator& q);

// ((1/d) sum_i s_i^p)^(1/p) over singular values; p = infinity gives s_max.
double normalized_p_norm(const HermitianOperator& p, double pow);
inline double normalized_2_norm(const HermitianOperator& p) { return normalized_p_norm(p, 2.0); }

// Unnormalized partial trace onto `keep` (1-based qubit indices, any order
// given; result is re-indexed along sorted keep). Trace-preserving.
HermitianOperator partial_trace(const HermitianOperator& p, std::vector<int> keep);
// Same contraction on a raw matrix; the input need not be Hermitian.
cmat partial_trace_raw(const cmat& m, int n, std::vector<int> keep);

// Eigenvalues sorted non-increasing, columns of the unitary matched.
std::pair<rvec, cmat> spectral_decomposition(const HermitianOperator& p);

// f applied to the spectrum; non-finite f(eigenvalue) is a domain error.
HermitianOperator apply_scalar_function(const HermitianOperator& p,
                                        const std::function<double(double)>& f);

}  // namespace qf
