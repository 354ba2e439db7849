#pragma once

#include <array>

#include "qf/common.hpp"

namespace qf {

// Four Hermitian 2x2 matrices, orthonormal under <P,Q> = Tr(P^dag Q)/2,
// element 0 equal to the identity. This is the only basis shape the qubit
// Fourier machinery needs; rotations of the traceless part stay inside it.
class StandardBasis {
 public:
  explicit StandardBasis(std::array<Eigen::Matrix2cd, 4> elems);

  static StandardBasis pauli();

  const Eigen::Matrix2cd& element(int i) const { return elems_[static_cast<std::size_t>(i)]; }

  bool approx_equal(const StandardBasis& other, double tol = kEigTol) const;

 private:
  std::array<Eigen::Matrix2cd, 4> elems_;
};

// B'_0 = id, B'_i = sum_j O_ij B_j over the traceless triple. O must be
// orthogonal within 1e-9.
StandardBasis rotate_basis(const StandardBasis& basis, const Eigen::Matrix3d& o);

}  // namespace qf
