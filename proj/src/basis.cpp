#include "qf/basis.hpp"

namespace qf {

StandardBasis::StandardBasis(std::array<Eigen::Matrix2cd, 4> elems) : elems_(std::move(elems)) {
  if (!elems_[0].isIdentity(0.0)) throw argument_error("basis element 0 must be the identity");
  for (int i = 0; i < 4; ++i) {
    if ((elems_[static_cast<std::size_t>(i)] - elems_[static_cast<std::size_t>(i)].adjoint()).cwiseAbs().maxCoeff() > 1e-10)
      throw argument_error("basis element " + std::to_string(i) + " is not Hermitian");
    for (int j = 0; j < 4; ++j) {
      const cplx ip = (elems_[static_cast<std::size_t>(i)].adjoint() * elems_[static_cast<std::size_t>(j)]).trace() / 2.0;
      const double want = i == j ? 1.0 : 0.0;
      if (std::abs(ip - want) > 1e-10)
        throw argument_error("basis fails orthonormality at (" + std::to_string(i) + "," + std::to_string(j) + ")");
    }
  }
}

StandardBasis StandardBasis::pauli() {
  std::array<Eigen::Matrix2cd, 4> e;
  e[0] << 1, 0, 0, 1;
  e[1] << 0, 1, 1, 0;
  e[2] << 0, cplx(0, -1), cplx(0, 1), 0;
  e[3] << 1, 0, 0, -1;
  return StandardBasis(std::move(e));
}

bool StandardBasis::approx_equal(const StandardBasis& other, double tol) const {
  for (std::size_t i = 0; i < 4; ++i)
    if ((elems_[i] - other.elems_[i]).cwiseAbs().maxCoeff() > tol) return false;
  return true;
}

StandardBasis rotate_basis(const StandardBasis& basis, const Eigen::Matrix3d& o) {
  if ((o * o.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > kEigTol)
    throw argument_error("rotation matrix is not orthogonal");
  std::array<Eigen::Matrix2cd, 4> e;
  e[0] = Eigen::Matrix2cd::Identity();
  for (int i = 0; i < 3; ++i) {
    Eigen::Matrix2cd acc = Eigen::Matrix2cd::Zero();
    for (int j = 0; j < 3; ++j) acc += o(i, j) * basis.element(j + 1);
    e[static_cast<std::size_t>(i + 1)] = acc;
  }
  return StandardBasis(std::move(e));
}

}  // namespace qf
