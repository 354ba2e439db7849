#include "qf/operator.hpp"

#include <cstdlib>

#include <Eigen/Eigenvalues>

namespace qf {

namespace {

int qubits_for_dim(Eigen::Index d) {
  int n = 0;
  while ((Eigen::Index(1) << n) < d) ++n;
  if ((Eigen::Index(1) << n) != d) return -1;
  return n;
}

}  // namespace

HermitianOperator::HermitianOperator(cmat m, int max_qubits) {
  if (m.rows() != m.cols()) throw argument_error("operator matrix must be square");
  const int n = qubits_for_dim(m.rows());
  if (n < 0) throw argument_error("operator dimension must be a power of 2");
  if (n > max_qubits) throw capacity_error("operator exceeds qubit cap");
  const double asym = (m - m.adjoint()).cwiseAbs().maxCoeff();
  if (asym >= 1e-10) throw argument_error("matrix is not Hermitian (asymmetry " + std::to_string(asym) + ")");
  n_qubits_ = n;
  m_ = 0.5 * (m + m.adjoint().eval());
}

HermitianOperator HermitianOperator::zero(int n_qubits) {
  return HermitianOperator(cmat::Zero(pow2(n_qubits), pow2(n_qubits)));
}

HermitianOperator HermitianOperator::identity(int n_qubits) {
  return HermitianOperator(cmat::Identity(pow2(n_qubits), pow2(n_qubits)));
}

HermitianOperator HermitianOperator::tensor(const HermitianOperator& high) const {
  const int dl = dim(), dh = high.dim();
  cmat out(dl * dh, dl * dh);
  for (int rh = 0; rh < dh; ++rh)
    for (int ch = 0; ch < dh; ++ch)
      out.block(rh * dl, ch * dl, dl, dl) = high.m_(rh, ch) * m_;
  HermitianOperator res;
  res.n_qubits_ = n_qubits_ + high.n_qubits_;
  res.m_ = std::move(out);
  return res;
}

HermitianOperator HermitianOperator::operator+(const HermitianOperator& o) const {
  if (o.n_qubits_ != n_qubits_) throw argument_error("qubit count mismatch");
  HermitianOperator res;
  res.n_qubits_ = n_qubits_;
  res.m_ = m_ + o.m_;
  return res;
}

HermitianOperator HermitianOperator::operator-(const HermitianOperator& o) const {
  if (o.n_qubits_ != n_qubits_) throw argument_error("qubit count mismatch");
  HermitianOperator res;
  res.n_qubits_ = n_qubits_;
  res.m_ = m_ - o.m_;
  return res;
}

HermitianOperator HermitianOperator::operator*(double c) const {
  HermitianOperator res;
  res.n_qubits_ = n_qubits_;
  res.m_ = c * m_;
  return res;
}

DensityOperator::DensityOperator(HermitianOperator base) : base_(std::move(base)) {
  Eigen::SelfAdjointEigenSolver<cmat> es(base_.matrix(), Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-10)
    throw argument_error("density operator is not positive semidefinite");
  if (std::abs(base_.trace() - 1.0) > 1e-10)
    throw argument_error("density operator trace differs from 1");
}

MeasurementOperator::MeasurementOperator(HermitianOperator base, double tol)
    : base_(std::move(base)) {
  Eigen::SelfAdjointEigenSolver<cmat> es(base_.matrix(), Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -tol || es.eigenvalues().maxCoeff() > 1.0 + tol)
    throw argument_error("measurement operator spectrum leaves [0,1]");
}

double normalized_inner_product(const HermitianOperator& p, const HermitianOperator& q) {
  if (p.n_qubits() != q.n_qubits()) throw argument_error("qubit count mismatch");
  const cplx v = (p.matrix().adjoint() * q.matrix()).trace();
  return v.real() / double(p.dim());
}

double normalized_p_norm(const HermitianOperator& p, double pow) {
  Eigen::SelfAdjointEigenSolver<cmat> es(p.matrix(), Eigen::EigenvaluesOnly);
  const rvec s = es.eigenvalues().cwiseAbs();
  if (std::isinf(pow)) return s.size() ? s.maxCoeff() : 0.0;
  if (pow < 1.0) throw argument_error("p-norm requires p >= 1");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < s.size(); ++i) acc += std::pow(s[i], pow);
  return std::pow(acc / double(p.dim()), 1.0 / pow);
}

cmat partial_trace_raw(const cmat& m, int n, std::vector<int> keep) {
  std::sort(keep.begin(), keep.end());
  for (std::size_t i = 0; i < keep.size(); ++i) {
    if (keep[i] < 1 || keep[i] > n) throw argument_error("partial_trace: qubit index out of range");
    if (i > 0 && keep[i] == keep[i - 1]) throw argument_error("partial_trace: duplicate qubit index");
  }
  const int k = static_cast<int>(keep.size());
  const int nt = n - k;
  // bit scatter tables: position j of the kept (traced) index -> source bit
  std::vector<int> keep_bits(k), tr_bits;
  {
    std::vector<bool> is_kept(n, false);
    for (int j = 0; j < k; ++j) {
      keep_bits[j] = keep[j] - 1;
      is_kept[keep[j] - 1] = true;
    }
    for (int b = 0; b < n; ++b)
      if (!is_kept[b]) tr_bits.push_back(b);
  }
  auto scatter = [](int value, const std::vector<int>& bits) {
    int out = 0;
    for (std::size_t j = 0; j < bits.size(); ++j)
      if (value >> j & 1) out |= 1 << bits[j];
    return out;
  };
  cmat out = cmat::Zero(pow2(k), pow2(k));
  for (int r = 0; r < pow2(k); ++r) {
    const int rbase = scatter(r, keep_bits);
    for (int c = 0; c < pow2(k); ++c) {
      const int cbase = scatter(c, keep_bits);
      cplx acc = 0.0;
      for (int t = 0; t < pow2(nt); ++t) {
        const int off = scatter(t, tr_bits);
        acc += m(rbase | off, cbase | off);
      }
      out(r, c) = acc;
    }
  }
  return out;
}

HermitianOperator partial_trace(const HermitianOperator& p, std::vector<int> keep) {
  return HermitianOperator(partial_trace_raw(p.matrix(), p.n_qubits(), std::move(keep)));
}

std::pair<rvec, cmat> spectral_decomposition(const HermitianOperator& p) {
  Eigen::SelfAdjointEigenSolver<cmat> es(p.matrix());
  const Eigen::Index d = p.dim();
  rvec vals(d);
  cmat vecs(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {  // Eigen sorts ascending; flip
    vals[i] = es.eigenvalues()[d - 1 - i];
    vecs.col(i) = es.eigenvectors().col(d - 1 - i);
  }
  return {std::move(vals), std::move(vecs)};
}

HermitianOperator apply_scalar_function(const HermitianOperator& p,
                                        const std::function<double(double)>& f) {
  auto [vals, vecs] = spectral_decomposition(p);
  rvec mapped(vals.size());
  for (Eigen::Index i = 0; i < vals.size(); ++i) {
    mapped[i] = f(vals[i]);
    if (!std::isfinite(mapped[i]))
      throw domain_error("scalar function undefined at eigenvalue " + std::to_string(vals[i]));
  }
  cmat out = vecs * mapped.asDiagonal() * vecs.adjoint();
  return HermitianOperator(std::move(out));
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("QFOURIER_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc ? static_cast<int>(hc) : 1;
}

}  // namespace qf
