#include "qf/fourier.hpp"

namespace qf {

FourierExpansion::FourierExpansion(int n_qubits, StandardBasis basis, rvec coeffs)
    : n_qubits_(n_qubits), basis_(std::move(basis)), coeffs_(std::move(coeffs)) {
  if (n_qubits < 0 || n_qubits > kMaxQubits)
    throw argument_error("FourierExpansion: bad qubit count");
  if (coeffs_.size() != pow4(n_qubits))
    throw argument_error("FourierExpansion: coefficient table must have 4^n entries");
}

int FourierExpansion::sigma_digit(std::int64_t sigma, int i) {
  return static_cast<int>((sigma >> (2 * (i - 1))) & 3);
}

int FourierExpansion::sigma_weight(std::int64_t sigma, int n) {
  int w = 0;
  for (int i = 1; i <= n; ++i) w += sigma_digit(sigma, i) != 0;
  return w;
}

int FourierExpansion::degree() const {
  int deg = 0;
  for (std::int64_t s = 0; s < coeffs_.size(); ++s)
    if (coeffs_[s] != 0.0) deg = std::max(deg, sigma_weight(s, n_qubits_));
  return deg;
}

namespace {

// One qubit contributes a 4x4 transform between matrix entries (row r, col c
// packed as 2r+c) and basis coordinates. Forward: coeff contraction with
// conj(B_sigma)/2 implements <B_sigma, P> one tensor factor at a time.
struct BasisTables {
  cplx fwd[4][4];  // [sigma][2r+c]
  cplx inv[4][4];  // [2r+c][sigma]
};

BasisTables make_tables(const StandardBasis& basis) {
  BasisTables t;
  for (int s = 0; s < 4; ++s) {
    const Eigen::Matrix2cd& b = basis.element(s);
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c) {
        t.fwd[s][2 * r + c] = 0.5 * std::conj(b(r, c));
        t.inv[2 * r + c][s] = b(r, c);
      }
  }
  return t;
}

// Applies a 4x4 table along qubit i of a length-4^n tensor, reading index
// group g in {matrix entries, sigma digits} and writing the transformed group.
cvec contract_axis(const cvec& in, int n, int i, const cplx table[4][4]) {
  const std::int64_t lo_sz = std::int64_t{1} << (2 * (i - 1));
  const std::int64_t hi_sz = std::int64_t{1} << (2 * (n - i));
  cvec out(in.size());
  for (std::int64_t hi = 0; hi < hi_sz; ++hi)
    for (std::int64_t lo = 0; lo < lo_sz; ++lo) {
      const std::int64_t base = hi * lo_sz * 4 + lo;
      cplx v[4];
      for (int d = 0; d < 4; ++d) v[d] = in[base + d * lo_sz];
      for (int d = 0; d < 4; ++d) {
        cplx acc = 0.0;
        for (int e = 0; e < 4; ++e) acc += table[d][e] * v[e];
        out[base + d * lo_sz] = acc;
      }
    }
  return out;
}

// Matrix entry (row, col) packed per qubit: digit i of the flat index is
// 2*row_bit_i + col_bit_i, little-endian like sigma.
cvec matrix_to_entry_tensor(const cmat& m, int n) {
  const std::int64_t d = std::int64_t{1} << n;
  cvec out(d * d);
  for (std::int64_t r = 0; r < d; ++r)
    for (std::int64_t c = 0; c < d; ++c) {
      std::int64_t idx = 0;
      for (int i = 0; i < n; ++i) {
        const std::int64_t dig = 2 * ((r >> i) & 1) + ((c >> i) & 1);
        idx |= dig << (2 * i);
      }
      out[idx] = m(r, c);
    }
  return out;
}

cmat entry_tensor_to_matrix(const cvec& t, int n) {
  const std::int64_t d = std::int64_t{1} << n;
  cmat m(d, d);
  for (std::int64_t r = 0; r < d; ++r)
    for (std::int64_t c = 0; c < d; ++c) {
      std::int64_t idx = 0;
      for (int i = 0; i < n; ++i) {
        const std::int64_t dig = 2 * ((r >> i) & 1) + ((c >> i) & 1);
        idx |= dig << (2 * i);
      }
      m(r, c) = t[idx];
    }
  return m;
}

}  // namespace

FourierExpansion fourier_expand(const HermitianOperator& p, const StandardBasis& basis) {
  const int n = p.n_qubits();
  const BasisTables tables = make_tables(basis);
  cvec work = matrix_to_entry_tensor(p.matrix(), n);
  for (int i = 1; i <= n; ++i) work = contract_axis(work, n, i, tables.fwd);
  rvec coeffs(work.size());
  for (std::int64_t s = 0; s < work.size(); ++s) coeffs[s] = work[s].real();
  return FourierExpansion(n, basis, std::move(coeffs));
}

HermitianOperator reconstruct(const FourierExpansion& f) {
  const int n = f.n_qubits();
  const BasisTables tables = make_tables(f.basis());
  cvec work = f.coeffs().cast<cplx>();
  for (int i = 1; i <= n; ++i) work = contract_axis(work, n, i, tables.inv);
  return HermitianOperator(entry_tensor_to_matrix(work, n));
}

FourierExpansion degree_truncate(const FourierExpansion& f, DegreeMode mode, int t) {
  if (t < 0) throw argument_error("degree_truncate: negative threshold");
  rvec out = f.coeffs();
  for (std::int64_t s = 0; s < out.size(); ++s) {
    const int w = FourierExpansion::sigma_weight(s, f.n_qubits());
    const bool keep = mode == DegreeMode::kAtMost ? w <= t
                    : mode == DegreeMode::kAbove  ? w > t
                                                  : w == t;
    if (!keep) out[s] = 0.0;
  }
  return FourierExpansion(f.n_qubits(), f.basis(), std::move(out));
}

FourierExpansion efron_stein_component(const FourierExpansion& f, const std::vector<int>& s) {
  const int n = f.n_qubits();
  std::uint32_t mask = 0;
  for (int i : s) {
    if (i < 1 || i > n) throw argument_error("efron_stein_component: coordinate out of range");
    mask |= 1u << (i - 1);
  }
  rvec out = f.coeffs();
  for (std::int64_t sig = 0; sig < out.size(); ++sig) {
    std::uint32_t supp = 0;
    for (int i = 1; i <= n; ++i)
      if (FourierExpansion::sigma_digit(sig, i) != 0) supp |= 1u << (i - 1);
    if (supp != mask) out[sig] = 0.0;
  }
  return FourierExpansion(n, f.basis(), std::move(out));
}

double influence(const FourierExpansion& f, int i) {
  if (i < 1 || i > f.n_qubits()) throw argument_error("influence: coordinate out of range");
  double acc = 0.0;
  const rvec& c = f.coeffs();
  for (std::int64_t s = 0; s < c.size(); ++s)
    if (FourierExpansion::sigma_digit(s, i) != 0) acc += c[s] * c[s];
  return acc;
}

double variance(const FourierExpansion& f) {
  double acc = 0.0;
  const rvec& c = f.coeffs();
  for (std::int64_t s = 1; s < c.size(); ++s) acc += c[s] * c[s];
  return acc;
}

FourierExpansion marginal(const FourierExpansion& f, const std::vector<int>& s) {
  const int n = f.n_qubits();
  std::vector<int> keep = s;
  std::sort(keep.begin(), keep.end());
  if (std::adjacent_find(keep.begin(), keep.end()) != keep.end())
    throw argument_error("marginal: duplicate coordinate");
  for (int i : keep)
    if (i < 1 || i > n) throw argument_error("marginal: coordinate out of range");
  const int m = static_cast<int>(keep.size());
  rvec out = rvec::Zero(pow4(m));
  for (std::int64_t sig = 0; sig < f.coeffs().size(); ++sig) {
    bool inside = true;
    std::int64_t packed = 0;
    for (int i = 1, j = 0; i <= n && inside; ++i) {
      const int d = FourierExpansion::sigma_digit(sig, i);
      if (j < m && keep[j] == i) {
        packed |= std::int64_t{d} << (2 * j);
        ++j;
      } else if (d != 0) {
        inside = false;
      }
    }
    if (inside) out[packed] += f.coeff(sig);
  }
  return FourierExpansion(m, f.basis(), std::move(out));
}

}  // namespace qf
