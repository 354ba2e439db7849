#pragma once

#include "qf/basis.hpp"
#include "qf/gaussian.hpp"
#include "qf/operator.hpp"

namespace qf {

// Operator-valued polynomial: sum over sigma in {0..3}^h of p_sigma(g) B_sigma
// with shared Gaussian variables. Components are stored sparsely; sigma is
// packed base-4 little-endian like FourierExpansion indices.
class RandomOperator {
 public:
  RandomOperator(int h_qubits, int n_vars, StandardBasis basis);

  int h_qubits() const { return h_; }
  int n_vars() const { return n_vars_; }
  const StandardBasis& basis() const { return basis_; }
  const std::map<std::int64_t, GaussianPolynomial>& components() const { return comps_; }

  void set_component(std::int64_t sigma, GaussianPolynomial p);
  const GaussianPolynomial* component(std::int64_t sigma) const;

  bool multilinear() const;
  double n2_norm() const;           // exact: sqrt of the summed squared coefficients
  int max_combined_degree() const;  // max over components of poly degree + matrix weight

  HermitianOperator evaluate(const rvec& g) const;

 private:
  int h_;
  int n_vars_;
  StandardBasis basis_;
  std::map<std::int64_t, GaussianPolynomial> comps_;
};

enum class Side { kA, kB };

std::vector<HermitianOperator> sample_random_operator(const RandomOperator& p,
                                                      const CorrelatedGaussianSource& src,
                                                      Side side, std::int64_t n_samples);

struct NormEstimate {
  double estimate;
  double std_error;  // delta-method error of the rooted estimate
};

// Monte-Carlo E[||P(g)||_p^p]^{1/p} with the normalized Schatten norm inside.
NormEstimate np_norm_estimate(const RandomOperator& p, int p_exponent,
                              std::int64_t n_samples, std::uint64_t seed, int threads = 0);

// Coefficient (sigma, tau) scaled by rho^{|sigma| + |tau|}.
RandomOperator gamma_noise(const RandomOperator& p, double rho);

struct HypercontractivityReport {
  double n4_estimate;
  double std_error;
  double n2_exact;
  double margin_in_se;
  bool pass;
  std::int64_t n_samples;
  std::uint64_t seed;
};

// Checks N4(Gamma_rho(P)) <= N2(P) with Monte-Carlo slack of 3 SE.
HypercontractivityReport hypercontractivity_test(const RandomOperator& p, double rho,
                                                 std::int64_t n_samples, std::uint64_t seed,
                                                 int threads = 0);

struct DegreeBoundReport {
  double n4_estimate;
  double std_error;
  double n2_exact;
  int combined_degree;
  double bound;  // 3^{d/2} * N2
  double margin_in_se;
  bool pass;
  std::int64_t n_samples;
  std::uint64_t seed;
};

// Checks N4(P) <= 3^{d/2} N2(P) for multilinear P, d the combined degree.
DegreeBoundReport degree_bound_test(const RandomOperator& p, std::int64_t n_samples,
                                    std::uint64_t seed, int threads = 0);

}  // namespace qf
