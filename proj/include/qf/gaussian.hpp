#pragma once

#include <map>
#include <utility>

#include "qf/common.hpp"

namespace qf {

// Normalized probabilists' Hermite value h_r(x), orthonormal under N(0,1).
double hermite_eval_1d(int r, double x);
// Product over coordinates of h_{sigma_i}(x_i); x may be longer than sigma.
double hermite_eval(const std::vector<int>& sigma, const rvec& x);

struct HermitePolynomial {
  std::vector<int> sigma;
  double eval(const rvec& x) const { return hermite_eval(sigma, x); }
};

// Hermite multi-index in sparse packed form: sorted entries (var-1)<<8 | power
// with 1-based var and power >= 1. The empty key is the constant term.
using HKey = std::vector<std::uint32_t>;
// (var, power) pairs, 1-based vars, for the public API.
using SparseIndex = std::vector<std::pair<int, int>>;

inline constexpr int kMaxHermiteDegree = 8;

// Real polynomial over n Gaussian variables stored by Hermite coefficients.
// Everything downstream (norms, influences, noise) reads the sparse table.
class GaussianPolynomial {
 public:
  explicit GaussianPolynomial(int n_vars);
  static GaussianPolynomial constant(int n_vars, double c);
  static GaussianPolynomial coordinate(int n_vars, int i);  // x_i, 1-based

  void set_term(const SparseIndex& sigma, double c);  // c = 0 erases
  double term(const SparseIndex& sigma) const;

  int n_vars() const { return n_vars_; }
  int degree() const { return degree_; }  // 0 for the zero polynomial
  bool multilinear() const;
  const std::map<HKey, double>& terms() const { return terms_; }

  double mean() const;         // coefficient of the constant term
  double l2_norm_sq() const;   // sum of squared coefficients
  double variance() const;
  double influence(int i) const;  // 1-based

  double evaluate(const rvec& x) const;
  GaussianPolynomial scaled(double a) const;

  static HKey pack(const SparseIndex& sigma, int n_vars);
  static SparseIndex unpack(const HKey& key);
  static int key_degree(const HKey& key);

 private:
  int n_vars_;
  int degree_ = 0;
  std::map<HKey, double> terms_;

  void recompute_degree();
  friend GaussianPolynomial ornstein_uhlenbeck(const GaussianPolynomial&, double);
  friend GaussianPolynomial multilinear_truncate(const GaussianPolynomial&);
  friend GaussianPolynomial variable_split(const GaussianPolynomial&, int);
};

// Coefficient sigma scaled by rho^{|sigma|}, |sigma| the total power.
GaussianPolynomial ornstein_uhlenbeck(const GaussianPolynomial& f, double rho);

// Keeps exactly the terms with every power equal to 0 or 1.
GaussianPolynomial multilinear_truncate(const GaussianPolynomial& f);

// Replaces variable i by the normalized sum of t fresh variables numbered
// (i-1)*t+1 .. i*t; the output distribution matches the input's.
GaussianPolynomial variable_split(const GaussianPolynomial& f, int t);

// Pairs (g, h) with h = rho*g + sqrt(1-rho^2)*g', componentwise independent.
// Draw k of either side is a pure function of (seed, variable, k).
class CorrelatedGaussianSource {
 public:
  CorrelatedGaussianSource(int n_vars, double rho, std::uint64_t seed);

  int n_vars() const { return n_vars_; }
  double rho() const { return rho_; }
  std::uint64_t seed() const { return seed_; }

  void sample_pair(std::int64_t index, rvec& g, rvec& h) const;
  rvec sample_a(std::int64_t index) const;
  rvec sample_b(std::int64_t index) const;

 private:
  int n_vars_;
  double rho_;
  std::uint64_t seed_;
  CounterRng rng_;
};

// f(Mx/||x||_2): the degree-preserving embedding of f into D variables.
class ReducedFunction {
 public:
  ReducedFunction(GaussianPolynomial f, rmat m);
  double operator()(const rvec& x) const;
  int d_vars() const { return static_cast<int>(m_.cols()); }
  const GaussianPolynomial& inner() const { return f_; }
  const rmat& map() const { return m_; }

 private:
  GaussianPolynomial f_;
  rmat m_;
};

ReducedFunction dimension_reduce(const GaussianPolynomial& f, const rmat& m);

}  // namespace qf
