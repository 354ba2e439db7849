#include "qf/random_operator.hpp"

#include "qf/fourier.hpp"

namespace qf {

RandomOperator::RandomOperator(int h_qubits, int n_vars, StandardBasis basis)
    : h_(h_qubits), n_vars_(n_vars), basis_(std::move(basis)) {
  if (h_qubits < 0 || h_qubits > kMaxQubits)
    throw argument_error("RandomOperator: bad qubit count");
  if (n_vars < 0) throw argument_error("RandomOperator: negative variable count");
}

void RandomOperator::set_component(std::int64_t sigma, GaussianPolynomial p) {
  if (sigma < 0 || sigma >= pow4(h_))
    throw argument_error("RandomOperator: sigma out of range");
  if (p.n_vars() != n_vars_)
    throw argument_error("RandomOperator: component variable count differs");
  if (p.terms().empty())
    comps_.erase(sigma);
  else
    comps_.insert_or_assign(sigma, std::move(p));
}

const GaussianPolynomial* RandomOperator::component(std::int64_t sigma) const {
  const auto it = comps_.find(sigma);
  return it == comps_.end() ? nullptr : &it->second;
}

bool RandomOperator::multilinear() const {
  for (const auto& [sigma, p] : comps_)
    if (!p.multilinear()) return false;
  return true;
}

double RandomOperator::n2_norm() const {
  double acc = 0.0;
  for (const auto& [sigma, p] : comps_) acc += p.l2_norm_sq();
  return std::sqrt(acc);
}

int RandomOperator::max_combined_degree() const {
  int d = 0;
  for (const auto& [sigma, p] : comps_)
    d = std::max(d, p.degree() + FourierExpansion::sigma_weight(sigma, h_));
  return d;
}

HermitianOperator RandomOperator::evaluate(const rvec& g) const {
  const std::int64_t dim = pow2(h_);
  cmat acc = cmat::Zero(dim, dim);
  for (const auto& [sigma, p] : comps_) {
    const double v = p.evaluate(g);
    if (v == 0.0) continue;
    // B_sigma = tensor of single-qubit elements, qubit 1 on the low bit
    cmat b = cmat::Ones(1, 1);
    for (int i = 1; i <= h_; ++i) {
      const Eigen::Matrix2cd& e = basis_.element(FourierExpansion::sigma_digit(sigma, i));
      cmat next(b.rows() * 2, b.cols() * 2);
      for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) next.block(r * b.rows(), c * b.cols(), b.rows(), b.cols()) = e(r, c) * b;
      b = std::move(next);
    }
    acc += v * b;
  }
  return HermitianOperator(acc);
}

std::vector<HermitianOperator> sample_random_operator(const RandomOperator& p,
                                                      const CorrelatedGaussianSource& src,
                                                      Side side, std::int64_t n_samples) {
  if (p.n_vars() != src.n_vars())
    throw argument_error("sample_random_operator: variable counts differ");
  std::vector<HermitianOperator> out;
  out.reserve(static_cast<std::size_t>(n_samples));
  for (std::int64_t k = 0; k < n_samples; ++k)
    out.push_back(p.evaluate(side == Side::kA ? src.sample_a(k) : src.sample_b(k)));
  return out;
}

namespace {

struct MomentAcc {
  double sum = 0.0;
  double sum_sq = 0.0;
};

NormEstimate mc_norm(const RandomOperator& p, int p_exponent, std::int64_t n_samples,
                     std::uint64_t seed, int threads) {
  const CorrelatedGaussianSource src(p.n_vars(), 0.0, seed);
  const MomentAcc total = blocked_reduce<MomentAcc>(
      n_samples, threads, MomentAcc{},
      [&](std::int64_t, std::int64_t lo, std::int64_t hi) {
        MomentAcc acc;
        for (std::int64_t k = lo; k < hi; ++k) {
          const HermitianOperator sample = p.evaluate(src.sample_a(k));
          const double x = std::pow(normalized_p_norm(sample, double(p_exponent)), p_exponent);
          acc.sum += x;
          acc.sum_sq += x * x;
        }
        return acc;
      },
      [](MomentAcc a, const MomentAcc& b) {
        a.sum += b.sum;
        a.sum_sq += b.sum_sq;
        return a;
      });
  const double n = double(n_samples);
  const double mean = total.sum / n;
  const double var = std::max(0.0, (total.sum_sq - n * mean * mean) / (n - 1.0));
  const double se_mean = std::sqrt(var / n);
  const double root = 1.0 / double(p_exponent);
  const double estimate = mean <= 0.0 ? 0.0 : std::pow(mean, root);
  const double se = mean <= 0.0 ? 0.0 : se_mean * root * std::pow(mean, root - 1.0);
  return {estimate, se};
}

double se_margin(double bound, double estimate, double se) {
  if (se > 0.0) return (bound - estimate) / se;
  return estimate <= bound ? std::numeric_limits<double>::infinity()
                           : -std::numeric_limits<double>::infinity();
}

}  // namespace

NormEstimate np_norm_estimate(const RandomOperator& p, int p_exponent, std::int64_t n_samples,
                              std::uint64_t seed, int threads) {
  if (p_exponent != 2 && p_exponent != 4)
    throw argument_error("np_norm_estimate: exponent must be 2 or 4");
  if (n_samples < 100) throw argument_error("np_norm_estimate: need at least 100 samples");
  return mc_norm(p, p_exponent, n_samples, seed, threads);
}

RandomOperator gamma_noise(const RandomOperator& p, double rho) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw argument_error("gamma_noise: rho must lie in [0,1]");
  RandomOperator out(p.h_qubits(), p.n_vars(), p.basis());
  for (const auto& [sigma, poly] : p.components()) {
    const double matrix_factor =
        int_pow(rho, FourierExpansion::sigma_weight(sigma, p.h_qubits()));
    out.set_component(sigma, ornstein_uhlenbeck(poly, rho).scaled(matrix_factor));
  }
  return out;
}

HypercontractivityReport hypercontractivity_test(const RandomOperator& p, double rho,
                                                 std::int64_t n_samples, std::uint64_t seed,
                                                 int threads) {
  if (!p.multilinear())
    throw precondition_error("hypercontractivity_test: operator must be multilinear");
  if (!(rho >= 0.0 && rho <= 1.0 / std::sqrt(3.0) + 1e-12))
    throw precondition_error("hypercontractivity_test: rho must lie in [0, 1/sqrt(3)]");
  const NormEstimate est = np_norm_estimate(gamma_noise(p, rho), 4, n_samples, seed, threads);
  const double n2 = p.n2_norm();
  return {est.estimate,
          est.std_error,
          n2,
          se_margin(n2, est.estimate, est.std_error),
          est.estimate <= n2 + 3.0 * est.std_error,
          n_samples,
          seed};
}

DegreeBoundReport degree_bound_test(const RandomOperator& p, std::int64_t n_samples,
                                    std::uint64_t seed, int threads) {
  if (!p.multilinear())
    throw precondition_error("degree_bound_test: operator must be multilinear");
  const NormEstimate est = np_norm_estimate(p, 4, n_samples, seed, threads);
  const double n2 = p.n2_norm();
  const int d = p.max_combined_degree();
  const double bound = std::pow(3.0, 0.5 * d) * n2;
  return {est.estimate,
          est.std_error,
          n2,
          d,
          bound,
          se_margin(bound, est.estimate, est.std_error),
          est.estimate <= bound + 3.0 * est.std_error,
          n_samples,
          seed};
}

}  // namespace qf
