#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "qf/gaussian.hpp"
#include "qf/random_operator.hpp"

using namespace qf;

namespace {

// Monte-Carlo mean with delta-method standard error
struct McMean {
  double mean = 0.0, se = 0.0;
};

template <typename F>
McMean mc_mean(std::int64_t n, F&& f) {
  double s1 = 0.0, s2 = 0.0;
  for (std::int64_t k = 0; k < n; ++k) {
    const double v = f(k);
    s1 += v;
    s2 += v * v;
  }
  const double m = s1 / double(n);
  const double var = std::max(0.0, s2 / double(n) - m * m);
  return {m, std::sqrt(var / double(n))};
}

GaussianPolynomial random_multilinear(int n_vars, std::uint64_t seed) {
  const CounterRng rng{seed};
  GaussianPolynomial f(n_vars);
  std::uint64_t k = 0;
  f.set_term({}, rng.normal(0, k++));
  for (int i = 1; i <= n_vars; ++i) f.set_term({{i, 1}}, rng.normal(0, k++));
  for (int i = 1; i <= n_vars; ++i)
    for (int j = i + 1; j <= n_vars; ++j) f.set_term({{i, 1}, {j, 1}}, rng.normal(0, k++));
  return f;
}

}  // namespace

TEST_CASE("one dimensional hermite values") {
  CHECK(hermite_eval_1d(0, 1.7) == doctest::Approx(1.0));
  CHECK(hermite_eval_1d(1, 2.5) == doctest::Approx(2.5));
  CHECK(hermite_eval_1d(2, 1.0) == doctest::Approx(0.0).epsilon(1e-14));
  // (x^2-1)/sqrt(2) at x=2
  CHECK(hermite_eval_1d(2, 2.0) == doctest::Approx(3.0 / std::sqrt(2.0)));
  // three-term recurrence against explicit H3 = (x^3 - 3x)/sqrt(6)
  for (double x : {-1.3, 0.2, 2.1})
    CHECK(hermite_eval_1d(3, x) == doctest::Approx((x * x * x - 3 * x) / std::sqrt(6.0)));

  rvec x(3);
  x << 2.5, 1.0, -0.5;
  CHECK(hermite_eval({1, 2}, x) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(hermite_eval({1, 0, 1}, x) == doctest::Approx(2.5 * -0.5));
}

TEST_CASE("hermite orthonormality by monte carlo") {
  const CounterRng rng{42};
  const std::vector<std::vector<int>> idx = {{1}, {2}, {1, 1}, {0, 2}};
  for (std::size_t a = 0; a < idx.size(); ++a)
    for (std::size_t b = a; b < idx.size(); ++b) {
      const auto est = mc_mean(200000, [&](std::int64_t k) {
        rvec x(2);
        x << rng.normal(std::uint64_t(k), 0), rng.normal(std::uint64_t(k), 1);
        return hermite_eval(idx[a], x) * hermite_eval(idx[b], x);
      });
      const double want = a == b ? 1.0 : 0.0;
      CHECK(std::abs(est.mean - want) <= 3.0 * est.se + 1e-12);
    }
}

TEST_CASE("polynomial term table") {
  GaussianPolynomial f(3);
  CHECK(f.degree() == 0);
  CHECK(f.l2_norm_sq() == 0.0);
  f.set_term({}, 2.0);
  f.set_term({{1, 1}, {3, 2}}, -1.5);
  CHECK(f.degree() == 3);
  CHECK(f.term({{1, 1}, {3, 2}}) == -1.5);
  CHECK(f.term({{2, 1}}) == 0.0);
  CHECK(f.mean() == 2.0);
  CHECK(f.l2_norm_sq() == doctest::Approx(4.0 + 2.25));
  CHECK(f.variance() == doctest::Approx(2.25));
  CHECK(f.influence(1) == doctest::Approx(2.25));
  CHECK(f.influence(2) == 0.0);
  CHECK(f.influence(3) == doctest::Approx(2.25));
  CHECK_FALSE(f.multilinear());
  f.set_term({{1, 1}, {3, 2}}, 0.0);
  CHECK(f.degree() == 0);
  CHECK(f.multilinear());

  CHECK_THROWS_AS(f.set_term({{0, 1}}, 1.0), argument_error);
  CHECK_THROWS_AS(f.set_term({{4, 1}}, 1.0), argument_error);
  CHECK_THROWS_AS(f.set_term({{1, 9}}, 1.0), argument_error);  // degree cap

  // evaluate agrees with the Hermite basis directly
  const GaussianPolynomial x2 = GaussianPolynomial::coordinate(2, 2);
  rvec x(2);
  x << 0.3, -1.2;
  CHECK(x2.evaluate(x) == doctest::Approx(-1.2));
}

TEST_CASE("parseval by monte carlo") {
  for (std::uint64_t s = 0; s < 3; ++s) {
    const GaussianPolynomial f = random_multilinear(3, 10 + s);
    const CounterRng rng{99 + s};
    const auto est = mc_mean(200000, [&](std::int64_t k) {
      rvec x(3);
      for (int i = 0; i < 3; ++i) x[i] = rng.normal(std::uint64_t(k), std::uint64_t(i));
      const double v = f.evaluate(x);
      return v * v;
    });
    CHECK(std::abs(est.mean - f.l2_norm_sq()) <= 3.0 * est.se);
  }
}

TEST_CASE("ornstein uhlenbeck operator") {
  GaussianPolynomial f(2);
  f.set_term({}, 1.0);
  f.set_term({{1, 2}}, 1.0);
  f.set_term({{1, 1}, {2, 1}}, 2.0);

  const GaussianPolynomial u1 = ornstein_uhlenbeck(f, 1.0);
  CHECK(u1.term({{1, 2}}) == 1.0);
  CHECK(u1.term({{1, 1}, {2, 1}}) == 2.0);

  const GaussianPolynomial u0 = ornstein_uhlenbeck(f, 0.0);
  CHECK(u0.mean() == 1.0);
  CHECK(u0.variance() == 0.0);

  const GaussianPolynomial uh = ornstein_uhlenbeck(f, 0.5);
  CHECK(uh.term({{1, 2}}) == doctest::Approx(0.25));
  CHECK(uh.term({{1, 1}, {2, 1}}) == doctest::Approx(0.5));

  CHECK_THROWS_AS(ornstein_uhlenbeck(f, -0.1), argument_error);
  CHECK_THROWS_AS(ornstein_uhlenbeck(f, 1.0001), argument_error);

  // semigroup definition: E_x f(rho z + sqrt(1-rho^2) x) at fixed z
  const double rho = 0.7;
  const GaussianPolynomial ur = ornstein_uhlenbeck(f, rho);
  const CounterRng zrng{7};
  for (std::uint64_t zi = 0; zi < 10; ++zi) {
    rvec z(2);
    z << zrng.normal(zi, 0), zrng.normal(zi, 1);
    const CounterRng rng{1000 + zi};
    const auto est = mc_mean(400000, [&](std::int64_t k) {
      rvec x(2);
      for (int i = 0; i < 2; ++i)
        x[i] = rho * z[i] + std::sqrt(1 - rho * rho) * rng.normal(std::uint64_t(k), std::uint64_t(i));
      return f.evaluate(x);
    });
    CHECK(std::abs(est.mean - ur.evaluate(z)) <= 3.0 * est.se + 1e-9);
  }
}

TEST_CASE("scalar hypercontractivity") {
  const double rho = 1.0 / std::sqrt(3.0);
  const CounterRng rng{55};
  for (std::uint64_t s = 0; s < 30; ++s) {
    const GaussianPolynomial f = random_multilinear(2 + int(s % 2), 200 + s);
    const GaussianPolynomial uf = ornstein_uhlenbeck(f, rho);
    const int nv = f.n_vars();
    const auto est = mc_mean(100000, [&](std::int64_t k) {
      rvec x(nv);
      for (int i = 0; i < nv; ++i)
        x[i] = rng.normal(mix3(s, std::uint64_t(k), 0), std::uint64_t(i));
      const double v = uf.evaluate(x);
      return v * v * v * v;
    });
    const double n2 = std::sqrt(f.l2_norm_sq());
    // fourth root with delta-method SE
    const double n4 = std::pow(est.mean, 0.25);
    const double se4 = est.se * 0.25 * std::pow(std::max(est.mean, 1e-300), -0.75);
    CHECK(n4 <= n2 + 3.0 * se4);
  }
}

TEST_CASE("multilinear truncation") {
  GaussianPolynomial f(2);
  f.set_term({}, 1.0);
  f.set_term({{1, 1}}, 0.5);
  const GaussianPolynomial same = multilinear_truncate(f);
  CHECK(same.terms() == f.terms());

  GaussianPolynomial g(1);
  g.set_term({{1, 2}}, 3.0);
  CHECK(multilinear_truncate(g).l2_norm_sq() == 0.0);

  // x^2 = sqrt(2) H_2 + 1
  GaussianPolynomial xsq(1);
  xsq.set_term({}, 1.0);
  xsq.set_term({{1, 2}}, std::sqrt(2.0));
  const GaussianPolynomial ml = multilinear_truncate(xsq);
  CHECK(ml.mean() == 1.0);
  CHECK(ml.variance() == 0.0);

  // idempotent, norm non-increasing, mean preserved
  for (std::uint64_t s = 0; s < 10; ++s) {
    GaussianPolynomial h = random_multilinear(3, 300 + s);
    h.set_term({{1, 2}, {2, 1}}, 0.7);
    const GaussianPolynomial t1 = multilinear_truncate(h);
    CHECK(multilinear_truncate(t1).terms() == t1.terms());
    CHECK(t1.l2_norm_sq() <= h.l2_norm_sq());
    CHECK(t1.mean() == h.mean());
    CHECK(t1.multilinear());
  }
}

TEST_CASE("variable split") {
  const GaussianPolynomial x1 = GaussianPolynomial::coordinate(1, 1);
  CHECK(variable_split(x1, 1).terms() == x1.terms());

  const GaussianPolynomial split = variable_split(x1, 4);
  CHECK(split.n_vars() == 4);
  CHECK(split.l2_norm_sq() == doctest::Approx(1.0));
  for (int i = 1; i <= 4; ++i) {
    CHECK(split.term({{i, 1}}) == doctest::Approx(0.5));
    CHECK(split.influence(i) == doctest::Approx(0.25));
  }

  // distribution preserved: compare first four moments for a quadratic
  GaussianPolynomial f(2);
  f.set_term({{1, 1}}, 1.0);
  f.set_term({{1, 1}, {2, 1}}, -0.5);
  f.set_term({}, 0.3);
  const GaussianPolynomial fbar = variable_split(f, 3);
  CHECK(fbar.n_vars() == 6);
  CHECK(fbar.mean() == doctest::Approx(f.mean()));
  CHECK(fbar.l2_norm_sq() == doctest::Approx(f.l2_norm_sq()).epsilon(1e-12));
  const CounterRng rng{77};
  double m3_orig = 0.0, m3_split = 0.0;
  const std::int64_t n = 400000;
  for (std::int64_t k = 0; k < n; ++k) {
    rvec x(2), y(6);
    for (int i = 0; i < 2; ++i) x[i] = rng.normal(std::uint64_t(k), std::uint64_t(i));
    for (int i = 0; i < 6; ++i) y[i] = rng.normal(std::uint64_t(k), std::uint64_t(10 + i));
    m3_orig += std::pow(f.evaluate(x), 3);
    m3_split += std::pow(fbar.evaluate(y), 3);
  }
  CHECK(std::abs(m3_orig - m3_split) / double(n) < 0.05);

  // per-variable influence scales down by t on multilinear inputs
  const GaussianPolynomial ml = random_multilinear(2, 500);
  const GaussianPolynomial mls = multilinear_truncate(variable_split(ml, 4));
  for (int i = 1; i <= 2; ++i)
    for (int j = 1; j <= 4; ++j)
      CHECK(mls.influence((i - 1) * 4 + j) <=
            ml.influence(i) / 4.0 + 1e-12);
}

TEST_CASE("correlated gaussian source") {
  const CorrelatedGaussianSource src(3, 0.7, 123);
  const std::int64_t n = 200000;
  for (int i = 0; i < 3; ++i) {
    double gg = 0.0, gh = 0.0, cross = 0.0, hh = 0.0;
    rvec g(3), h(3);
    for (std::int64_t k = 0; k < n; ++k) {
      src.sample_pair(k, g, h);
      gg += g[i] * g[i];
      hh += h[i] * h[i];
      gh += g[i] * h[i];
      cross += g[i] * h[(i + 1) % 3];
    }
    CHECK(gg / double(n) == doctest::Approx(1.0).epsilon(0.02));
    CHECK(hh / double(n) == doctest::Approx(1.0).epsilon(0.02));
    CHECK(gh / double(n) == doctest::Approx(0.7).epsilon(0.02));
    CHECK(std::abs(cross) / double(n) < 0.01);
  }
  // marginals reproduce the pair components
  rvec g(3), h(3);
  src.sample_pair(17, g, h);
  CHECK((src.sample_a(17) - g).norm() == 0.0);
  CHECK((src.sample_b(17) - h).norm() == 0.0);
}

TEST_CASE("random operator sampling and norms") {
  const StandardBasis basis = StandardBasis::pauli();

  // constant component only
  RandomOperator c(1, 0, basis);
  c.set_component(0, GaussianPolynomial::constant(0, 0.8));
  const CorrelatedGaussianSource src0(0, 0.5, 9);
  for (const HermitianOperator& s : sample_random_operator(c, src0, Side::kA, 5))
    CHECK((s.matrix() - 0.8 * Eigen::Matrix2cd::Identity()).cwiseAbs().maxCoeff() < 1e-12);
  const NormEstimate cn2 = np_norm_estimate(c, 2, 500, 3);
  CHECK(cn2.estimate == doctest::Approx(0.8).epsilon(1e-9));

  // P = g1 * sigma_x
  RandomOperator p(1, 1, basis);
  p.set_component(1, GaussianPolynomial::coordinate(1, 1));
  CHECK(p.n2_norm() == doctest::Approx(1.0));
  const NormEstimate n2 = np_norm_estimate(p, 2, 100000, 4);
  CHECK(std::abs(n2.estimate - 1.0) <= 3.0 * n2.std_error);
  const NormEstimate n4 = np_norm_estimate(p, 4, 100000, 5);
  CHECK(std::abs(n4.estimate - std::pow(3.0, 0.25)) <= 3.0 * n4.std_error);

  // empirical trace expectation: only the constant survives
  RandomOperator q(1, 1, basis);
  GaussianPolynomial mixed(1);
  mixed.set_term({}, 0.3);
  mixed.set_term({{1, 1}}, 1.0);
  q.set_component(0, mixed);
  const CorrelatedGaussianSource src(1, 0.0, 12);
  const auto samples = sample_random_operator(q, src, Side::kA, 100000);
  double tr = 0.0, tr2 = 0.0;
  for (const auto& s : samples) {
    const double t = s.trace();
    tr += t;
    tr2 += t * t;
  }
  tr /= double(samples.size());
  tr2 = std::sqrt(std::max(0.0, tr2 / double(samples.size()) - tr * tr) / double(samples.size()));
  CHECK(std::abs(tr - 2.0 * 0.3) <= 3.0 * tr2);

  CHECK_THROWS_AS(sample_random_operator(p, src0, Side::kA, 1), argument_error);
}

TEST_CASE("gamma noise") {
  const StandardBasis basis = StandardBasis::pauli();
  RandomOperator p(1, 1, basis);
  GaussianPolynomial lin(1);
  lin.set_term({{1, 1}}, 1.0);
  p.set_component(1, lin);
  p.set_component(0, GaussianPolynomial::constant(1, 0.5));

  const RandomOperator same = gamma_noise(p, 1.0);
  CHECK(same.component(1)->term({{1, 1}}) == doctest::Approx(1.0));

  // matrix degree 1 plus polynomial degree 1: rho^2
  const RandomOperator g = gamma_noise(p, 0.3);
  CHECK(g.component(1)->term({{1, 1}}) == doctest::Approx(0.09));
  CHECK(g.component(0)->term({}) == doctest::Approx(0.5));

  const RandomOperator dead = gamma_noise(p, 0.0);
  CHECK(dead.n2_norm() == doctest::Approx(0.5));

  // composition on coefficient tables
  const RandomOperator ab = gamma_noise(gamma_noise(p, 0.8), 0.5);
  const RandomOperator direct = gamma_noise(p, 0.4);
  for (std::int64_t s = 0; s < 4; ++s) {
    const GaussianPolynomial* x = ab.component(s);
    const GaussianPolynomial* y = direct.component(s);
    CHECK((x == nullptr) == (y == nullptr));
    if (x && y)
      for (const auto& [key, cf] : x->terms())
        CHECK(cf == doctest::Approx(y->terms().at(key)).epsilon(1e-12));
  }
}

TEST_CASE("operator hypercontractivity and degree bound") {
  const StandardBasis basis = StandardBasis::pauli();

  // boundary: constant identity
  RandomOperator idop(1, 1, basis);
  idop.set_component(0, GaussianPolynomial::constant(1, 1.0));
  const HypercontractivityReport hid = hypercontractivity_test(idop, 1.0 / std::sqrt(3.0), 20000, 1);
  CHECK(hid.pass);
  CHECK(hid.n4_estimate == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(hid.n2_exact == doctest::Approx(1.0));

  // known value 3^{1/4}/3 for g1 sigma_x at rho = 1/sqrt(3)
  RandomOperator p(1, 1, basis);
  p.set_component(1, GaussianPolynomial::coordinate(1, 1));
  const HypercontractivityReport hp = hypercontractivity_test(p, 1.0 / std::sqrt(3.0), 200000, 2);
  CHECK(hp.pass);
  CHECK(std::abs(hp.n4_estimate - std::pow(3.0, 0.25) / 3.0) <= 3.0 * hp.std_error);

  // campaign over random multilinear operators
  for (std::uint64_t s = 0; s < 50; ++s) {
    RandomOperator r(1 + int(s % 2), 2, basis);
    for (std::int64_t comp = 0; comp < pow4(r.h_qubits()); ++comp)
      r.set_component(comp, random_multilinear(2, mix3(600, s, std::uint64_t(comp))));
    CHECK(hypercontractivity_test(r, 1.0 / std::sqrt(3.0), 20000, 700 + s).pass);
  }

  // degree bound N4 <= 3^{d/2} N2
  const DegreeBoundReport db = degree_bound_test(p, 100000, 8);
  CHECK(db.combined_degree == 2);
  CHECK(db.bound == doctest::Approx(3.0 * p.n2_norm()));
  CHECK(db.pass);
  for (std::uint64_t s = 0; s < 10; ++s) {
    RandomOperator r(1, 2, basis);
    GaussianPolynomial two(2);
    two.set_term({{1, 1}, {2, 1}}, 1.0);
    r.set_component(1, two);  // matrix degree 1 + poly degree 2 = 3
    r.set_component(0, random_multilinear(2, 900 + s));
    const DegreeBoundReport rep = degree_bound_test(r, 30000, 950 + s);
    CHECK(rep.combined_degree == 3);
    CHECK(rep.pass);
  }

  // non-multilinear input rejected
  RandomOperator bad(1, 1, basis);
  GaussianPolynomial sq(1);
  sq.set_term({{1, 2}}, 1.0);
  bad.set_component(0, sq);
  CHECK_THROWS_AS(hypercontractivity_test(bad, 0.5, 100, 1), precondition_error);
}

TEST_CASE("dimension reduced evaluation") {
  // constant stays constant
  const ReducedFunction cf =
      dimension_reduce(GaussianPolynomial::constant(2, 1.7), rmat::Random(2, 8));
  rvec x = rvec::Ones(8);
  CHECK(cf(x) == doctest::Approx(1.7));

  // f = x1 with identity-like map: f_M(x) = (Mx)_1/||x||, Cauchy-Schwarz bound
  const CounterRng rng{31};
  rmat m(1, 6);
  for (int j = 0; j < 6; ++j) m(0, j) = rng.normal(0, std::uint64_t(j));
  const ReducedFunction fm = dimension_reduce(GaussianPolynomial::coordinate(1, 1), m);
  for (std::uint64_t k = 0; k < 50; ++k) {
    rvec y(6);
    for (int j = 0; j < 6; ++j) y[j] = rng.normal(100 + k, std::uint64_t(j));
    CHECK(std::abs(fm(y)) <= m.row(0).norm() + 1e-12);
  }

  CHECK_THROWS_AS(dimension_reduce(GaussianPolynomial::coordinate(2, 1), rmat::Random(3, 5)),
                  argument_error);

  // concentration: E[f_M(x) g_M(y)] near rho for f = g = x1, D = 500
  const double rho = 0.7;
  int good = 0;
  std::vector<double> errs;
  for (std::uint64_t trial = 0; trial < 20; ++trial) {
    const CounterRng mr{2000 + trial};
    rmat mm(1, 500);
    for (int j = 0; j < 500; ++j) mm(0, j) = mr.normal(0, std::uint64_t(j));
    const ReducedFunction f(GaussianPolynomial::coordinate(1, 1), mm);
    const CorrelatedGaussianSource src(500, rho, 3000 + trial);
    const auto est = mc_mean(4000, [&](std::int64_t k) {
      rvec g(500), h(500);
      src.sample_pair(k, g, h);
      return f(g) * f(h);
    });
    errs.push_back(std::abs(est.mean - rho));
    if (errs.back() < 0.1) ++good;
  }
  std::sort(errs.begin(), errs.end());
  CHECK(0.5 * (errs[9] + errs[10]) < 0.1);
  CHECK(good >= 16);
}
