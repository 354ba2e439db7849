#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <unsupported/Eigen/KroneckerProduct>

#include "qf/channels.hpp"

using namespace qf;

namespace {

cmat pauli(int k) {
  cmat m(2, 2);
  switch (k) {
    case 0: m << 1, 0, 0, 1; break;
    case 1: m << 0, 1, 1, 0; break;
    case 2: m << 0, cplx(0, -1), cplx(0, 1), 0; break;
    default: m << 1, 0, 0, -1; break;
  }
  return m;
}

HermitianOperator rand_herm(int n, std::uint64_t seed) {
  const CounterRng rng{seed};
  const std::int64_t d = pow2(n);
  cmat a(d, d);
  for (std::int64_t i = 0; i < d; ++i)
    for (std::int64_t j = 0; j < d; ++j)
      a(i, j) = cplx(rng.normal(std::uint64_t(i), std::uint64_t(2 * j)),
                     rng.normal(std::uint64_t(i), std::uint64_t(2 * j + 1)));
  return HermitianOperator(0.5 * (a + a.adjoint()));
}

// psi^n in interleaved layout (A1 B1 A2 B2 ...) against A-side low block:
// index bit 2k-2 is Alice's qubit k, bit 2k-1 Bob's. Dense reference for
// correlation_value.
double dense_correlation(const HermitianOperator& p, const HermitianOperator& q,
                         const BipartiteState& psi, int n) {
  const cmat& s = psi.density().matrix();
  const std::int64_t dim = pow2(2 * n);
  cmat full = cmat::Zero(dim, dim);
  for (std::int64_t r = 0; r < dim; ++r)
    for (std::int64_t c = 0; c < dim; ++c) {
      cplx v = 1.0;
      for (int k = 0; k < n; ++k) {
        const std::int64_t ra = (r >> (2 * k)) & 1, rb = (r >> (2 * k + 1)) & 1;
        const std::int64_t ca = (c >> (2 * k)) & 1, cb = (c >> (2 * k + 1)) & 1;
        v *= s(ra + 2 * rb, ca + 2 * cb);
      }
      full(r, c) = v;
    }
  cplx acc = 0.0;
  const cmat& pm = p.matrix();
  const cmat& qm = q.matrix();
  for (std::int64_t r = 0; r < dim; ++r)
    for (std::int64_t c = 0; c < dim; ++c) {
      std::int64_t pa = 0, pb = 0, ca = 0, cb = 0;
      for (int k = 0; k < n; ++k) {
        pa |= ((r >> (2 * k)) & 1) << k;
        pb |= ((r >> (2 * k + 1)) & 1) << k;
        ca |= ((c >> (2 * k)) & 1) << k;
        cb |= ((c >> (2 * k + 1)) & 1) << k;
      }
      acc += pm(pa, ca) * qm(pb, cb) * full(c, r);
    }
  return acc.real();
}

}  // namespace

TEST_CASE("depolarized EPR family") {
  for (double eps : {0.1, 0.25, 0.3, 0.5, 0.9}) {
    const NoisyEprState st = depolarized_epr(eps);
    CHECK(st.rho() == doctest::Approx(1.0 - eps).epsilon(1e-9));
    CHECK((st.base().marginal_a() - 0.5 * pauli(0)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((st.base().marginal_b() - 0.5 * pauli(0)).cwiseAbs().maxCoeff() < 1e-12);
  }
  CHECK(depolarized_epr(1.0).rho() == doctest::Approx(0.0));
  CHECK_THROWS_AS(depolarized_epr(0.0), argument_error);   // perfect EPR is not noisy
  CHECK_THROWS_AS(depolarized_epr(-0.1), argument_error);
  CHECK_THROWS_AS(depolarized_epr(1.1), argument_error);
}

TEST_CASE("noise operator scales by degree") {
  const StandardBasis b = StandardBasis::pauli();
  const FourierExpansion id3 = fourier_expand(HermitianOperator::identity(3), b);
  for (double rho : {0.0, 0.3, 1.0})
    CHECK((noise_operator(id3, rho).coeffs() - id3.coeffs()).norm() == 0.0);

  rvec xz = rvec::Zero(16);
  xz[13] = 1.0;
  const FourierExpansion f(2, b, xz);
  CHECK(noise_operator(f, 0.5).coeff(13) == doctest::Approx(0.25));

  const FourierExpansion g = fourier_expand(rand_herm(2, 1), b);
  const FourierExpansion g0 = noise_operator(g, 0.0);
  CHECK(g0.coeff(0) == g.coeff(0));
  CHECK(degree_truncate(g0, DegreeMode::kAbove, 0).coeffs().norm() == 0.0);

  CHECK_THROWS_AS(noise_operator(g, -0.1), argument_error);
  CHECK_THROWS_AS(noise_operator(g, 1.1), argument_error);

  // trace preserved, norm non-increasing, [0,id] into [0,id]
  for (std::uint64_t k = 0; k < 20; ++k) {
    const FourierExpansion h = fourier_expand(rand_herm(2, 100 + k), b);
    const FourierExpansion hn = noise_operator(h, 0.7);
    CHECK(hn.coeff(0) == h.coeff(0));
    CHECK(hn.coeffs().norm() <= h.coeffs().norm() + 1e-12);
    const HermitianOperator meas = apply_scalar_function(
        rand_herm(2, 200 + k), [](double x) { return std::clamp(x, 0.0, 1.0); });
    const auto [vals, vecs] =
        spectral_decomposition(reconstruct(noise_operator(fourier_expand(meas, b), 0.7)));
    CHECK(vals.minCoeff() >= -1e-10);
    CHECK(vals.maxCoeff() <= 1.0 + 1e-10);
  }
}

TEST_CASE("lyapunov solver") {
  const HermitianOperator q = rand_herm(1, 5);
  const HermitianOperator half = lyapunov_solve(HermitianOperator::identity(1), q);
  CHECK((half.matrix() - 0.5 * q.matrix()).cwiseAbs().maxCoeff() < 1e-12);

  cmat pd(2, 2), ones(2, 2);
  pd << 1, 0, 0, 2;
  ones << 1, 1, 1, 1;
  const HermitianOperator x = lyapunov_solve(HermitianOperator(pd), HermitianOperator(ones));
  CHECK(x.matrix()(0, 0).real() == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(x.matrix()(0, 1).real() == doctest::Approx(1.0 / 3.0).epsilon(1e-10));
  CHECK(x.matrix()(1, 1).real() == doctest::Approx(0.25).epsilon(1e-10));

  // residual and the integral representation for positive definite P
  for (std::uint64_t k = 0; k < 10; ++k) {
    const HermitianOperator p = apply_scalar_function(
        rand_herm(2, 300 + k), [](double v) { return 0.5 + std::abs(v); });
    const HermitianOperator qq = rand_herm(2, 400 + k);
    const HermitianOperator sol = lyapunov_solve(p, qq);
    const cmat resid = p.matrix() * sol.matrix() + sol.matrix() * p.matrix() - qq.matrix();
    CHECK(std::sqrt(normalized_inner_product(HermitianOperator(resid), HermitianOperator(resid))) <
          1e-8 * std::max(1.0, normalized_2_norm(qq)));

    cmat integral = cmat::Zero(4, 4);
    const double dt = 1e-3;
    for (int step = 0; step < 20000; ++step) {
      const double t = (double(step) + 0.5) * dt;
      const HermitianOperator e =
          apply_scalar_function(p, [t](double v) { return std::exp(-t * v); });
      integral += dt * (e.matrix() * qq.matrix() * e.matrix());
    }
    CHECK((integral - sol.matrix()).cwiseAbs().maxCoeff() < 1e-5);
  }

  CHECK_THROWS_AS(lyapunov_solve(HermitianOperator(pauli(3)), q), singularity_error);
}

TEST_CASE("markov superoperator") {
  for (double eps : {0.1, 0.3, 0.6}) {
    const NoisyEprState st_hold = depolarized_epr(eps);
    const BipartiteState& psi = st_hold.base();
    const HermitianOperator tid = markov_superoperator(psi, HermitianOperator::identity(1));
    CHECK((tid.matrix() - pauli(0)).cwiseAbs().maxCoeff() < 1e-10);
    const HermitianOperator tz = markov_superoperator(psi, HermitianOperator(pauli(3)));
    CHECK((tz.matrix() - (1.0 - eps) * pauli(3)).cwiseAbs().maxCoeff() < 1e-10);
    const HermitianOperator ty = markov_superoperator(psi, HermitianOperator(pauli(2)));
    CHECK((ty.matrix() + (1.0 - eps) * pauli(2)).cwiseAbs().maxCoeff() < 1e-10);

    // defining identity and contraction
    for (std::uint64_t k = 0; k < 20; ++k) {
      const HermitianOperator m = rand_herm(1, 500 + k), q = rand_herm(1, 600 + k);
      const double lhs = dense_correlation(m, q, psi, 1);
      const double rhs = 0.5 * (markov_superoperator(psi, q).matrix() * m.matrix()).trace().real();
      CHECK(lhs == doctest::Approx(rhs).epsilon(1e-8));

      const FourierExpansion qe = fourier_expand(q, StandardBasis::pauli());
      rvec traceless_coeffs = qe.coeffs();
      traceless_coeffs[0] = 0.0;
      const HermitianOperator qt =
          reconstruct(FourierExpansion(1, StandardBasis::pauli(), traceless_coeffs));
      CHECK(normalized_2_norm(markov_superoperator(psi, qt)) <=
            psi.maximal_correlation() * normalized_2_norm(qt) + 8e-15);
    }
  }
}

TEST_CASE("correlation matrix and maximal correlation") {
  const StandardBasis b = StandardBasis::pauli();
  for (double eps : {0.25, 0.5}) {
    const NoisyEprState st_hold = depolarized_epr(eps);
    const BipartiteState& psi = st_hold.base();
    const rmat m = correlation_matrix(psi, b, b);
    CHECK(m(0, 0) == doctest::Approx(1.0));
    for (int i = 1; i < 4; ++i) {
      CHECK(std::abs(m(0, i)) < 1e-12);
      CHECK(std::abs(m(i, 0)) < 1e-12);
    }
    CHECK(m(1, 1) == doctest::Approx(1.0 - eps));
    CHECK(m(2, 2) == doctest::Approx(-(1.0 - eps)));
    CHECK(m(3, 3) == doctest::Approx(1.0 - eps));
    const Eigen::JacobiSVD<rmat> svd(m);
    CHECK(svd.singularValues()[0] == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(svd.singularValues()[1] == doctest::Approx(1.0 - eps).epsilon(1e-10));
  }
  CHECK(maximal_correlation(depolarized_epr(0.25).base()) == doctest::Approx(0.75).epsilon(1e-9));
  CHECK(maximal_correlation(depolarized_epr(1.0).base()) == doctest::Approx(0.0));

  // perfect EPR has correlation 1 (state built directly, not via the noisy family)
  cmat phi(4, 4);
  phi.setZero();
  phi(0, 0) = phi(0, 3) = phi(3, 0) = phi(3, 3) = 0.5;
  CHECK(maximal_correlation(BipartiteState(DensityOperator(HermitianOperator(phi)))) ==
        doctest::Approx(1.0).epsilon(1e-9));

  // biased marginals are out of scope
  cmat biased(4, 4);
  biased.setZero();
  biased(0, 0) = 0.7;
  biased(3, 3) = 0.3;
  CHECK_THROWS_AS(
      maximal_correlation(BipartiteState(DensityOperator(HermitianOperator(biased)))),
      unsupported_state_error);
}

TEST_CASE("aligned bases diagonalize the correlation matrix") {
  for (double eps : {0.1, 0.3, 0.7, 1.0}) {
    const NoisyEprState st_hold = depolarized_epr(eps);
    const BipartiteState& psi = st_hold.base();
    const auto& c = psi.correlation_coeffs();
    CHECK(c[0] == doctest::Approx(1.0));
    for (int i = 1; i < 4; ++i)
      CHECK(c[std::size_t(i)] == doctest::Approx(1.0 - eps).epsilon(1e-9));
    CHECK(c[1] >= c[2]);
    CHECK(c[2] >= c[3]);
    CHECK(c[3] >= -1e-12);
    const rmat m = correlation_matrix(psi, psi.aligned_basis_a(), psi.aligned_basis_b());
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        CHECK(m(i, j) ==
              doctest::Approx(i == j ? c[std::size_t(i)] : 0.0).epsilon(1e-8).scale(1.0));
  }
}

TEST_CASE("correlation value matches dense evaluation") {
  for (double eps : {0.3, 0.6}) {
    const NoisyEprState st_hold = depolarized_epr(eps);
    const BipartiteState& psi = st_hold.base();
    const StandardBasis ba = psi.aligned_basis_a(), bb = psi.aligned_basis_b();
    for (int n = 1; n <= 3; ++n) {
      const FourierExpansion idn = fourier_expand(HermitianOperator::identity(n), ba);
      CHECK(correlation_value(idn, fourier_expand(HermitianOperator::identity(n), bb), psi, n) ==
            doctest::Approx(1.0).epsilon(1e-10));
      for (std::uint64_t k = 0; k < 6; ++k) {
        const HermitianOperator p = rand_herm(n, 700 + 10 * std::uint64_t(n) + k);
        const HermitianOperator q = rand_herm(n, 800 + 10 * std::uint64_t(n) + k);
        const double fast =
            correlation_value(fourier_expand(p, ba), fourier_expand(q, bb), psi, n);
        CHECK(fast == doctest::Approx(dense_correlation(p, q, psi, n)).epsilon(1e-8));
      }
    }
    // single aligned letter on each side picks up exactly c1
    rvec e1 = rvec::Zero(4);
    e1[1] = 1.0;
    CHECK(correlation_value(FourierExpansion(1, ba, e1), FourierExpansion(1, bb, e1), psi, 1) ==
          doctest::Approx(1.0 - eps).epsilon(1e-9));
  }
}

TEST_CASE("tensorized maximal correlation") {
  for (double eps : {0.1, 0.5, 0.9}) {
    const NoisyEprState st_hold = depolarized_epr(eps);
    const BipartiteState& psi = st_hold.base();
    // 16x16 correlation matrix of psi x psi over product Pauli bases
    const StandardBasis b = StandardBasis::pauli();
    const cmat& s = psi.density().matrix();
    rmat big(16, 16);
    for (int si = 0; si < 16; ++si)
      for (int ti = 0; ti < 16; ++ti) {
        // Tr[(A_{s1} x A_{s2}) x (B_{t1} x B_{t2}) psi x psi] factorizes
        const auto entry = [&](int a, int bidx) {
          const cmat op = Eigen::kroneckerProduct(b.element(bidx), b.element(a)).eval();
          return (op * s).trace().real();
        };
        big(si, ti) = entry(si % 4, ti % 4) * entry(si / 4, ti / 4);
      }
    const Eigen::JacobiSVD<rmat> svd(big.block(1, 1, 15, 15));
    CHECK(std::abs(svd.singularValues()[0] - psi.maximal_correlation()) <= 1e-7);
  }
}

TEST_CASE("noise correlation tradeoff") {
  for (double eps_target : {0.05, 0.1}) {
    for (std::uint64_t k = 0; k < 25; ++k) {
      const int n = 1 + int(k % 3);
      const NoisyEprState st_hold = depolarized_epr(0.3);
    const BipartiteState& psi = st_hold.base();
      const double gamma = tsmooth_gamma(psi.maximal_correlation(), eps_target, 1.0);
      const FourierExpansion p =
          fourier_expand(rand_herm(n, 900 + k), psi.aligned_basis_a());
      const FourierExpansion q =
          fourier_expand(rand_herm(n, 1000 + k), psi.aligned_basis_b());
      const double before = correlation_value(p, q, psi, n);
      const double after = correlation_value(noise_operator(p, 1.0 - gamma),
                                             noise_operator(q, 1.0 - gamma), psi, n);
      CHECK(std::abs(before - after) <=
            2.0 * eps_target * std::sqrt(variance(p) * variance(q)) + 1e-12);
    }
  }
}
