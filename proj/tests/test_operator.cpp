#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "qf/operator.hpp"

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

HermitianOperator p_op(int k) { return HermitianOperator(pauli(k)); }

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

}  // namespace

TEST_CASE("construction validates shape and hermiticity") {
  cmat bad(2, 2);
  bad << 0, 1, 0, 0;
  CHECK_THROWS_AS(HermitianOperator{bad}, argument_error);
  cmat rect(2, 3);
  rect.setZero();
  CHECK_THROWS_AS(HermitianOperator{rect}, argument_error);
  cmat odd(3, 3);
  odd.setZero();
  CHECK_THROWS_AS(HermitianOperator{odd}, argument_error);

  // tiny asymmetry is symmetrized away
  cmat near_h = pauli(1);
  near_h(0, 1) += cplx(0, 5e-11);
  const HermitianOperator p(near_h);
  CHECK((p.matrix() - p.matrix().adjoint()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("density and measurement validation") {
  cmat proj(2, 2);
  proj << 1, 0, 0, 0;
  CHECK_NOTHROW(DensityOperator{HermitianOperator(proj)});
  CHECK_THROWS_AS(DensityOperator{p_op(3)}, argument_error);       // trace 0
  CHECK_THROWS_AS(DensityOperator{p_op(0)}, argument_error);       // trace 2
  CHECK_NOTHROW(MeasurementOperator{HermitianOperator(proj)});
  CHECK_THROWS_AS(MeasurementOperator{p_op(3)}, argument_error);   // eigenvalue -1
  CHECK_THROWS_AS(MeasurementOperator{p_op(0) * 1.5}, argument_error);
}

TEST_CASE("normalized inner product on Pauli pairs") {
  CHECK(normalized_inner_product(p_op(1), p_op(1)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(normalized_inner_product(p_op(1), p_op(3)) == doctest::Approx(0.0).epsilon(1e-12));
  cmat proj(2, 2);
  proj << 1, 0, 0, 0;
  CHECK(normalized_inner_product(p_op(0), HermitianOperator(proj)) ==
        doctest::Approx(0.5).epsilon(1e-12));
  CHECK_THROWS_AS(normalized_inner_product(p_op(0), p_op(0).tensor(p_op(0))), argument_error);
}

TEST_CASE("normalized p-norms") {
  CHECK(normalized_2_norm(p_op(0)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(normalized_p_norm(p_op(3), 4.0) == doctest::Approx(1.0).epsilon(1e-12));
  cmat d20(2, 2);
  d20 << 2, 0, 0, 0;
  CHECK(normalized_p_norm(HermitianOperator(d20), 1.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(normalized_p_norm(p_op(0), 0.5), argument_error);

  // norm monotone in p
  for (int k = 0; k < 200; ++k) {
    const HermitianOperator p = rand_herm(1 + k % 3, 100 + std::uint64_t(k));
    double prev = 0.0;
    for (double e : {1.0, 2.0, 4.0, 8.0}) {
      const double cur = normalized_p_norm(p, e);
      CHECK(cur >= prev - 1e-10);
      prev = cur;
    }
    CHECK(normalized_p_norm(p, std::numeric_limits<double>::infinity()) >= prev - 1e-10);
  }
}

TEST_CASE("partial trace basics") {
  // EPR pair marginal is maximally mixed
  cmat phi(4, 4);
  phi.setZero();
  phi(0, 0) = phi(0, 3) = phi(3, 0) = phi(3, 3) = 0.5;
  const HermitianOperator marg = partial_trace(HermitianOperator(phi), {1});
  CHECK((marg.matrix() - 0.5 * pauli(0)).cwiseAbs().maxCoeff() < 1e-12);

  // Tr_B(X tensor Z) = X * Tr(Z) = 0; qubit 1 holds X
  const HermitianOperator xz = p_op(1).tensor(p_op(3));
  CHECK(partial_trace(xz, {1}).matrix().cwiseAbs().maxCoeff() < 1e-12);

  // multiplicativity on products
  const HermitianOperator rho = rand_herm(1, 7), tau = rand_herm(2, 8);
  const HermitianOperator both = rho.tensor(tau);
  CHECK((partial_trace(both, {1}).matrix() - rho.matrix() * tau.trace()).cwiseAbs().maxCoeff() <
        1e-10);
  CHECK(partial_trace(both, {1, 2, 3}).matrix().isApprox(both.matrix(), 1e-12));
  CHECK(std::abs(partial_trace(both, {2, 3}).trace() - both.trace()) < 1e-10);

  CHECK_THROWS_AS(partial_trace(both, {0}), argument_error);
  CHECK_THROWS_AS(partial_trace(both, {4}), argument_error);
  CHECK_THROWS_AS(partial_trace(both, {1, 1}), argument_error);
}

TEST_CASE("partial trace is the adjoint of tensoring with id") {
  // <Tr_B M, N> = 2^{|B|} <M, N tensor id_B> with normalized inner products
  for (std::uint64_t k = 0; k < 20; ++k) {
    const HermitianOperator m = rand_herm(3, 300 + k);
    const HermitianOperator n = rand_herm(2, 400 + k);
    const double lhs = normalized_inner_product(partial_trace(m, {1, 2}), n);
    const double rhs = 2.0 * normalized_inner_product(m, n.tensor(HermitianOperator::identity(1)));
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
  }
}

TEST_CASE("spectral decomposition") {
  {
    const auto [vals, vecs] = spectral_decomposition(p_op(3));
    CHECK(vals[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(vals[1] == doctest::Approx(-1.0).epsilon(1e-12));
  }
  {
    const auto [vals, vecs] = spectral_decomposition(p_op(0));
    CHECK(vals[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(vals[1] == doctest::Approx(1.0).epsilon(1e-12));
  }
  {
    const HermitianOperator h((pauli(1) + pauli(3)) / std::sqrt(2.0));
    const auto [vals, vecs] = spectral_decomposition(h);
    CHECK(vals[0] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(vals[1] == doctest::Approx(-1.0).epsilon(1e-9));
    const cmat rec = vecs * vals.asDiagonal().toDenseMatrix().cast<cplx>() * vecs.adjoint();
    CHECK((rec - h.matrix()).cwiseAbs().maxCoeff() < 1e-9);
  }
  for (std::uint64_t k = 0; k < 20; ++k) {
    const HermitianOperator p = rand_herm(3, 500 + k);
    const auto [vals, vecs] = spectral_decomposition(p);
    for (int i = 1; i < vals.size(); ++i) CHECK(vals[i] <= vals[i - 1] + 1e-12);
    const cmat rec = vecs * vals.asDiagonal().toDenseMatrix().cast<cplx>() * vecs.adjoint();
    CHECK((rec - p.matrix()).cwiseAbs().maxCoeff() < 1e-9 * std::max(1.0, normalized_2_norm(p)));
  }
}

TEST_CASE("scalar functions of operators") {
  const HermitianOperator sq = apply_scalar_function(p_op(3), [](double x) { return x * x; });
  CHECK((sq.matrix() - pauli(0)).cwiseAbs().maxCoeff() < 1e-12);

  cmat d(2, 2);
  d << -2, 0, 0, 3;
  const HermitianOperator ab = apply_scalar_function(HermitianOperator(d), [](double x) {
    return std::abs(x);
  });
  CHECK(ab.matrix()(0, 0).real() == doctest::Approx(2.0));
  CHECK(ab.matrix()(1, 1).real() == doctest::Approx(3.0));

  const HermitianOperator rt =
      apply_scalar_function(p_op(0) * 4.0, [](double x) { return std::sqrt(x); });
  CHECK((rt.matrix() - 2.0 * pauli(0)).cwiseAbs().maxCoeff() < 1e-12);

  CHECK_THROWS_AS(
      apply_scalar_function(p_op(3), [](double x) { return std::sqrt(x); }), domain_error);

  // commutes with unitary conjugation
  for (std::uint64_t k = 0; k < 10; ++k) {
    const HermitianOperator p = rand_herm(2, 600 + k);
    const auto [vals, u] = spectral_decomposition(rand_herm(2, 700 + k));
    const auto f = [](double x) { return std::tanh(x); };
    const HermitianOperator lhs =
        apply_scalar_function(HermitianOperator(u * p.matrix() * u.adjoint()), f);
    const cmat rhs = u * apply_scalar_function(p, f).matrix() * u.adjoint();
    CHECK((lhs.matrix() - rhs).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("inner product symmetry and norm identity") {
  for (std::uint64_t k = 0; k < 30; ++k) {
    const int n = 1 + int(k % 4);
    const HermitianOperator p = rand_herm(n, 800 + k), q = rand_herm(n, 900 + k);
    CHECK(normalized_inner_product(p, q) == doctest::Approx(normalized_inner_product(q, p)));
    CHECK(normalized_inner_product(p, p) ==
          doctest::Approx(normalized_2_norm(p) * normalized_2_norm(p)).epsilon(1e-10));
  }
}

TEST_CASE("tensor places the receiver on the low qubit") {
  const HermitianOperator t = p_op(1).tensor(p_op(3));
  // qubit 1 carries sigma_x: tracing out qubit 2 of (t * (id tensor sz)) recovers 2*sx
  const HermitianOperator probe(t.matrix() * p_op(0).tensor(p_op(3)).matrix());
  CHECK((partial_trace(probe, {1}).matrix() - 2.0 * pauli(1)).cwiseAbs().maxCoeff() < 1e-12);
}
