#pragma once

#include "qf/operator.hpp"

namespace qf {

// lambda = 0 selects the exact potential (x^2 below 0, (x-1)^2 above 1,
// 0 between); lambda in (0, 1/2] selects the smoothed five-piece version.
struct ZetaProfile {
  double lambda = 0.0;
  ZetaProfile() = default;
  explicit ZetaProfile(double l);
};

double zeta_scalar(double x, const ZetaProfile& profile);
double zeta_scalar_d1(double x, const ZetaProfile& profile);
// Second and third derivatives exist only for the smoothed profile.
double zeta_scalar_d2(double x, const ZetaProfile& profile);
double zeta_scalar_d3(double x, const ZetaProfile& profile);

// Sum of the potential over eigenvalues; equals the squared Frobenius
// distance to the nearest measurement operator when lambda = 0.
double trace_zeta(const HermitianOperator& p, const ZetaProfile& profile = ZetaProfile());

// Eigenvalue clamp to [0,1] in the eigenbasis of p: the 2-norm projection
// onto {0 <= X <= id}.
MeasurementOperator round_to_measurement(const HermitianOperator& p);

// Solution of |P| X + X |P| = PQ + QP; requires P invertible.
HermitianOperator ell_q(const HermitianOperator& p, const HermitianOperator& q);
// Anticommutator {P, ell_q(P)}; its trace equals 2 Tr |P| Q.
HermitianOperator kappa_q(const HermitianOperator& p, const HermitianOperator& q);

// Central finite difference of t -> Tr f(P + tQ) at t = 0 of the given order
// (1, 2 or 3), with one Richardson extrapolation level. step <= 0 selects
// the default 1e-4 * max(1, ||Q||_F).
double frechet_fd(const std::function<double(double)>& f, const HermitianOperator& p,
                  const HermitianOperator& q, int order, double step = 0.0);

// True when every eigenvalue of p keeps at least `margin` distance from the
// smoothed potential's breakpoints {-l, l, 1-l, 1+l}; third-order finite
// differences are only trustworthy on such inputs.
bool spectrum_clear_of_breakpoints(const HermitianOperator& p, double lambda, double margin);

struct RemainderReport {
  double lhs;
  double bound;
  double constant;
  bool pass;
  std::uint64_t seed;
};

// Second-order Taylor remainder of Tr zeta_lambda at P in direction Q,
// derivatives taken by finite differences, tested against
// constant * ||Q||_2 * ||Q||_4^2 / lambda (unnormalized Schatten norms).
RemainderReport taylor_remainder_check(const HermitianOperator& p, const HermitianOperator& q,
                                       double lambda, double constant = 50.0,
                                       std::uint64_t seed = 0);

struct AdditivityReport {
  double lhs;
  double bound;
  bool pass;
};

// |Tr(zeta(P+Q) - zeta(P))| <= 4(||P||_2 ||Q||_2 + ||Q||_2^2), unnormalized.
AdditivityReport zeta_additivity_check(const HermitianOperator& p, const HermitianOperator& q);

}  // namespace qf
