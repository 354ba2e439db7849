#pragma once

#include "qf/fourier.hpp"
#include "qf/state.hpp"

namespace qf {

// Scales coefficient sigma by rho^{|sigma|} (depolarizing semigroup).
FourierExpansion noise_operator(const FourierExpansion& f, double rho);

// Unique X with PX + XP = Q, via the eigenbasis of P. Throws a singularity
// error when some eigenvalue pair of P sums to (near) zero.
HermitianOperator lyapunov_solve(const HermitianOperator& p, const HermitianOperator& q);

// T(Q) on Alice's side, defined by Tr((M x Q) psi) = <M, T(Q)>_{psi_A} with
// <P,Q>_phi = Tr((P Q + Q P) phi) / 2. Q must be a single-qubit operator.
HermitianOperator markov_superoperator(const BipartiteState& psi, const HermitianOperator& q);

// Sum over sigma of c_sigma * P^(sigma) * Q^(sigma) over n state copies;
// both expansions must be in psi's aligned bases and live on n qubits each.
double correlation_value(const FourierExpansion& p, const FourierExpansion& q,
                         const BipartiteState& psi, int n_copies);

// Noise level gamma = C*(1-rho)*eps/ln(1/eps) that keeps correlation drift
// below 2*eps*sqrt(Var P * Var Q). Requires 0 < eps < 1.
double tsmooth_gamma(double rho, double epsilon, double c = 1.0);

}  // namespace qf
