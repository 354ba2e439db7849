#pragma once

#include <string>

#include "qf/channels.hpp"
#include "qf/random_operator.hpp"
#include "qf/zeta.hpp"

namespace qf {

struct PipelineCaps {
  int h = 2;
  int n0 = 200;
  int t = 4;
  int d1 = 6;
  int d2 = 2;
  int max_qubits = kMaxQubits;
  int retries = 3;
  std::int64_t term_budget = 2'000'000;
  std::int64_t mc_samples = 8192;
};

struct PipelineParams {
  explicit PipelineParams(NoisyEprState s) : state(std::move(s)) {}
  double delta = 0.01;
  double tau = 0.1;
  double epsilon = 0.3;
  int n = 1;  // state copies; operators live on n qubits
  NoisyEprState state;
  double smoothing_c = 1.0;
  PipelineCaps caps;
  std::uint64_t seed = 1;
  bool deterministic = true;  // zero out elapsed-time fields in the trace
};

// Degree / noise schedule for operator smoothing. The derived degree keeps
// the above-degree coefficient mass under delta; the noise level keeps the
// correlation shift under 2*delta*sqrt(Var*Var).
struct SmoothingSchedule {
  double derived_d1;
  int d1;
  double gamma1;
  bool clipped;
};
SmoothingSchedule smoothing_schedule(double delta, double rho, double c, int d1_cap);

struct GaussianSmoothingSchedule {
  double derived_d2;
  int d2;
  double gamma2;
  bool clipped;
};
GaussianSmoothingSchedule gaussian_smoothing_schedule(double delta, double rho, double c,
                                                      int d2_cap);

struct SmoothedPair {
  FourierExpansion p, q;
  SmoothingSchedule schedule;
};
SmoothedPair smooth_operators(const MeasurementOperator& p, const MeasurementOperator& q,
                              const BipartiteState& psi, double delta, double c, int d1_cap);

// Coefficient table split over a coordinate set: component sigma_h holds the
// sub-expansion on the remaining qubits (re-indexed in ascending order).
struct SplitExpansion {
  int n_qubits;             // original count
  std::vector<int> coords;  // the split-off set, ascending, 1-based
  std::map<std::int64_t, FourierExpansion> comps;
};

std::vector<int> influential_coordinates(const FourierExpansion& p, const FourierExpansion& q,
                                         int d1, double tau);
SplitExpansion split_by_coords(const FourierExpansion& f, const std::vector<int>& coords);
FourierExpansion unsplit(const SplitExpansion& s, const StandardBasis& basis);

struct RegularizeResult {
  std::vector<int> h_set;
  SplitExpansion p, q;
};
RegularizeResult regularize(const FourierExpansion& p1, const FourierExpansion& q1, int d1,
                            double tau);

// Basis letters at non-split qubits become Gaussian variables: letter b at
// remaining position j maps to variable 3(j-1)+b. Bob's coefficients absorb
// c_b/rho so that pair correlations transfer exactly.
std::pair<RandomOperator, RandomOperator> invariance_forward(const SplitExpansion& p,
                                                             const SplitExpansion& q,
                                                             const BipartiteState& psi);

// E of Tr((P(g) x Q(h)) psi^h) over the correlated pair: matching components
// and matching Hermite indices contribute coeff * coeff * c1^degree, weighted
// by the product of c over the component letters.
double pair_correlation(const RandomOperator& p, const RandomOperator& q,
                        const std::array<double, 4>& c);

// Monte-Carlo E[Tr zeta(P(g))] / 2^h, deterministic in (seed, n_samples).
double random_zeta_estimate(const RandomOperator& p, std::int64_t n_samples, std::uint64_t seed,
                            int threads = 0);

// Exact Hermite table (degree <= 2) of x -> f(Mx/||x||) for multilinear f;
// radial moments make the projection closed-form. Degree >= 3 inputs fall
// back to a dense monomial path gated by the term budget.
GaussianPolynomial reduce_polynomial(const GaussianPolynomial& f, const rmat& m,
                                     std::int64_t term_budget);
// Exact squared L2 norm of x -> f(Mx/||x||), including mass the projection drops.
double reduced_norm_sq(const GaussianPolynomial& f, const rmat& m);

struct ReductionSideChecks {
  double n2_before, n2_true, n2_projected;
  double trace_before, trace_after;
  double zeta_before, zeta_true;
};
struct ReductionPairChecks {
  ReductionSideChecks p, q;
  double corr_before, corr_projected;
  double corr_measured, corr_measured_se;
};
struct ReductionReport {
  int attempts = 0;
  bool accepted = false;
  double threshold;  // relaxed acceptance level actually used
  std::vector<ReductionPairChecks> pairs;
};
struct ReductionResult {
  std::vector<std::pair<RandomOperator, RandomOperator>> pairs;
  rmat m;
  ReductionReport report;
};
// Shared map M drawn once per attempt; measured checks decide acceptance and
// failures retry with a fresh draw. All attempts failing raises a stochastic
// error.
ReductionResult reduce_dimension(const std::vector<std::pair<RandomOperator, RandomOperator>>& in,
                                 const BipartiteState& psi, double delta, double alpha, int n0,
                                 std::uint64_t seed, const PipelineCaps& caps);

struct GaussianSmoothed {
  RandomOperator p, q;
  GaussianSmoothingSchedule schedule;
};
GaussianSmoothed smooth_random(const RandomOperator& p, const RandomOperator& q, double rho,
                               double delta, double c, int d2_cap);

// Every variable replaced by t fresh ones, then non-multilinear terms dropped.
RandomOperator multilinear_split(const RandomOperator& p, int t);

struct Multilinearized {
  RandomOperator p, q;
  int t;
  double derived_t;
  bool clipped;
};
Multilinearized multilinearize(const RandomOperator& p, const RandomOperator& q, double tau,
                               int t_cap);

// Dense operator plus a count of trailing identity qubits that are tracked
// but never materialized.
struct EmbeddedOperator {
  FourierExpansion expansion;
  std::int64_t identity_qubits;
};
struct BackwardResult {
  std::vector<std::pair<EmbeddedOperator, EmbeddedOperator>> pairs;
  std::vector<int> active_vars;  // ascending; variable k occupies qubit h + rank(k)
};
BackwardResult invariance_backward(const std::vector<std::pair<RandomOperator, RandomOperator>>& in,
                                   const BipartiteState& psi, int max_qubits);

struct StepQuantities {
  double trace_p, trace_q;  // normalized traces
  double n2_p, n2_q;
  double zeta_p, zeta_q;  // normalized distance-squared to the measurement set
  double correlation;
};
struct StepRecord {
  std::string name;
  std::vector<StepQuantities> pairs;
  std::map<std::string, double> info;
  double elapsed_ms = 0.0;
};
struct PipelineTrace {
  std::map<std::string, double> derived;
  std::vector<StepRecord> steps;
  bool scaled_down = false;
};

struct PipelineResult {
  std::vector<MeasurementOperator> p_out, q_out;
  int dense_qubits;            // qubits actually materialized
  std::int64_t logical_qubits;  // h + n0*t bookkeeping size
  PipelineTrace trace;
};

PipelineResult run_pipeline(const std::vector<MeasurementOperator>& p_list,
                            const std::vector<MeasurementOperator>& q_list,
                            const PipelineParams& params);

}  // namespace qf
