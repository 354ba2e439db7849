#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qf/operator.hpp"
#include "qf/pipeline.hpp"
#include "qf/state.hpp"

namespace qf {

// One-round two-player game with binary answers. The verdict table is stored
// flat as v[((x*|Y| + y)*2 + a)*2 + b] with 0/1 entries.
class BinaryGame {
 public:
  BinaryGame(int n_x, int n_y, rmat mu, std::vector<std::uint8_t> verdicts);

  int n_x() const { return n_x_; }
  int n_y() const { return n_y_; }
  const rmat& mu() const { return mu_; }
  const std::vector<std::uint8_t>& verdicts() const { return v_; }
  // questions and answers are 0-based
  int verdict(int x, int y, int a, int b) const {
    return v_[static_cast<std::size_t>(((x * n_y_ + y) * 2 + a) * 2 + b)];
  }

 private:
  int n_x_, n_y_;
  rmat mu_;
  std::vector<std::uint8_t> v_;
};

BinaryGame chsh_game();
BinaryGame trivial_game();

// Best value over deterministic classical strategies. Question sets are
// limited to 16 a side; beyond that the enumeration is refused.
double classical_value(const BinaryGame& g);

// Projective answers are not required: any operators in [0, id] define a
// strategy, with the outcome-1 element implied as the complement.
struct Strategy {
  int n_qubits = 0;
  std::vector<MeasurementOperator> alice;  // outcome 0, one per x
  std::vector<MeasurementOperator> bob;    // outcome 0, one per y
};

// Winning probability when both players measure n_qubits copies of psi.
double strategy_value(const BinaryGame& g, const Strategy& s, const BipartiteState& psi);

struct OptimizeResult {
  Strategy strategy;
  double value = 0.0;
  std::vector<double> sweep_values;    // winning restart, one entry per half-sweep
  std::vector<double> restart_values;  // final value of every restart
};

// Alternating best-response ascent from random starts. Each half-sweep
// replaces one player's operators by the exact maximizer given the other's,
// so the value never decreases along a restart. Restarts run in parallel on
// derived seeds; the best final value wins, lowest restart index on ties.
OptimizeResult optimize_strategy(const BinaryGame& g, const BipartiteState& psi, int n_qubits,
                                 int restarts, int iters, std::uint64_t seed, int threads = 0);

struct TransferResult {
  double value_in = 0.0;    // strategy value before the pipeline
  double value_out = 0.0;   // value of the rounded, transferred strategy
  double drift_max = 0.0;   // largest per-pair correlation drift
  Strategy transferred;
  int dense_qubits = 0;
  PipelineTrace trace;
};

// Pushes one strategy through the whole pipeline: the question-indexed
// operators are flattened into one list per player (Alice x-major, Bob
// cycled), processed jointly, and reassembled into a strategy on the dense
// output qubits. The pipeline's step budget delta is epsilon/8.
TransferResult evaluate_transfer(const BinaryGame& g, const Strategy& s,
                                 const PipelineParams& params);

}  // namespace qf
