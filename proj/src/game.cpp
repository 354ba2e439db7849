#include "qf/game.hpp"

#include <atomic>
#include <optional>
#include <thread>

#include "qf/channels.hpp"
#include "qf/fourier.hpp"

namespace qf {

namespace {

constexpr std::uint64_t kSaltOptInit = 0x6f707469ULL;
constexpr int kMaxQuestions = 16;

// prod over copies of the per-letter correlation coefficient
rvec sigma_weights(const std::array<double, 4>& c, int n) {
  rvec w(pow4(n));
  for (std::int64_t s = 0; s < w.size(); ++s) {
    double acc = 1.0;
    for (int i = 1; i <= n; ++i) acc *= c[static_cast<std::size_t>(FourierExpansion::sigma_digit(s, i))];
    w[s] = acc;
  }
  return w;
}

double table_value(const BinaryGame& g, const std::vector<rvec>& pa, const std::vector<rvec>& qb,
                   const rvec& w) {
  double omega = 0.0;
  for (int x = 0; x < g.n_x(); ++x) {
    for (int y = 0; y < g.n_y(); ++y) {
      const double mu = g.mu()(x, y);
      if (mu == 0.0) continue;
      const double c00 = (pa[static_cast<std::size_t>(x)].array() *
                          qb[static_cast<std::size_t>(y)].array() * w.array())
                             .sum();
      const double tp = pa[static_cast<std::size_t>(x)][0];
      const double tq = qb[static_cast<std::size_t>(y)][0];
      const double corr[2][2] = {{c00, tp - c00}, {tq - c00, 1.0 - tp - tq + c00}};
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
          if (g.verdict(x, y, a, b)) omega += mu * corr[a][b];
    }
  }
  return omega;
}

MeasurementOperator random_measurement(int n, std::uint64_t seed) {
  const CounterRng rng{seed};
  const std::int64_t d = pow2(n);
  cmat a(d, d);
  for (std::int64_t i = 0; i < d; ++i)
    for (std::int64_t j = 0; j < d; ++j)
      a(i, j) = cplx(rng.normal(static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(2 * j)),
                     rng.normal(static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(2 * j + 1)));
  const HermitianOperator h(0.5 * (a + a.adjoint()));
  return MeasurementOperator(
      apply_scalar_function(h, [](double t) { return std::clamp(t, 0.0, 1.0); }));
}

// exact maximizer of <P, G> over 0 <= P <= id: the indicator of spec(G) >= 0
MeasurementOperator positive_part_indicator(const FourierExpansion& grad) {
  const auto [evals, evecs] = spectral_decomposition(reconstruct(grad));
  cmat proj = cmat::Zero(evecs.rows(), evecs.cols());
  for (Eigen::Index k = 0; k < evals.size(); ++k)
    if (evals[k] >= 0.0) proj += evecs.col(k) * evecs.col(k).adjoint();
  return MeasurementOperator(HermitianOperator(std::move(proj)));
}

struct RestartOutcome {
  double value;
  Strategy strategy;
  std::vector<double> sweep_values;
};

}  // namespace

BinaryGame::BinaryGame(int n_x, int n_y, rmat mu, std::vector<std::uint8_t> verdicts)
    : n_x_(n_x), n_y_(n_y), mu_(std::move(mu)), v_(std::move(verdicts)) {
  if (n_x_ < 1 || n_y_ < 1) throw argument_error("game: question sets must be non-empty");
  if (mu_.rows() != n_x_ || mu_.cols() != n_y_)
    throw argument_error("game: distribution shape does not match the question sets");
  if (mu_.minCoeff() < 0.0) throw argument_error("game: negative question probability");
  if (std::abs(mu_.sum() - 1.0) > 1e-12)
    throw argument_error("game: question probabilities must sum to one");
  if (v_.size() != static_cast<std::size_t>(n_x_) * static_cast<std::size_t>(n_y_) * 4)
    throw argument_error("game: verdict table has the wrong size");
  for (std::uint8_t b : v_)
    if (b > 1) throw argument_error("game: verdicts must be 0 or 1");
}

BinaryGame chsh_game() {
  rmat mu = rmat::Constant(2, 2, 0.25);
  std::vector<std::uint8_t> v(16, 0);
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y)
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
          v[static_cast<std::size_t>(((x * 2 + y) * 2 + a) * 2 + b)] =
              static_cast<std::uint8_t>(((a ^ b) == (x & y)) ? 1 : 0);
  return BinaryGame(2, 2, std::move(mu), std::move(v));
}

BinaryGame trivial_game() {
  return BinaryGame(1, 1, rmat::Constant(1, 1, 1.0), std::vector<std::uint8_t>(4, 1));
}

double classical_value(const BinaryGame& g) {
  if (g.n_x() > kMaxQuestions || g.n_y() > kMaxQuestions)
    throw capacity_error("classical_value: question sets too large to enumerate");
  double best = 0.0;
  for (std::uint32_t assign = 0; assign < (1u << g.n_x()); ++assign) {
    double total = 0.0;
    for (int y = 0; y < g.n_y(); ++y) {
      double best_b = 0.0;
      for (int b = 0; b < 2; ++b) {
        double acc = 0.0;
        for (int x = 0; x < g.n_x(); ++x)
          acc += g.mu()(x, y) * g.verdict(x, y, (assign >> x) & 1, b);
        best_b = std::max(best_b, acc);
      }
      total += best_b;
    }
    best = std::max(best, total);
  }
  return best;
}

double strategy_value(const BinaryGame& g, const Strategy& s, const BipartiteState& psi) {
  const int n = s.n_qubits;
  if (n < 1 || n > kMaxQubits) throw argument_error("strategy_value: copy count out of range");
  if (static_cast<int>(s.alice.size()) != g.n_x() || static_cast<int>(s.bob.size()) != g.n_y())
    throw argument_error("strategy_value: operator counts do not match the question sets");
  const rvec w = sigma_weights(psi.correlation_coeffs(), n);
  std::vector<rvec> pa, qb;
  for (const auto& op : s.alice) {
    if (op.n_qubits() != n) throw argument_error("strategy_value: operator size differs from n");
    pa.push_back(fourier_expand(op.base(), psi.aligned_basis_a()).coeffs());
  }
  for (const auto& op : s.bob) {
    if (op.n_qubits() != n) throw argument_error("strategy_value: operator size differs from n");
    qb.push_back(fourier_expand(op.base(), psi.aligned_basis_b()).coeffs());
  }
  return table_value(g, pa, qb, w);
}

OptimizeResult optimize_strategy(const BinaryGame& g, const BipartiteState& psi, int n_qubits,
                                 int restarts, int iters, std::uint64_t seed, int threads) {
  if (n_qubits < 1 || n_qubits > kMaxQubits)
    throw argument_error("optimize_strategy: copy count out of range");
  if (restarts < 1 || iters < 1)
    throw argument_error("optimize_strategy: restarts and iterations must be positive");
  const StandardBasis basis_a = psi.aligned_basis_a();
  const StandardBasis basis_b = psi.aligned_basis_b();
  const rvec w = sigma_weights(psi.correlation_coeffs(), n_qubits);
  const int nx = g.n_x(), ny = g.n_y();

  const auto run_restart = [&](int r) {
    Strategy s;
    s.n_qubits = n_qubits;
    std::vector<rvec> pa, qb;
    for (int x = 0; x < nx; ++x) {
      s.alice.push_back(random_measurement(
          n_qubits, derive_seed(seed, mix3(kSaltOptInit, std::uint64_t(r), std::uint64_t(x)))));
      pa.push_back(fourier_expand(s.alice.back().base(), basis_a).coeffs());
    }
    for (int y = 0; y < ny; ++y) {
      s.bob.push_back(random_measurement(
          n_qubits,
          derive_seed(seed, mix3(kSaltOptInit, std::uint64_t(r), std::uint64_t(256 + y)))));
      qb.push_back(fourier_expand(s.bob.back().base(), basis_b).coeffs());
    }

    RestartOutcome out{table_value(g, pa, qb, w), std::move(s), {}};
    out.sweep_values.push_back(out.value);
    for (int it = 0; it < iters; ++it) {
      const double before = out.value;
      for (int x = 0; x < nx; ++x) {
        rvec grad = rvec::Zero(w.size());
        for (int y = 0; y < ny; ++y) {
          const double mu = g.mu()(x, y);
          if (mu == 0.0) continue;
          const double d00 = g.verdict(x, y, 0, 0) - g.verdict(x, y, 1, 0);
          const double d01 = g.verdict(x, y, 0, 1) - g.verdict(x, y, 1, 1);
          grad += mu * (d00 - d01) * qb[static_cast<std::size_t>(y)];
          grad[0] += mu * d01;
        }
        grad.array() *= w.array();
        out.strategy.alice[static_cast<std::size_t>(x)] =
            positive_part_indicator(FourierExpansion(n_qubits, basis_a, std::move(grad)));
        pa[static_cast<std::size_t>(x)] =
            fourier_expand(out.strategy.alice[static_cast<std::size_t>(x)].base(), basis_a).coeffs();
      }
      out.value = table_value(g, pa, qb, w);
      out.sweep_values.push_back(out.value);
      for (int y = 0; y < ny; ++y) {
        rvec grad = rvec::Zero(w.size());
        for (int x = 0; x < nx; ++x) {
          const double mu = g.mu()(x, y);
          if (mu == 0.0) continue;
          const double d00 = g.verdict(x, y, 0, 0) - g.verdict(x, y, 0, 1);
          const double d10 = g.verdict(x, y, 1, 0) - g.verdict(x, y, 1, 1);
          grad += mu * (d00 - d10) * pa[static_cast<std::size_t>(x)];
          grad[0] += mu * d10;
        }
        grad.array() *= w.array();
        out.strategy.bob[static_cast<std::size_t>(y)] =
            positive_part_indicator(FourierExpansion(n_qubits, basis_b, std::move(grad)));
        qb[static_cast<std::size_t>(y)] =
            fourier_expand(out.strategy.bob[static_cast<std::size_t>(y)].base(), basis_b).coeffs();
      }
      out.value = table_value(g, pa, qb, w);
      out.sweep_values.push_back(out.value);
      if (out.value - before <= 1e-14 * std::max(1.0, std::abs(out.value))) break;
    }
    return out;
  };

  std::vector<std::optional<RestartOutcome>> results(static_cast<std::size_t>(restarts));
  const int nw = std::max(1, std::min(resolve_threads(threads), restarts));
  std::atomic<int> next{0};
  const auto worker = [&]() {
    for (;;) {
      const int r = next.fetch_add(1);
      if (r >= restarts) return;
      results[static_cast<std::size_t>(r)] = run_restart(r);
    }
  };
  if (nw == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(nw));
    for (int t = 0; t < nw; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  OptimizeResult best;
  best.value = -1.0;
  for (int r = 0; r < restarts; ++r) {
    RestartOutcome& out = *results[static_cast<std::size_t>(r)];
    best.restart_values.push_back(out.value);
    if (out.value > best.value) {
      best.value = out.value;
      best.strategy = std::move(out.strategy);
      best.sweep_values = std::move(out.sweep_values);
    }
  }
  return best;
}

TransferResult evaluate_transfer(const BinaryGame& g, const Strategy& s,
                                 const PipelineParams& params) {
  if (static_cast<int>(s.alice.size()) != g.n_x() || static_cast<int>(s.bob.size()) != g.n_y())
    throw argument_error("evaluate_transfer: operator counts do not match the question sets");
  if (!(params.epsilon > 0.0 && params.epsilon < 1.0))
    throw argument_error("evaluate_transfer: epsilon must lie in (0,1)");

  std::vector<MeasurementOperator> p_list, q_list;
  for (int x = 0; x < g.n_x(); ++x) {
    for (int y = 0; y < g.n_y(); ++y) {
      p_list.push_back(s.alice[static_cast<std::size_t>(x)]);
      q_list.push_back(s.bob[static_cast<std::size_t>(y)]);
    }
  }
  PipelineParams run = params;
  run.n = s.n_qubits;
  run.delta = params.epsilon / 8.0;
  PipelineResult res = run_pipeline(p_list, q_list, run);

  TransferResult out;
  out.transferred.n_qubits = res.dense_qubits;
  for (int x = 0; x < g.n_x(); ++x)
    out.transferred.alice.push_back(res.p_out[static_cast<std::size_t>(x * g.n_y())]);
  for (int y = 0; y < g.n_y(); ++y)
    out.transferred.bob.push_back(res.q_out[static_cast<std::size_t>(y)]);
  out.value_in = strategy_value(g, s, params.state.base());
  out.value_out = strategy_value(g, out.transferred, params.state.base());
  out.drift_max = res.trace.steps.back().info.at("drift_max");
  out.dense_qubits = res.dense_qubits;
  out.trace = std::move(res.trace);
  return out;
}

}  // namespace qf
