// Regenerates the frozen reference outputs under golden/. Run from anywhere:
//   gen_golden [golden_dir]
// Refuses to write goldens that do not meet the shipped drift targets.

#include <filesystem>
#include <iostream>

#include "qf/game.hpp"
#include "qf/json_io.hpp"
#include "qf/pipeline.hpp"
#include "qf/zeta.hpp"

using namespace qf;

namespace {

// single tensor-basis pair (id + s3 x s1) / 2 on two qubits, written in the
// state's aligned bases so both sides correlate through the same letter
MeasurementOperator golden_operator(const StandardBasis& basis) {
  rvec coeffs = rvec::Zero(16);
  coeffs[0] = 0.5;
  coeffs[3 + 4 * 1] = 0.5;
  return MeasurementOperator(reconstruct(FourierExpansion(2, basis, coeffs)));
}

HermitianOperator seeded_hermitian(int n, std::uint64_t seed) {
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

int main(int argc, char** argv) {
  const std::filesystem::path dir = argc > 1 ? argv[1] : "golden";
  std::filesystem::create_directories(dir);

  const NoisyEprState st = depolarized_epr(0.3);

  // one-pair pipeline run at the shipped seed
  {
    PipelineParams params(st);
    params.n = 2;
    params.seed = 11;
    params.caps.h = 2;
    params.caps.n0 = 200;
    params.caps.t = 4;
    const MeasurementOperator p = golden_operator(st.base().aligned_basis_a());
    const MeasurementOperator q = golden_operator(st.base().aligned_basis_b());

    json manifest{{"state", json{{"kind", "depolarized_epr"}, {"epsilon", 0.3}}},
                  {"alice", json::array({to_json(p.base())})},
                  {"bob", json::array({to_json(q.base())})},
                  {"params",
                   json{{"delta", params.delta},
                        {"tau", params.tau},
                        {"epsilon", params.epsilon},
                        {"n", params.n},
                        {"seed", params.seed},
                        {"deterministic", true},
                        {"caps", to_json(params.caps)}}}};
    save_json_file((dir / "pipeline_manifest.json").string(), manifest);

    const PipelineResult res = run_pipeline({p}, {q}, params);
    const double drift = res.trace.steps.back().info.at("drift_max");
    if (drift >= 0.15) {
      std::cerr << "pipeline golden drift " << drift << " breaches 0.15\n";
      return 1;
    }
    save_json_file((dir / "pipeline_trace.json").string(), to_json(res.trace));
    std::cout << "pipeline golden: drift " << drift << ", dense qubits " << res.dense_qubits
              << "\n";
  }

  // CHSH strategy transfer at the shipped optimizer seed; both qubits must
  // stay influential or the transfer degenerates to a free-qubit blowup
  {
    const BinaryGame g = chsh_game();
    const OptimizeResult opt = optimize_strategy(g, st.base(), 2, 8, 40, 18);
    PipelineParams params(st);
    params.epsilon = 0.3;
    params.seed = 18;
    params.caps.h = 2;
    params.caps.n0 = 200;
    params.caps.t = 4;
    const TransferResult res = evaluate_transfer(g, opt.strategy, params);
    if (res.dense_qubits != 2) {
      std::cerr << "game golden kept " << res.dense_qubits << " dense qubits, want 2\n";
      return 1;
    }
    if (res.drift_max >= 0.2 || std::abs(res.value_in - res.value_out) >= 0.2) {
      std::cerr << "game golden drift " << res.drift_max << " or value shift breaches 0.2\n";
      return 1;
    }
    save_json_file((dir / "game_transfer_trace.json").string(), to_json(res.trace));
    json summary = to_json(res);
    save_json_file((dir / "game_transfer_summary.json").string(), summary);
    std::cout << "game golden: value " << res.value_in << " -> " << res.value_out << ", drift "
              << res.drift_max << "\n";
  }

  // Taylor remainder campaign frozen at the shipped constant
  {
    json instances = json::array();
    int passes = 0;
    for (int k = 0; k < 40; ++k) {
      const HermitianOperator p = seeded_hermitian(2, derive_seed(4, 700 + std::uint64_t(k)));
      const HermitianOperator q = seeded_hermitian(2, derive_seed(4, 800 + std::uint64_t(k)));
      const RemainderReport rep = taylor_remainder_check(p, q, 0.1, 50.0, derive_seed(4, std::uint64_t(k)));
      passes += rep.pass ? 1 : 0;
      instances.push_back(to_json(rep));
    }
    if (passes != 40) {
      std::cerr << "taylor calibration has " << (40 - passes) << " failing instances\n";
      return 1;
    }
    save_json_file((dir / "taylor_calibration.json").string(),
                   json{{"constant", 50.0}, {"lambda", 0.1}, {"instances", instances}});
    std::cout << "taylor calibration: 40/40 at constant 50\n";
  }

  std::cout << "golden files written to " << dir << "\n";
  return 0;
}
