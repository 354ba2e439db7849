#include "qf/json_io.hpp"

#include <fstream>

namespace qf {

namespace {

json matrix_to_json(const cmat& m) {
  json re = json::array(), im = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json rrow = json::array(), irow = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      rrow.push_back(m(i, j).real());
      irow.push_back(m(i, j).imag());
    }
    re.push_back(std::move(rrow));
    im.push_back(std::move(irow));
  }
  return json{{"re", std::move(re)}, {"im", std::move(im)}};
}

cmat matrix_from_json(const json& j) {
  const json& re = j.at("re");
  const json& im = j.at("im");
  if (!re.is_array() || re.empty() || re.size() != im.size())
    throw argument_error("json matrix: re/im must be equal-sized row arrays");
  const std::size_t rows = re.size();
  const std::size_t cols = re[0].size();
  cmat m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    if (re[i].size() != cols || im[i].size() != cols)
      throw argument_error("json matrix: ragged rows");
    for (std::size_t k = 0; k < cols; ++k)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          cplx(re[i][k].get<double>(), im[i][k].get<double>());
  }
  return m;
}

}  // namespace

json to_json(const HermitianOperator& p) {
  json j = matrix_to_json(p.matrix());
  j["n_qubits"] = p.n_qubits();
  return j;
}

HermitianOperator operator_from_json(const json& j) {
  HermitianOperator p((matrix_from_json(j)));
  if (j.contains("n_qubits") && j.at("n_qubits").get<int>() != p.n_qubits())
    throw argument_error("json operator: n_qubits disagrees with the matrix size");
  return p;
}

json to_json(const StandardBasis& b) {
  json arr = json::array();
  for (int i = 0; i < 4; ++i) arr.push_back(matrix_to_json(cmat(b.element(i))));
  return arr;
}

StandardBasis basis_from_json(const json& j) {
  if (!j.is_array() || j.size() != 4)
    throw argument_error("json basis: expected an array of 4 matrices");
  std::array<Eigen::Matrix2cd, 4> els;
  for (int i = 0; i < 4; ++i) {
    const cmat m = matrix_from_json(j[static_cast<std::size_t>(i)]);
    if (m.rows() != 2 || m.cols() != 2) throw argument_error("json basis: elements must be 2x2");
    els[static_cast<std::size_t>(i)] = m;
  }
  return StandardBasis(els);
}

json to_json(const FourierExpansion& f) {
  json coeffs = json::array();
  for (Eigen::Index i = 0; i < f.coeffs().size(); ++i) coeffs.push_back(f.coeffs()[i]);
  return json{{"n_qubits", f.n_qubits()}, {"basis", to_json(f.basis())}, {"coeffs", std::move(coeffs)}};
}

FourierExpansion expansion_from_json(const json& j) {
  const int n = j.at("n_qubits").get<int>();
  const json& c = j.at("coeffs");
  if (n < 0 || !c.is_array() || static_cast<std::int64_t>(c.size()) != pow4(n))
    throw argument_error("json expansion: coefficient count must be 4^n");
  rvec coeffs(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) coeffs[static_cast<Eigen::Index>(i)] = c[i].get<double>();
  return FourierExpansion(n, basis_from_json(j.at("basis")), std::move(coeffs));
}

json state_json_depolarized(double epsilon) {
  return json{{"kind", "depolarized_epr"}, {"epsilon", epsilon}};
}

json state_json_raw(const DensityOperator& rho) {
  json j{{"kind", "raw"}};
  j["rho"] = matrix_to_json(rho.base().matrix());
  return j;
}

BipartiteState state_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "depolarized_epr")
    return depolarized_epr(j.at("epsilon").get<double>()).base();
  if (kind == "raw")
    return BipartiteState(DensityOperator(HermitianOperator(matrix_from_json(j.at("rho")))));
  throw argument_error("json state: unknown kind '" + kind + "'");
}

json to_json(const GaussianPolynomial& f) {
  json terms = json::array();
  for (const auto& [key, c] : f.terms()) {
    std::vector<int> dense(static_cast<std::size_t>(f.n_vars()), 0);
    for (const auto& [var, power] : GaussianPolynomial::unpack(key))
      dense[static_cast<std::size_t>(var - 1)] = power;
    terms.push_back(json{{"sigma", dense}, {"coeff", c}});
  }
  return json{{"n_vars", f.n_vars()}, {"terms", std::move(terms)}};
}

GaussianPolynomial polynomial_from_json(const json& j) {
  GaussianPolynomial f(j.at("n_vars").get<int>());
  for (const json& t : j.at("terms")) {
    const json& dense = t.at("sigma");
    if (static_cast<int>(dense.size()) != f.n_vars())
      throw argument_error("json polynomial: sigma length must equal n_vars");
    SparseIndex idx;
    for (std::size_t v = 0; v < dense.size(); ++v)
      if (const int p = dense[v].get<int>(); p != 0) idx.push_back({static_cast<int>(v) + 1, p});
    f.set_term(idx, t.at("coeff").get<double>());
  }
  return f;
}

json to_json(const RandomOperator& p) {
  json comps = json::object();
  for (const auto& [sigma, poly] : p.components()) comps[std::to_string(sigma)] = to_json(poly);
  return json{{"h_qubits", p.h_qubits()},
              {"n_vars", p.n_vars()},
              {"basis", to_json(p.basis())},
              {"components", std::move(comps)}};
}

RandomOperator random_operator_from_json(const json& j) {
  RandomOperator p(j.at("h_qubits").get<int>(), j.at("n_vars").get<int>(),
                   basis_from_json(j.at("basis")));
  for (const auto& [key, val] : j.at("components").items())
    p.set_component(std::stoll(key), polynomial_from_json(val));
  return p;
}

json to_json(const BinaryGame& g) {
  json xs = json::array(), ys = json::array();
  for (int x = 0; x < g.n_x(); ++x) xs.push_back(std::to_string(x));
  for (int y = 0; y < g.n_y(); ++y) ys.push_back(std::to_string(y));
  json mu = json::array();
  for (int x = 0; x < g.n_x(); ++x) {
    json row = json::array();
    for (int y = 0; y < g.n_y(); ++y) row.push_back(g.mu()(x, y));
    mu.push_back(std::move(row));
  }
  json v = json::array();
  for (int x = 0; x < g.n_x(); ++x) {
    json vy = json::array();
    for (int y = 0; y < g.n_y(); ++y) {
      json va = json::array();
      for (int a = 0; a < 2; ++a) {
        json vb = json::array();
        for (int b = 0; b < 2; ++b) vb.push_back(g.verdict(x, y, a, b));
        va.push_back(std::move(vb));
      }
      vy.push_back(std::move(va));
    }
    v.push_back(std::move(vy));
  }
  return json{
      {"X", std::move(xs)}, {"Y", std::move(ys)}, {"mu", std::move(mu)}, {"V", std::move(v)}};
}

BinaryGame game_from_json(const json& j) {
  const int nx = static_cast<int>(j.at("X").size());
  const int ny = static_cast<int>(j.at("Y").size());
  const json& mu_j = j.at("mu");
  if (static_cast<int>(mu_j.size()) != nx)
    throw argument_error("json game: mu must have one row per question in X");
  rmat mu(nx, ny);
  for (int x = 0; x < nx; ++x) {
    if (static_cast<int>(mu_j[static_cast<std::size_t>(x)].size()) != ny)
      throw argument_error("json game: mu rows must have one entry per question in Y");
    for (int y = 0; y < ny; ++y)
      mu(x, y) = mu_j[static_cast<std::size_t>(x)][static_cast<std::size_t>(y)].get<double>();
  }
  const json& v_j = j.at("V");
  std::vector<std::uint8_t> v;
  v.reserve(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) * 4);
  if (static_cast<int>(v_j.size()) != nx) throw argument_error("json game: V must be indexed x,y,a,b");
  for (int x = 0; x < nx; ++x)
    for (int y = 0; y < ny; ++y)
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
          v.push_back(static_cast<std::uint8_t>(v_j.at(static_cast<std::size_t>(x))
                                                    .at(static_cast<std::size_t>(y))
                                                    .at(static_cast<std::size_t>(a))
                                                    .at(static_cast<std::size_t>(b))
                                                    .get<int>()));
  return BinaryGame(nx, ny, std::move(mu), std::move(v));
}

json to_json(const Strategy& s) {
  json alice = json::array(), bob = json::array();
  for (const auto& op : s.alice) alice.push_back(to_json(op.base()));
  for (const auto& op : s.bob) bob.push_back(to_json(op.base()));
  return json{{"n_qubits", s.n_qubits}, {"alice", std::move(alice)}, {"bob", std::move(bob)}};
}

Strategy strategy_from_json(const json& j) {
  Strategy s;
  s.n_qubits = j.at("n_qubits").get<int>();
  for (const json& op : j.at("alice")) s.alice.emplace_back(operator_from_json(op));
  for (const json& op : j.at("bob")) s.bob.emplace_back(operator_from_json(op));
  return s;
}

json to_json(const PipelineCaps& caps) {
  return json{{"h", caps.h},
              {"n0", caps.n0},
              {"t", caps.t},
              {"d1", caps.d1},
              {"d2", caps.d2},
              {"max_qubits", caps.max_qubits},
              {"retries", caps.retries},
              {"term_budget", caps.term_budget},
              {"mc_samples", caps.mc_samples}};
}

PipelineCaps caps_from_json(const json& j) {
  PipelineCaps caps;
  if (j.contains("h")) caps.h = j.at("h").get<int>();
  if (j.contains("n0")) caps.n0 = j.at("n0").get<int>();
  if (j.contains("t")) caps.t = j.at("t").get<int>();
  if (j.contains("d1")) caps.d1 = j.at("d1").get<int>();
  if (j.contains("d2")) caps.d2 = j.at("d2").get<int>();
  if (j.contains("max_qubits")) caps.max_qubits = j.at("max_qubits").get<int>();
  if (j.contains("retries")) caps.retries = j.at("retries").get<int>();
  if (j.contains("term_budget")) caps.term_budget = j.at("term_budget").get<std::int64_t>();
  if (j.contains("mc_samples")) caps.mc_samples = j.at("mc_samples").get<std::int64_t>();
  return caps;
}

json to_json(const PipelineTrace& t) {
  json steps = json::array();
  for (const auto& step : t.steps) {
    json pairs = json::array();
    for (const auto& q : step.pairs)
      pairs.push_back(json{{"trace_p", q.trace_p},
                           {"trace_q", q.trace_q},
                           {"n2_p", q.n2_p},
                           {"n2_q", q.n2_q},
                           {"zeta_p", q.zeta_p},
                           {"zeta_q", q.zeta_q},
                           {"correlation", q.correlation}});
    steps.push_back(json{{"name", step.name},
                         {"elapsed_ms", step.elapsed_ms},
                         {"info", step.info},
                         {"pairs", std::move(pairs)}});
  }
  return json{{"derived", t.derived}, {"scaled_down", t.scaled_down}, {"steps", std::move(steps)}};
}

json to_json(const RemainderReport& r) {
  return json{
      {"lhs", r.lhs}, {"bound", r.bound}, {"constant", r.constant}, {"pass", r.pass}, {"seed", r.seed}};
}

json to_json(const HypercontractivityReport& r) {
  return json{{"n4_estimate", r.n4_estimate}, {"std_error", r.std_error},
              {"n2_exact", r.n2_exact},       {"margin_in_se", r.margin_in_se},
              {"pass", r.pass},               {"n_samples", r.n_samples},
              {"seed", r.seed}};
}

json to_json(const OptimizeResult& r) {
  return json{
      {"value", r.value}, {"sweep_values", r.sweep_values}, {"restart_values", r.restart_values}};
}

json to_json(const TransferResult& r) {
  return json{{"value_in", r.value_in},
              {"value_out", r.value_out},
              {"value_shift", std::abs(r.value_in - r.value_out)},
              {"drift_max", r.drift_max},
              {"dense_qubits", r.dense_qubits},
              {"trace", to_json(r.trace)}};
}

std::string dump_canonical(const json& j) { return j.dump(2) + "\n"; }

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw argument_error("cannot open " + path);
  json j;
  in >> j;
  return j;
}

void save_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw argument_error("cannot write " + path);
  out << dump_canonical(j);
}

}  // namespace qf
