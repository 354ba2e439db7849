#pragma once

#include <string>

#include "json.hpp"
#include "qf/fourier.hpp"
#include "qf/game.hpp"
#include "qf/gaussian.hpp"
#include "qf/operator.hpp"
#include "qf/pipeline.hpp"
#include "qf/random_operator.hpp"
#include "qf/state.hpp"
#include "qf/zeta.hpp"

namespace qf {

using json = nlohmann::json;

// Matrices are {"re": [[...]], "im": [[...]]} row-major; doubles round-trip
// bit-stable through the shortest-representation printer.
json to_json(const HermitianOperator& p);
HermitianOperator operator_from_json(const json& j);

json to_json(const StandardBasis& b);
StandardBasis basis_from_json(const json& j);

json to_json(const FourierExpansion& f);
FourierExpansion expansion_from_json(const json& j);

json state_json_depolarized(double epsilon);
json state_json_raw(const DensityOperator& rho);
BipartiteState state_from_json(const json& j);

json to_json(const GaussianPolynomial& f);
GaussianPolynomial polynomial_from_json(const json& j);

json to_json(const RandomOperator& p);
RandomOperator random_operator_from_json(const json& j);

json to_json(const BinaryGame& g);
BinaryGame game_from_json(const json& j);

json to_json(const Strategy& s);
Strategy strategy_from_json(const json& j);

json to_json(const PipelineCaps& caps);
PipelineCaps caps_from_json(const json& j);

json to_json(const PipelineTrace& t);
json to_json(const RemainderReport& r);
json to_json(const HypercontractivityReport& r);
json to_json(const OptimizeResult& r);   // strategy omitted, values only
json to_json(const TransferResult& r);   // transferred strategy omitted

// Canonical text form used by golden files and the CLI: 2-space indent and a
// trailing newline, keys sorted.
std::string dump_canonical(const json& j);
json load_json_file(const std::string& path);
void save_json_file(const std::string& path, const json& j);

}  // namespace qf
