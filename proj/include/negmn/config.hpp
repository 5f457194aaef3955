#pragma once

#include <string>

#include <json.hpp>

#include "negmn/dominance.hpp"
#include "negmn/estimators.hpp"
#include "negmn/model.hpp"
#include "negmn/nmpredict.hpp"
#include "negmn/predictive.hpp"
#include "negmn/quadrature.hpp"

namespace negmn::config {

using nlohmann::json;

// every config carries "schema": 1; unknown versions are refused
void require_schema(const json& j);

ModelSpec spec_from_json(const json& j);
json spec_to_json(const ModelSpec& spec);

TableModel table_from_json(const json& j, const ModelSpec& spec);
json table_to_json(const TableModel& tm);

LossWeights loss_from_json(const json& j, const ModelSpec& spec);
json loss_to_json(const LossWeights& w);

DirichletPriorSpec dirichlet_from_json(const json& j, const ModelSpec& spec);
json dirichlet_to_json(const DirichletPriorSpec& p);

ShrinkagePriorSpec shrinkage_from_json(const json& j, const ModelSpec& spec);
json shrinkage_to_json(const ShrinkagePriorSpec& p);

QuadratureSpec quad_from_json(const json& j);
json quad_to_json(const QuadratureSpec& q);

ProbParam prob_from_json(const json& j, const ModelSpec& spec);
json prob_to_json(const ProbParam& p);

// CLI entry point: parses argv, dispatches the subcommand, returns the exit
// code (0 success, 1 validation error, 2 numerical failure).
int cli_main(int argc, const char* const* argv);

}  // namespace negmn::config
