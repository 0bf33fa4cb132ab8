#pragma once

#include <string>

#include <json.hpp>

#include "realexp/coalition.hpp"
#include "realexp/evaluation.hpp"
#include "realexp/forest.hpp"
#include "realexp/perturbation.hpp"

namespace realexp {

// Synthetic-game fixture: {"n": int, "values": {"<bitmask-as-decimal>": v}}
// covering all 2^n coalitions.
TableGame game_from_json(const nlohmann::json& doc);
nlohmann::json game_to_json(const TableGame& game);
TableGame load_game_fixture(const std::string& path);

// {"method","phi","phi_independent","phi_margin","labels"}
nlohmann::json attribution_to_json(const Attribution& attribution);

// {"n","lambda","seed","masks","scores"}
nlohmann::json perturbation_to_json(const PerturbationSet& design);
PerturbationSet perturbation_from_json(const nlohmann::json& doc);

nlohmann::json variance_to_json(const VarianceReport& report);

// Forest: {"n","params","baseline","trees":[<node>,...]} with nodes encoded
// {"f","t","l","r"} internal / {"p","c"} leaf. Round-trips are
// prediction-identical; fit-time gain totals are not carried.
nlohmann::json tree_node_to_json(const Tree& tree, int at);
Tree tree_from_json(const nlohmann::json& node);
nlohmann::json forest_to_json(const EnsembleForest& forest);
EnsembleForest forest_from_json(const nlohmann::json& doc);

nlohmann::json similarity_to_json(const SimilarityMatrix& s);
SimilarityMatrix similarity_from_json(const nlohmann::json& doc);

// Annotation file {"items":[int],"labels":[str]|null}
ExpertAnnotation annotation_from_json(const nlohmann::json& doc);
ExpertAnnotation load_annotation(const std::string& path);

nlohmann::json consistency_to_json(const ConsistencyReport& report,
                                   const std::string& expert_hash,
                                   const std::string& model_hash);

nlohmann::json load_json_file(const std::string& path);
void write_json_file(const nlohmann::json& doc, const std::string& path);

}  // namespace realexp
