#include "realexp/json_io.hpp"

#include <fstream>

namespace realexp {

nlohmann::json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open file: " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("invalid JSON in " + path + ": " + e.what());
  }
  return doc;
}

void write_json_file(const nlohmann::json& doc, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write file: " + path);
  out << doc.dump(2) << '\n';
}

TableGame game_from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("n") || !doc.contains("values")) {
    throw ValidationError("game fixture needs {\"n\", \"values\"}");
  }
  const int n = doc.at("n").get<int>();
  if (n < 1 || n > TableGame::kMaxFeatures) {
    throw ValidationError("game fixture n out of range");
  }
  const std::size_t size = std::size_t{1} << n;
  std::vector<double> values(size);
  std::vector<bool> seen(size, false);
  for (const auto& [key, value] : doc.at("values").items()) {
    std::size_t mask = 0;
    try {
      mask = std::stoull(key);
    } catch (const std::exception&) {
      throw ValidationError("game fixture key is not a bitmask: " + key);
    }
    if (mask >= size) {
      throw ValidationError("game fixture key out of range: " + key);
    }
    values[mask] = value.get<double>();
    seen[mask] = true;
  }
  for (std::size_t mask = 0; mask < size; ++mask) {
    if (!seen[mask]) {
      throw ValidationError("game fixture misses coalition " +
                            std::to_string(mask));
    }
  }
  return TableGame(n, std::move(values));
}

nlohmann::json game_to_json(const TableGame& game) {
  nlohmann::json values = nlohmann::json::object();
  for (std::size_t mask = 0; mask < game.table().size(); ++mask) {
    values[std::to_string(mask)] = game.table()[mask];
  }
  return nlohmann::json{{"n", game.arity()}, {"values", values}};
}

TableGame load_game_fixture(const std::string& path) {
  return game_from_json(load_json_file(path));
}

nlohmann::json attribution_to_json(const Attribution& attribution) {
  nlohmann::json out;
  out["method"] = method_name(attribution.method);
  out["phi"] = attribution.phi;
  out["phi_independent"] = attribution.phi_independent
                               ? nlohmann::json(*attribution.phi_independent)
                               : nlohmann::json(nullptr);
  out["phi_margin"] = attribution.phi_margin
                          ? nlohmann::json(*attribution.phi_margin)
                          : nlohmann::json(nullptr);
  out["labels"] = attribution.labels ? nlohmann::json(*attribution.labels)
                                     : nlohmann::json(nullptr);
  return out;
}

nlohmann::json perturbation_to_json(const PerturbationSet& design) {
  nlohmann::json out;
  out["n"] = design.n();
  out["lambda"] = design.lambda();
  out["seed"] = design.seed();
  nlohmann::json masks = nlohmann::json::array();
  for (const Mask& mask : design.masks()) {
    masks.push_back(std::vector<int>(mask.mu.begin(), mask.mu.end()));
  }
  out["masks"] = masks;
  out["scores"] = design.scores() ? nlohmann::json(*design.scores())
                                  : nlohmann::json(nullptr);
  return out;
}

PerturbationSet perturbation_from_json(const nlohmann::json& doc) {
  const int n = doc.at("n").get<int>();
  const double lambda = doc.at("lambda").get<double>();
  const std::uint64_t seed = doc.value("seed", std::uint64_t{0});
  std::vector<Mask> masks;
  for (const auto& row : doc.at("masks")) {
    Mask mask;
    for (const auto& bit : row) {
      const int value = bit.get<int>();
      if (value != 0 && value != 1) {
        throw ValidationError("mask entries must be 0 or 1");
      }
      mask.mu.push_back(static_cast<std::uint8_t>(value));
    }
    if (mask.arity() != n) {
      throw ValidationError("mask arity does not match n");
    }
    masks.push_back(std::move(mask));
  }
  std::optional<std::vector<double>> scores;
  if (doc.contains("scores") && !doc.at("scores").is_null()) {
    scores = doc.at("scores").get<std::vector<double>>();
  }
  return PerturbationSet(std::move(masks), std::move(scores), lambda, seed);
}

nlohmann::json variance_to_json(const VarianceReport& report) {
  return nlohmann::json{{"analytic_fixed", report.analytic_fixed},
                        {"analytic_random", report.analytic_random},
                        {"analytic_mc", report.analytic_mc},
                        {"empirical_fixed", report.empirical_fixed},
                        {"empirical_random", report.empirical_random},
                        {"empirical_mc", report.empirical_mc},
                        {"n", report.n},
                        {"alpha", report.alpha},
                        {"sigma_q2", report.sigma_q2},
                        {"sample_count", report.sample_count},
                        {"seed", report.seed},
                        {"ordering_inverted", report.ordering_inverted}};
}

nlohmann::json tree_node_to_json(const Tree& tree, int at) {
  const TreeNode& node = tree.nodes[static_cast<std::size_t>(at)];
  nlohmann::json out;
  if (node.is_leaf()) {
    out["p"] = node.prediction;
    out["c"] = node.count;
    return out;
  }
  out["f"] = node.feature;
  out["t"] = node.threshold;
  out["l"] = tree_node_to_json(tree, node.left);
  out["r"] = tree_node_to_json(tree, node.right);
  return out;
}

namespace {

void parse_tree_node(const nlohmann::json& node, Tree& tree) {
  const int at = static_cast<int>(tree.nodes.size());
  tree.nodes.emplace_back();
  if (node.contains("p")) {
    tree.nodes[static_cast<std::size_t>(at)].prediction =
        node.at("p").get<double>();
    tree.nodes[static_cast<std::size_t>(at)].count = node.value("c", 1);
    return;
  }
  if (!node.contains("f") || !node.contains("t") || !node.contains("l") ||
      !node.contains("r")) {
    throw ValidationError("tree node needs {f,t,l,r} or {p,c}");
  }
  const int feature = node.at("f").get<int>();
  const double threshold = node.at("t").get<double>();
  parse_tree_node(node.at("l"), tree);
  const int left = at + 1;
  const int right = static_cast<int>(tree.nodes.size());
  parse_tree_node(node.at("r"), tree);
  TreeNode& parsed = tree.nodes[static_cast<std::size_t>(at)];
  parsed.feature = feature;
  parsed.threshold = threshold;
  parsed.left = left;
  parsed.right = right;
}

}  // namespace

Tree tree_from_json(const nlohmann::json& node) {
  Tree tree;
  parse_tree_node(node, tree);
  return tree;
}

nlohmann::json forest_to_json(const EnsembleForest& forest) {
  nlohmann::json out;
  out["n"] = forest.feature_count();
  out["params"] = nlohmann::json{{"tree_count", forest.params().tree_count},
                                 {"max_depth", forest.params().max_depth},
                                 {"min_leaf", forest.params().min_leaf},
                                 {"seed", forest.params().seed}};
  out["baseline"] = forest.baseline();
  nlohmann::json trees = nlohmann::json::array();
  for (std::size_t t = 0; t < forest.trees().size(); ++t) {
    trees.push_back(tree_node_to_json(forest.trees()[t], 0));
  }
  out["trees"] = trees;
  return out;
}

EnsembleForest forest_from_json(const nlohmann::json& doc) {
  const int n = doc.at("n").get<int>();
  const auto& params_doc = doc.at("params");
  ForestParams params;
  params.tree_count = params_doc.at("tree_count").get<int>();
  params.max_depth = params_doc.at("max_depth").get<int>();
  params.min_leaf = params_doc.at("min_leaf").get<int>();
  params.seed = params_doc.at("seed").get<std::uint64_t>();
  std::vector<Tree> trees;
  for (const auto& node : doc.at("trees")) {
    trees.push_back(tree_from_json(node));
  }
  return EnsembleForest(n, params, std::move(trees),
                        doc.at("baseline").get<std::vector<double>>());
}

nlohmann::json similarity_to_json(const SimilarityMatrix& s) {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < s.size(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int j = 0; j < s.size(); ++j) row.push_back(s.at(i, j));
    rows.push_back(row);
  }
  return rows;
}

SimilarityMatrix similarity_from_json(const nlohmann::json& doc) {
  std::vector<std::vector<double>> rows;
  for (const auto& row : doc) {
    rows.push_back(row.get<std::vector<double>>());
  }
  return SimilarityMatrix::from_rows(rows);
}

ExpertAnnotation annotation_from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("items")) {
    throw ValidationError("annotation needs {\"items\": [int]}");
  }
  return ExpertAnnotation(doc.at("items").get<std::vector<int>>());
}

ExpertAnnotation load_annotation(const std::string& path) {
  return annotation_from_json(load_json_file(path));
}

nlohmann::json consistency_to_json(const ConsistencyReport& report,
                                   const std::string& expert_hash,
                                   const std::string& model_hash) {
  return nlohmann::json{{"match_count", report.match_count},
                        {"accuracy", report.accuracy},
                        {"tau", report.tau},
                        {"tau_defined", report.tau_defined},
                        {"concordant", report.concordant},
                        {"discordant", report.discordant},
                        {"expert_hash", expert_hash},
                        {"model_hash", model_hash}};
}

}  // namespace realexp
