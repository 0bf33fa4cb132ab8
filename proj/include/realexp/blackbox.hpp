#pragma once

#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "realexp/adapters.hpp"
#include "realexp/forest.hpp"

namespace realexp {

// Built-in reference models: deterministic desk-scale stand-ins for the deep
// models the pipeline normally explains. All score a numeric feature vector.
struct LinearModel {
  std::vector<double> w;
  double b = 0.0;
};
struct LogisticModel {
  std::vector<double> w;
  double b = 0.0;
};
struct LookupTreeModel {
  Tree tree;  // decision rules in the forest node encoding
};
using BuiltinModel = std::variant<LinearModel, LogisticModel, LookupTreeModel>;

double score_builtin(const BuiltinModel& model, std::span<const double> x);

BuiltinModel builtin_from_json(const nlohmann::json& spec);
nlohmann::json builtin_to_json(const BuiltinModel& model);

// Uniform access to the model under explanation. Subprocess endpoints speak
// the line protocol over stdio, Http endpoints over POST; builtins run
// in-process.
struct ModelEndpoint {
  enum class Kind { Builtin, Subprocess, Http };

  Kind kind = Kind::Builtin;
  BuiltinModel builtin = LinearModel{};
  std::string target;  // Subprocess: shell command; Http: URL
  double timeout_sec = 10.0;
  int batch_size = 64;

  static ModelEndpoint make_builtin(BuiltinModel model);
  static ModelEndpoint subprocess(std::string command, double timeout_sec = 10.0,
                                  int batch_size = 64);
  static ModelEndpoint http(std::string url, double timeout_sec = 10.0,
                            int batch_size = 64);
};

// Scores one payload per input, order-preserving. External endpoints chunk
// the batch at `batch_size`, retry a timed-out chunk up to 2 times, and
// reassemble responses in request order.
std::vector<double> score_batch(const ModelEndpoint& endpoint,
                                const std::vector<nlohmann::json>& instances,
                                unsigned threads = 1);

// Renders every masked instance to its wire payload and scores the batch:
// the Y^(k) vector in mask order.
std::vector<double> mask_and_score(const ModelEndpoint& endpoint,
                                   const AdaptedInstance& instance,
                                   const std::vector<Mask>& masks,
                                   unsigned threads = 1);

}  // namespace realexp
