#include "realexp/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <set>

#include "realexp/json_io.hpp"
#include "realexp/rng.hpp"

namespace realexp {

namespace {

AdaptedInstance instance_from_json(const nlohmann::json& doc) {
  const Modality modality =
      modality_from_name(doc.at("modality").get<std::string>());

  std::optional<std::vector<std::string>> labels;
  if (doc.contains("labels") && !doc.at("labels").is_null()) {
    labels = doc.at("labels").get<std::vector<std::string>>();
  }

  if (modality == Modality::Tabular) {
    std::vector<double> columns;
    if (doc.contains("csv")) {
      // Header line gives labels; the selected row gives column values.
      std::ifstream in(doc.at("csv").get<std::string>());
      if (!in) {
        throw ValidationError("cannot open CSV: " +
                              doc.at("csv").get<std::string>());
      }
      const int want_row = doc.value("row", 0);
      std::string line;
      std::vector<std::string> header;
      int data_row = 0;
      bool found = false;
      bool first = true;
      while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::size_t start = 0;
        while (true) {
          const std::size_t comma = line.find(',', start);
          cells.push_back(line.substr(start, comma - start));
          if (comma == std::string::npos) break;
          start = comma + 1;
        }
        if (first) {
          header = cells;
          first = false;
          continue;
        }
        if (data_row == want_row) {
          for (const std::string& cell : cells) {
            try {
              columns.push_back(std::stod(cell));
            } catch (const std::exception&) {
              throw ValidationError("non-numeric CSV cell: " + cell);
            }
          }
          found = true;
          break;
        }
        ++data_row;
      }
      if (!found) throw ValidationError("CSV row out of range");
      if (!labels && !header.empty()) labels = header;
    } else {
      columns = doc.at("columns").get<std::vector<double>>();
    }
    std::vector<double> baseline;
    if (doc.contains("baseline") && !doc.at("baseline").is_null()) {
      baseline = doc.at("baseline").get<std::vector<double>>();
    }
    return AdaptedInstance::tabular(std::move(columns), std::move(baseline),
                                    std::move(labels));
  }

  if (modality == Modality::Text) {
    std::vector<std::string> tokens;
    if (doc.contains("tokens_file")) {
      tokens = load_json_file(doc.at("tokens_file").get<std::string>())
                   .get<std::vector<std::string>>();
    } else {
      tokens = doc.at("tokens").get<std::vector<std::string>>();
    }
    return AdaptedInstance::text(std::move(tokens));
  }

  const std::string image_path = doc.at("image").get<std::string>();
  ImageData image = read_pnm(image_path);
  std::vector<int> segments;
  if (doc.contains("grid")) {
    segments = grid_segment(image.width, image.height,
                            doc.at("grid").at("rows").get<int>(),
                            doc.at("grid").at("cols").get<int>());
  } else {
    const SegmentMap map =
        load_segment_map(doc.at("segments").get<std::string>());
    if (map.width != image.width || map.height != image.height) {
      throw ValidationError("segment map does not match image dimensions");
    }
    segments = map.labels;
  }
  const MaskFill fill = doc.value("fill", std::string("mean")) == "black"
                            ? MaskFill::Black
                            : MaskFill::ChannelMean;
  return AdaptedInstance::from_image(std::move(image), std::move(segments),
                                     image_path, fill);
}

ModelEndpoint endpoint_from_json(const nlohmann::json& doc) {
  const std::string kind = doc.at("kind").get<std::string>();
  ModelEndpoint endpoint;
  if (kind == "builtin") {
    endpoint = ModelEndpoint::make_builtin(builtin_from_json(doc.at("model")));
  } else if (kind == "subprocess") {
    endpoint.kind = ModelEndpoint::Kind::Subprocess;
    endpoint.target = doc.at("command").get<std::string>();
  } else if (kind == "http") {
    endpoint.kind = ModelEndpoint::Kind::Http;
    endpoint.target = doc.at("url").get<std::string>();
  } else {
    throw ValidationError("unknown endpoint kind: " + kind);
  }
  endpoint.timeout_sec = doc.value("timeout_sec", 10.0);
  endpoint.batch_size = doc.value("batch_size", 64);
  return endpoint;
}

PermutationMode perm_mode_from_json(const nlohmann::json& doc,
                                    std::uint64_t default_seed) {
  const std::string mode = doc.at("mode").get<std::string>();
  if (mode == "exhaustive") return Exhaustive{};
  if (mode == "sampled") {
    Sampled sampled;
    sampled.count = doc.at("count").get<std::uint64_t>();
    sampled.seed = doc.value("seed", default_seed);
    return sampled;
  }
  throw ValidationError("unknown permutation mode: " + mode);
}

// Rethrows the current Error with a step tag, preserving its type (and so
// the CLI exit code).
[[noreturn]] void rethrow_tagged(const std::string& step) {
  try {
    throw;
  } catch (const CapacityError& e) {
    throw CapacityError(step + ": " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(step + ": " + e.what());
  } catch (const ProtocolError& e) {
    throw ProtocolError(step + ": " + e.what());
  } catch (const TransportError& e) {
    throw TransportError(step + ": " + e.what());
  } catch (const EvaluationError& e) {
    throw EvaluationError(step + ": " + e.what());
  }
}

ImportanceReport explain_with_policy(const RunConfig& config,
                                     const MaskPolicy& policy,
                                     std::uint64_t seed, unsigned threads) {
  const auto started = std::chrono::steady_clock::now();
  const int n = config.instance.n;
  if (n < 1) throw ValidationError("instance must expose n >= 1 features");
  if (config.sample_count < 1) throw ValidationError("need K >= 1");

  // Step 1: perturbation masks.
  std::vector<Mask> masks;
  try {
    MaskPolicy effective = policy;
    if (std::holds_alternative<FixedCount>(policy) &&
        static_cast<int>(std::floor(config.alpha * n)) < 1) {
      // Too few blocks for a fixed masked count; fall back to Bernoulli so
      // tiny instances (n = 1..3 at alpha = 0.3) remain explainable.
      effective = Bernoulli{};
    }
    masks = generate_masks(n, config.sample_count, config.alpha, effective,
                           seed);
  } catch (const Error&) {
    rethrow_tagged("perturb");
  }

  // Step 2: re-pass the model.
  std::vector<double> scores;
  try {
    scores = mask_and_score(config.endpoint, config.instance, masks, threads);
  } catch (const Error&) {
    rethrow_tagged("score");
  }

  // Step 3: similarity weights and the weighted design.
  PerturbationSet design = [&] {
    try {
      return build_design(masks, scores, config.lambda, seed);
    } catch (const Error&) {
      rethrow_tagged("weight");
    }
  }();

  // Step 4: surrogate forest on the first 80% of masks; the tail is the
  // held-out fidelity split.
  const int rows = design.sample_count();
  int train_rows = rows - rows / 5;
  if (train_rows < 2 * config.forest.min_leaf) train_rows = rows;
  ForestParams params = config.forest;
  params.seed = seed;

  ImportanceReport report;
  std::optional<EnsembleForest> fitted_forest;
  try {
    PerturbationSet train =
        train_rows == rows
            ? design
            : build_design(
                  std::vector<Mask>(masks.begin(), masks.begin() + train_rows),
                  std::vector<double>(scores.begin(),
                                      scores.begin() + train_rows),
                  config.lambda, seed);
    auto [fitted, fit_report] = fit(train, params, threads);
    fitted_forest.emplace(std::move(fitted));
    report.fit = std::move(fit_report);
  } catch (const Error&) {
    rethrow_tagged("fit");
  }
  const EnsembleForest& forest = *fitted_forest;

  if (train_rows < rows) {
    std::vector<double> actual(scores.begin() + train_rows, scores.end());
    std::vector<double> predicted;
    predicted.reserve(actual.size());
    for (int k = train_rows; k < rows; ++k) {
      predicted.push_back(forest.predict(design.design_row(k)));
    }
    const R2Result holdout = r_squared(actual, predicted);
    report.r2_holdout = holdout.value;
    report.holdout_degenerate = holdout.degenerate;
  } else {
    report.r2_holdout = report.fit.r2_train;
    report.holdout_degenerate = true;
  }

  // Similarity: injected for synthetic studies, otherwise estimated from the
  // run's own design.
  SimilarityMatrix similarity(1);
  try {
    if (config.injected_similarity) {
      if (config.injected_similarity->size() != n) {
        throw ValidationError("injected similarity size must match n");
      }
      similarity = *config.injected_similarity;
      report.similarity_source = "injected";
    } else if (n >= 2) {
      similarity = estimate_similarity(design);
      report.similarity_source = "estimated";
    } else {
      similarity = SimilarityMatrix(1);
      report.similarity_source = "identity";
    }
  } catch (const Error&) {
    rethrow_tagged("similarity");
  }

  // Step 5: attribute over the surrogate's coalition values. In design
  // space the explained instance is the all-ones row (every block kept,
  // weight 1) and the baseline is the masked encoding 0.
  try {
    const SurrogateValue value(
        forest, std::vector<double>(static_cast<std::size_t>(n), 1.0));
    switch (config.method) {
      case AttributionMethod::ExactShapley:
        report.attribution = exact_shapley(value, n, threads);
        break;
      case AttributionMethod::PermSampledShapley: {
        const PermutationMode mode = config.perm_mode.value_or(
            n <= kExhaustivePermutationCap
                ? PermutationMode(Exhaustive{})
                : PermutationMode(Sampled{5000, seed}));
        report.attribution = permutation_shapley(value, n, mode);
        break;
      }
      case AttributionMethod::RealExpDecoupled:
        report.attribution = realexp_decoupled(value, n, similarity);
        break;
      case AttributionMethod::RealExpPermutation: {
        const PermutationMode mode = config.perm_mode.value_or(
            n <= kExhaustivePermutationCap
                ? PermutationMode(Exhaustive{})
                : PermutationMode(Sampled{5000, seed}));
        report.attribution = realexp_permutation(value, n, similarity, mode);
        break;
      }
      case AttributionMethod::TreeGain:
        report.attribution = tree_gain_importance(forest);
        break;
    }
  } catch (const Error&) {
    rethrow_tagged("attribute");
  }

  if (config.instance.labels) report.attribution.labels = config.instance.labels;
  report.attribution.validate();
  report.ranking = ranking_of(report.attribution.phi);
  report.similarity = similarity;
  report.config_echo = config.echo;
  report.timing_ms =
      std::chrono::duration<double, std::milli>(
          std::chrono::steady_clock::now() - started)
          .count();
  return report;
}

}  // namespace

RunConfig config_from_json(const nlohmann::json& doc) {
  RunConfig config;
  config.endpoint = endpoint_from_json(doc.at("endpoint"));
  config.instance = instance_from_json(doc.at("instance"));
  config.sample_count = doc.value("K", kDefaultSampleCount);
  config.alpha = doc.value("alpha", kDefaultAlpha);
  config.lambda = doc.value("lambda", kDefaultLambda);
  config.forest.tree_count = doc.value("S", 50);
  if (doc.contains("forest")) {
    config.forest.max_depth = doc.at("forest").value("max_depth", 12);
    config.forest.min_leaf = doc.at("forest").value("min_leaf", 2);
  }
  config.method = method_from_name(
      doc.value("method", std::string("realexp_decoupled")));
  config.seed = doc.value("seed", std::uint64_t{0});
  if (doc.contains("perm")) {
    config.perm_mode = perm_mode_from_json(doc.at("perm"), config.seed);
  }
  if (doc.contains("similarity") && !doc.at("similarity").is_null()) {
    config.injected_similarity = similarity_from_json(doc.at("similarity"));
  }
  config.sigma_q2 = doc.value("sigma_q2", 0.05);
  config.top_k = doc.value("top_k", 5);
  config.echo = doc;
  return config;
}

RunConfig load_config(const std::string& path) {
  return config_from_json(load_json_file(path));
}

nlohmann::json report_to_json(const ImportanceReport& report) {
  nlohmann::json fit;
  fit["r2_train"] = report.fit.r2_train;
  fit["r2_holdout"] = report.r2_holdout;
  fit["holdout_degenerate"] = report.holdout_degenerate;
  fit["per_tree_depth"] = report.fit.per_tree_depth;
  fit["oob_available"] = report.fit.oob_available;
  fit["degenerate_targets"] = report.fit.degenerate_targets;

  nlohmann::json out;
  out["attribution"] = attribution_to_json(report.attribution);
  out["ranking"] = report.ranking;
  out["fit"] = fit;
  out["similarity_source"] = report.similarity_source;
  out["similarity"] = similarity_to_json(report.similarity);
  out["config"] = report.config_echo;
  out["timing_ms"] = report.timing_ms;
  return out;
}

ImportanceReport explain(const RunConfig& config, unsigned threads) {
  return explain_with_policy(config, FixedCount{}, config.seed, threads);
}

nlohmann::json stability_to_json(const StabilityReport& report) {
  return nlohmann::json{{"repeats", report.repeats},
                        {"top_k", report.top_k},
                        {"jaccard_fixed", report.jaccard_fixed},
                        {"jaccard_bernoulli", report.jaccard_bernoulli},
                        {"jaccard_mc", report.jaccard_mc}};
}

StabilityReport stability_study(const RunConfig& config, int repeats,
                                unsigned threads) {
  if (repeats < 2) throw ValidationError("stability needs repeats >= 2");
  const int k = std::min(config.top_k, config.instance.n);
  if (k < 1) throw ValidationError("top_k must be >= 1");

  StabilityReport report;
  report.repeats = repeats;
  report.top_k = k;

  const MaskPolicy policies[3] = {FixedCount{}, Bernoulli{},
                                  MonteCarloRate{config.sigma_q2}};
  double* slots[3] = {&report.jaccard_fixed, &report.jaccard_bernoulli,
                      &report.jaccard_mc};
  for (int p = 0; p < 3; ++p) {
    std::vector<std::set<int>> tops;
    for (int r = 0; r < repeats; ++r) {
      const std::uint64_t seed = split_seed(config.seed, static_cast<std::uint64_t>(r));
      const ImportanceReport run =
          explain_with_policy(config, policies[p], seed, threads);
      std::set<int> top;
      for (int at = 0; at < k; ++at) {
        top.insert(run.ranking[static_cast<std::size_t>(at)]);
      }
      tops.push_back(std::move(top));
    }
    *slots[p] = jaccard_stability(tops);
  }
  return report;
}

ConsistencyReport consistency_eval(const ImportanceReport& report,
                                   const ExpertAnnotation& expert) {
  const int n = report.attribution.arity();
  for (int item : expert.items) {
    if (item < 0 || item >= n) {
      throw ValidationError("expert index " + std::to_string(item) +
                            " outside [0, " + std::to_string(n) + ")");
    }
  }
  const int m = expert.size();
  if (m > n) throw ValidationError("expert list longer than feature count");
  std::vector<int> top(report.ranking.begin(), report.ranking.begin() + m);
  return kendall_tau(expert, ModelRanking(std::move(top)));
}

}  // namespace realexp
