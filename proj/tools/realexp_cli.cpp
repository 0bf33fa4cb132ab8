#include <algorithm>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "realexp/json_io.hpp"
#include "realexp/pipeline.hpp"
#include "realexp/rng.hpp"

namespace {

using realexp::RunConfig;

void emit(const nlohmann::json& doc, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << doc.dump(2) << '\n';
  } else {
    realexp::write_json_file(doc, out_path);
  }
}

int run_explain(const std::string& config_path, const std::string& out_path,
                const std::string& overlay_path, unsigned threads) {
  const RunConfig config = realexp::load_config(config_path);
  const realexp::ImportanceReport report = realexp::explain(config, threads);
  emit(realexp::report_to_json(report), out_path);
  if (!overlay_path.empty()) {
    realexp::OverlayStyle style;
    if (config.echo.contains("overlay")) {
      const auto& doc = config.echo.at("overlay");
      style.mode = doc.value("mode", std::string("heat")) == "topk"
                       ? realexp::OverlayStyle::Mode::TopKHighlight
                       : realexp::OverlayStyle::Mode::HeatRamp;
      style.k = doc.value("k", 1);
      style.dim = doc.value("dim", 0.3);
    }
    realexp::render_overlay(config.instance, report.attribution, style,
                            overlay_path);
  }
  return 0;
}

int run_oracle(const std::string& game_path, const std::string& method,
               const std::string& out_path) {
  const realexp::TableGame game = realexp::load_game_fixture(game_path);
  realexp::Attribution attribution;
  if (method == "exact") {
    attribution = realexp::exact_shapley(game, game.arity());
  } else if (method == "perm") {
    attribution =
        realexp::permutation_shapley(game, game.arity(), realexp::Exhaustive{});
  } else {
    throw realexp::ValidationError("oracle method must be exact|perm");
  }
  emit(realexp::attribution_to_json(attribution), out_path);
  return 0;
}

int run_variance_demo(int n, double alpha, double sigma_q2,
                      std::uint64_t samples, std::uint64_t seed,
                      const std::string& c_csv, const std::string& out_path) {
  std::vector<double> c;
  if (!c_csv.empty()) {
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = c_csv.find(',', start);
      c.push_back(std::stod(c_csv.substr(start, comma - start)));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (static_cast<int>(c.size()) != n) {
      throw realexp::ValidationError("--c needs exactly n entries");
    }
  } else {
    // Generic positive contributions, reproducible from the seed.
    realexp::Rng rng(realexp::split_seed(seed, 99));
    for (int j = 0; j < n; ++j) c.push_back(rng.uniform_real(0.5, 1.5));
  }
  const realexp::VarianceReport report =
      realexp::empirical_variance(c, 0.0, n, alpha, sigma_q2, samples, seed);
  if (report.ordering_inverted) {
    std::cerr << "note: sum(c) is small relative to sum(c^2); the printed "
                 "fixed-vs-random variance ordering inverts in this regime\n";
  }
  emit(realexp::variance_to_json(report), out_path);
  return 0;
}

int run_stability(const std::string& config_path, int repeats,
                  unsigned threads, const std::string& out_path) {
  const RunConfig config = realexp::load_config(config_path);
  const realexp::StabilityReport report =
      realexp::stability_study(config, repeats, threads);
  emit(realexp::stability_to_json(report), out_path);
  return 0;
}

int run_eval(const std::string& report_path, const std::string& expert_path,
             const std::string& out_path) {
  const nlohmann::json report_doc = realexp::load_json_file(report_path);
  const std::vector<int> ranking =
      report_doc.at("ranking").get<std::vector<int>>();
  const realexp::ExpertAnnotation expert =
      realexp::load_annotation(expert_path);
  const int m = expert.size();
  if (m > static_cast<int>(ranking.size())) {
    throw realexp::ValidationError("expert list longer than the ranking");
  }
  for (int item : expert.items) {
    if (item < 0 || item >= static_cast<int>(ranking.size())) {
      throw realexp::ValidationError("expert index out of range");
    }
  }
  std::vector<int> top(ranking.begin(), ranking.begin() + m);
  const realexp::ConsistencyReport consistency =
      realexp::kendall_tau(expert, realexp::ModelRanking(top));
  emit(realexp::consistency_to_json(consistency,
                                    realexp::items_hash(expert.items),
                                    realexp::items_hash(top)),
       out_path);
  return 0;
}

int run_sweep(const std::string& config_path, const std::string& param,
              const std::string& values_csv, int seeds, unsigned threads) {
  if (param != "lambda" && param != "alpha") {
    throw realexp::ValidationError("--param must be lambda|alpha");
  }
  std::vector<double> values;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = values_csv.find(',', start);
    values.push_back(std::stod(values_csv.substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (seeds < 1) throw realexp::ValidationError("--seeds must be >= 1");

  RunConfig base = realexp::load_config(config_path);
  std::cout << "param,value,seed,r2_train,r2_holdout,jaccard_top"
            << base.top_k << "\n";
  for (double value : values) {
    RunConfig config = base;
    if (param == "lambda") {
      config.lambda = value;
    } else {
      config.alpha = value;
    }
    std::vector<std::set<int>> tops;
    double r2_train_sum = 0.0, r2_holdout_sum = 0.0;
    const int k = std::min(config.top_k, config.instance.n);
    for (int s = 0; s < seeds; ++s) {
      RunConfig run = config;
      run.seed = realexp::split_seed(config.seed, static_cast<std::uint64_t>(s));
      const realexp::ImportanceReport report = realexp::explain(run, threads);
      std::set<int> top(report.ranking.begin(), report.ranking.begin() + k);
      tops.push_back(std::move(top));
      r2_train_sum += report.fit.r2_train;
      r2_holdout_sum += report.r2_holdout;
      std::cout << param << ',' << value << ',' << run.seed << ','
                << report.fit.r2_train << ',' << report.r2_holdout << ",\n";
    }
    const double jaccard =
        seeds >= 2 ? realexp::jaccard_stability(tops) : 1.0;
    std::cout << param << ',' << value << ",mean,"
              << r2_train_sum / seeds << ',' << r2_holdout_sum / seeds << ','
              << jaccard << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RealExp: correlation-aware Shapley attribution toolkit"};
  app.require_subcommand(1);

  std::string config_path, out_path, overlay_path;
  unsigned threads = 1;

  auto* explain_cmd = app.add_subcommand("explain", "run one explanation");
  explain_cmd->add_option("--config", config_path, "run config JSON")
      ->required();
  explain_cmd->add_option("--out", out_path, "report output path");
  explain_cmd->add_option("--overlay", overlay_path,
                          "overlay PPM output (image instances)");
  explain_cmd->add_option("--threads", threads, "worker threads");

  std::string game_path, oracle_method = "exact";
  auto* oracle_cmd =
      app.add_subcommand("oracle", "attribute a synthetic game fixture");
  oracle_cmd->add_option("--game", game_path, "game fixture JSON")->required();
  oracle_cmd->add_option("--method", oracle_method, "exact|perm");
  oracle_cmd->add_option("--out", out_path, "output path");

  int demo_n = 20;
  double demo_alpha = 0.3, demo_sigma = 0.05;
  std::uint64_t demo_samples = 100000, demo_seed = 1;
  std::string demo_c;
  auto* variance_cmd =
      app.add_subcommand("variance-demo", "Proof-4 variance comparison");
  variance_cmd->add_option("--n", demo_n, "block count");
  variance_cmd->add_option("--alpha", demo_alpha, "mask ratio");
  variance_cmd->add_option("--sigma-q2", demo_sigma, "Monte-Carlo rate variance");
  variance_cmd->add_option("--samples", demo_samples, "masks per policy");
  variance_cmd->add_option("--seed", demo_seed, "rng seed");
  variance_cmd->add_option("--c", demo_c,
                           "explicit contribution vector (comma separated)");
  variance_cmd->add_option("--out", out_path, "output path");

  int repeats = 10;
  auto* stability_cmd =
      app.add_subcommand("stability", "top-k Jaccard across masking policies");
  stability_cmd->add_option("--config", config_path, "run config JSON")
      ->required();
  stability_cmd->add_option("--repeats", repeats, "explain runs per policy");
  stability_cmd->add_option("--threads", threads, "worker threads");
  stability_cmd->add_option("--out", out_path, "output path");

  std::string report_path, expert_path;
  auto* eval_cmd =
      app.add_subcommand("eval", "expert-consistency metrics for a report");
  eval_cmd->add_option("--report", report_path, "report JSON")->required();
  eval_cmd->add_option("--expert", expert_path, "expert annotation JSON")
      ->required();
  eval_cmd->add_option("--out", out_path, "output path");

  std::string sweep_param, sweep_values;
  int sweep_seeds = 3;
  auto* sweep_cmd =
      app.add_subcommand("sweep", "hyperparameter sweep, CSV to stdout");
  sweep_cmd->add_option("--param", sweep_param, "lambda|alpha")->required();
  sweep_cmd->add_option("--values", sweep_values, "comma-separated values")
      ->required();
  sweep_cmd->add_option("--config", config_path, "run config JSON")
      ->required();
  sweep_cmd->add_option("--seeds", sweep_seeds, "seeds per value");
  sweep_cmd->add_option("--threads", threads, "worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (explain_cmd->parsed()) {
      return run_explain(config_path, out_path, overlay_path, threads);
    }
    if (oracle_cmd->parsed()) {
      return run_oracle(game_path, oracle_method, out_path);
    }
    if (variance_cmd->parsed()) {
      return run_variance_demo(demo_n, demo_alpha, demo_sigma, demo_samples,
                               demo_seed, demo_c, out_path);
    }
    if (stability_cmd->parsed()) {
      return run_stability(config_path, repeats, threads, out_path);
    }
    if (eval_cmd->parsed()) {
      return run_eval(report_path, expert_path, out_path);
    }
    if (sweep_cmd->parsed()) {
      return run_sweep(config_path, sweep_param, sweep_values, sweep_seeds,
                       threads);
    }
  } catch (const realexp::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return realexp::exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
