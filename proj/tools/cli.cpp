#include "cli.hpp"

#include <fmt/format.h>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <filesystem>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "logitcalib/logitcalib.hpp"
#include "svg.hpp"

namespace logitcalib::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunConfig {
  std::string data;
  std::string classes;
  std::string model;
  std::vector<std::string> layers;
  std::size_t bins = kDefaultBinCount;
  double alpha = kDefaultSmoothingAlpha;
  std::string temp_file;
  std::string split = "test";
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  std::size_t reliability_bins = kDefaultReliabilityBins;
  std::string likelihood = "product";
  std::string spec;
  std::string format = "jsonl";
};

std::shared_ptr<spdlog::logger> make_logger(std::ostream& err) {
  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
  sink->set_pattern("[%l] %v");
  auto logger = std::make_shared<spdlog::logger>("logitcalib", sink);
  logger->set_level(spdlog::level::info);
  if (const char* env = std::getenv("LOGITCALIB_LOG")) {
    const std::string_view level(env);
    if (level == "error") logger->set_level(spdlog::level::err);
    else if (level == "debug") logger->set_level(spdlog::level::debug);
  }
  return logger;
}

std::vector<std::string> split_commas(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

SplitDataset load_data(const RunConfig& cfg) {
  if (cfg.data.empty()) throw UsageError("--data is required");
  std::optional<ClassRegistry> registry;
  if (!cfg.classes.empty()) registry = ClassRegistry(split_commas(cfg.classes));
  return load_dataset(cfg.data, format_from_path(cfg.data), registry);
}

fs::path ensure_out_dir(const RunConfig& cfg) {
  const fs::path dir(cfg.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError(fmt::format("cannot create '{}': {}", dir.string(), ec.message()));
  return dir;
}

std::shared_ptr<const ClassConditionalModel> load_checked_model(const RunConfig& cfg,
                                                               const ClassRegistry& registry) {
  auto model = std::make_shared<const ClassConditionalModel>(load_model(cfg.model));
  if (!(model->registry == registry)) {
    throw DataError(fmt::format("model '{}' was fitted for a different class registry",
                                cfg.model));
  }
  return model;
}

TemperatureParam load_temperature(const fs::path& path) {
  try {
    const json doc = json::parse(read_file(path));
    return {doc.at("T").get<double>(), doc.at("nll").get<double>()};
  } catch (const json::exception& e) {
    throw DataError(fmt::format("malformed temperature file '{}': {}", path.string(),
                                e.what()));
  }
}

PredictionLayer make_layer(Layer layer, const RunConfig& cfg, const ClassRegistry& registry) {
  const auto mode = parse_likelihood_mode(cfg.likelihood);
  switch (layer) {
    case Layer::kSoftmax:
      return PredictionLayer::Softmax();
    case Layer::kSoftmaxTempered:
      if (cfg.temp_file.empty()) throw UsageError("layer ts needs --temp-file");
      return PredictionLayer::Tempered(load_temperature(cfg.temp_file).temperature);
    case Layer::kMl:
    case Layer::kMap: {
      if (cfg.model.empty()) {
        throw UsageError(fmt::format("layer {} needs --model", to_string(layer)));
      }
      auto model = load_checked_model(cfg, registry);
      return layer == Layer::kMl ? PredictionLayer::Ml(std::move(model), mode)
                                 : PredictionLayer::Map(std::move(model), mode);
    }
    case Layer::kBayesOracle:
      break;
  }
  throw UsageError(fmt::format("layer '{}' is not available here", to_string(layer)));
}

std::string prediction_line(const Posterior& p, const ClassRegistry& registry) {
  const auto pred = predict(p);
  std::string line = "{\"probs\":[";
  for (std::size_t k = 0; k < p.probs.size(); ++k) {
    if (k) line += ',';
    line += fmt::format("{:.9f}", p.probs[k]);
  }
  line += fmt::format("],\"argmax\":{},\"confidence\":{:.9f},\"layer\":\"{}\"}}\n",
                      json(registry.name(pred.label)).dump(), pred.confidence,
                      to_string(p.layer));
  return line;
}

// --- subcommands ------------------------------------------------------------

int cmd_fit(const RunConfig& cfg, std::ostream& out, spdlog::logger& log) {
  const auto data = load_data(cfg);
  if (data.count(Split::kTrain) == 0) throw DataError("dataset has no train split");
  log.debug("fitting {} bins, alpha {}", cfg.bins, cfg.alpha);
  const auto model = fit_class_conditional(data, cfg.bins, cfg.alpha);

  const fs::path path = cfg.model.empty() ? ensure_out_dir(cfg) / "model.json" : fs::path(cfg.model);
  save_model(model, path);

  const auto counts = data.class_counts(Split::kTrain);
  for (std::size_t c = 0; c < counts.size(); ++c) {
    out << fmt::format("{}\t{}\n", data.registry.name(c), counts[c]);
  }
  log.info("wrote {}", path.string());
  return kExitOk;
}

int cmd_calibrate(const RunConfig& cfg, std::ostream& out, spdlog::logger& log) {
  const auto data = load_data(cfg);
  const auto validation = data.select(Split::kValidation);
  if (validation.empty()) throw DataError("dataset has no validation records");
  const auto t = fit_temperature(validation);

  json doc;
  doc["T"] = t.temperature;
  doc["nll"] = t.nll;
  const fs::path path =
      cfg.temp_file.empty() ? ensure_out_dir(cfg) / "temperature.json" : fs::path(cfg.temp_file);
  write_file(path, doc.dump() + "\n");
  out << fmt::format("T\t{:.6f}\nnll\t{:.6f}\n", t.temperature, t.nll);
  log.info("wrote {}", path.string());
  return kExitOk;
}

int cmd_predict(const RunConfig& cfg, std::ostream& out, spdlog::logger& log) {
  if (cfg.layers.size() != 1) throw UsageError("predict takes exactly one --layer");
  const auto data = load_data(cfg);
  const Split split = parse_split(cfg.split);
  const auto layer = make_layer(parse_layer(cfg.layers.front()), cfg, data.registry);
  const auto records = data.select(split);

  std::string text;
  for (const auto& p : layer.apply(records)) text += prediction_line(p, data.registry);
  const fs::path path = ensure_out_dir(cfg) /
                        fmt::format("predictions_{}_{}.jsonl", to_string(layer.layer()), cfg.split);
  write_file(path, text);
  out << fmt::format("{}\t{} records\n", path.string(), records.size());
  log.info("wrote {}", path.string());
  return kExitOk;
}

int cmd_evaluate(const RunConfig& cfg, std::ostream& out, spdlog::logger& log) {
  const auto data = load_data(cfg);
  const Split split = parse_split(cfg.split);
  if (split == Split::kUnseen) throw UsageError("evaluate needs a labeled --split");
  const auto records = data.select(split);
  if (records.empty()) throw DataError(fmt::format("dataset has no {} records", cfg.split));
  const auto unseen = data.select(Split::kUnseen);

  std::vector<Layer> layers;
  if (cfg.layers.empty()) {
    layers.push_back(Layer::kSoftmax);
    if (!cfg.temp_file.empty()) layers.push_back(Layer::kSoftmaxTempered);
    if (!cfg.model.empty()) {
      layers.push_back(Layer::kMl);
      layers.push_back(Layer::kMap);
    }
  } else {
    for (const auto& name : cfg.layers) layers.push_back(parse_layer(name));
  }

  std::vector<std::size_t> labels;
  labels.reserve(records.size());
  for (const auto& r : records) labels.push_back(*r.label);

  const fs::path dir = ensure_out_dir(cfg);
  std::vector<EvaluationReport> reports;
  for (const Layer l : layers) {
    const auto layer = make_layer(l, cfg, data.registry);
    const std::string name(to_string(l));
    const auto test_post = layer.apply(records);
    const auto unseen_post = layer.apply(unseen);

    auto report = evaluate_layer(name, data.registry, test_post, labels, unseen_post,
                                 cfg.reliability_bins);
    if (l == Layer::kSoftmaxTempered) report.temperature = layer.temperature();
    reports.push_back(report);

    const auto diagram = reliability(test_post, labels, cfg.reliability_bins);
    write_file(dir / fmt::format("reliability_{}.csv", name), reliability_csv(diagram));
    write_file(dir / fmt::format("reliability_{}.svg", name),
               svg::reliability_plot(diagram, fmt::format("Reliability: {} ({})", name, cfg.split)));

    const auto max_hist = score_histogram(test_post, cfg.reliability_bins);
    const auto all_hist = score_histogram(test_post, cfg.reliability_bins, ScoreKind::kAllScores);
    write_file(dir / fmt::format("scores_{}.csv", name), score_histogram_csv(max_hist, all_hist));
    write_file(dir / fmt::format("scores_{}.svg", name),
               svg::histogram_plot(max_hist, fmt::format("Max score: {} ({})", name, cfg.split)));
    if (!unseen_post.empty()) {
      const auto u_max = score_histogram(unseen_post, cfg.reliability_bins);
      const auto u_all = score_histogram(unseen_post, cfg.reliability_bins, ScoreKind::kAllScores);
      write_file(dir / fmt::format("scores_unseen_{}.csv", name), score_histogram_csv(u_max, u_all));
      write_file(dir / fmt::format("scores_unseen_{}.svg", name),
                 svg::histogram_plot(u_max, fmt::format("Max score: {} (unseen)", name)));
    }
    log.debug("evaluated layer {}", name);
  }

  write_file(dir / "report.json", reports_to_json(reports));
  const std::string table = comparison_table_csv(reports);
  write_file(dir / "table.csv", table);
  out << table;
  log.info("wrote report for {} layer(s) to {}", reports.size(), dir.string());
  return kExitOk;
}

SynthSpec default_synth_spec() {
  auto spec = separated_spec({"ped", "car", "cyc"}, 4.0,
                             SplitCounts{3000, 1000, 1000, 500}, 42);
  return spec;
}

int cmd_synth(const RunConfig& cfg, std::ostream& out, spdlog::logger& log) {
  SynthSpec spec = cfg.spec.empty() ? default_synth_spec() : load_synth_spec(cfg.spec);
  if (cfg.seed) spec.seed = *cfg.seed;
  const auto data = generate(spec);
  const auto format = parse_format(cfg.format);
  const fs::path path =
      ensure_out_dir(cfg) / (format == DatasetFormat::kCsv ? "dataset.csv" : "dataset.jsonl");
  save_dataset(data, path, format);
  for (const Split s : {Split::kTrain, Split::kValidation, Split::kTest, Split::kUnseen}) {
    out << fmt::format("{}\t{}\n", to_string(s), data.count(s));
  }
  log.info("wrote {}", path.string());
  return kExitOk;
}

void add_data_options(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--data", cfg.data, "Dataset file (.jsonl or .csv)")->required();
  cmd->add_option("--classes", cfg.classes,
                  "Comma-separated class names; overrides the dataset's .classes.json");
  cmd->add_option("--out", cfg.out, "Output directory");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  for (const auto& a : args) argv.push_back(a.c_str());
  argv.push_back(nullptr);
  return run(static_cast<int>(args.size()), argv.data(), out, err);
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"Histogram ML/MAP prediction layers, temperature scaling and calibration reports"};
  app.require_subcommand(1);

  auto* fit = app.add_subcommand("fit", "Fit class-conditional logit histograms and priors");
  add_data_options(fit, cfg);
  fit->add_option("--bins", cfg.bins, "Histogram bins per dimension")->check(CLI::PositiveNumber);
  fit->add_option("--alpha", cfg.alpha, "Additive smoothing factor")->check(CLI::NonNegativeNumber);
  fit->add_option("--model", cfg.model, "Output model path (default OUT/model.json)");

  auto* calibrate = app.add_subcommand("calibrate", "Fit a softmax temperature on the validation split");
  add_data_options(calibrate, cfg);
  calibrate->add_option("--temp-file", cfg.temp_file,
                        "Output path (default OUT/temperature.json)");

  auto* predict_cmd = app.add_subcommand("predict", "Write per-record posteriors for one layer");
  add_data_options(predict_cmd, cfg);
  predict_cmd->add_option("--layer", cfg.layers, "softmax | ts | ml | map")
      ->required()
      ->expected(1);
  predict_cmd->add_option("--model", cfg.model, "Model file (ml, map)");
  predict_cmd->add_option("--temp-file", cfg.temp_file, "Temperature file (ts)");
  predict_cmd->add_option("--split", cfg.split, "Split to predict");
  predict_cmd->add_option("--likelihood", cfg.likelihood, "product | own-dimension");

  auto* evaluate = app.add_subcommand("evaluate", "Metrics, reliability diagrams and score histograms");
  add_data_options(evaluate, cfg);
  evaluate->add_option("--layer", cfg.layers,
                       "Layers to evaluate; repeatable (default: all with artifacts)");
  evaluate->add_option("--model", cfg.model, "Model file (ml, map)");
  evaluate->add_option("--temp-file", cfg.temp_file, "Temperature file (ts)");
  evaluate->add_option("--split", cfg.split, "Labeled split to evaluate");
  evaluate->add_option("--reliability-bins", cfg.reliability_bins, "Confidence bins")
      ->check(CLI::PositiveNumber);
  evaluate->add_option("--likelihood", cfg.likelihood, "product | own-dimension");

  auto* synth = app.add_subcommand("synth", "Generate a synthetic logit dataset");
  synth->add_option("--spec", cfg.spec, "Synth spec JSON (default: built-in 3-class spec)");
  synth->add_option("--seed", cfg.seed, "Override the spec's seed");
  synth->add_option("--out", cfg.out, "Output directory");
  synth->add_option("--format", cfg.format, "jsonl | csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  const auto log = make_logger(err);
  try {
    if (*fit) return cmd_fit(cfg, out, *log);
    if (*calibrate) return cmd_calibrate(cfg, out, *log);
    if (*predict_cmd) return cmd_predict(cfg, out, *log);
    if (*evaluate) return cmd_evaluate(cfg, out, *log);
    if (*synth) return cmd_synth(cfg, out, *log);
  } catch (const Error& e) {
    log->error("{}", e.what());
    return e.kind() == ErrorKind::kUsage ? kExitUsage : kExitData;
  } catch (const std::exception& e) {
    log->error("{}", e.what());
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace logitcalib::cli
