#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "oodhcn/augment.hpp"
#include "oodhcn/checkpoint.hpp"
#include "oodhcn/config.hpp"
#include "oodhcn/corpus.hpp"
#include "oodhcn/error.hpp"
#include "oodhcn/eval.hpp"
#include "oodhcn/pipeline.hpp"
#include "oodhcn/toy.hpp"
#include "oodhcn/train.hpp"
#include "oodhcn/version.hpp"

namespace {

using namespace oodhcn;

// Options shared by every subcommand that reads a RunConfig.
struct ConfigOptions {
  std::string config_path;
  std::vector<std::string> overrides;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "Config file (key = value, [section] headers)")
        ->check(CLI::ExistingFile);
    app->add_option("--set", overrides, "Override a config key: key=value (repeatable)");
  }

  RunConfig resolve() const {
    RunConfig config;
    if (!config_path.empty()) config.merge_file(config_path);
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw Error("--set expects key=value, got '" + kv + "'");
      config.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    return config;
  }
};

template <typename T>
std::string text_of(const T& v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// --- toy -------------------------------------------------------------------

struct ToyCommand {
  ConfigOptions config;
  std::optional<std::uint64_t> seed;
  std::optional<int> n_dialogs, n_actions;
  std::string out_dir;

  void attach(CLI::App& root) {
    auto* app = root.add_subcommand("toy", "Generate the synthetic restaurant domain");
    config.attach(app);
    app->add_option("--seed", seed, "toy.seed");
    app->add_option("--n-dialogs", n_dialogs, "toy.n_dialogs");
    app->add_option("--n-actions", n_actions, "toy.n_actions");
    app->add_option("--out-dir", out_dir, "Output directory")->required();
    app->callback([this] { run(); });
  }

  void run() {
    RunConfig c = config.resolve();
    if (seed) c.set("toy.seed", text_of(*seed));
    if (n_dialogs) c.set("toy.n_dialogs", text_of(*n_dialogs));
    if (n_actions) c.set("toy.n_actions", text_of(*n_actions));
    const ToyDomain toy = generate_toy_domain(c.get_seed("toy.seed"), c.get_int("toy.n_dialogs"),
                                              c.get_int("toy.n_actions"));
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    auto at = [&](const char* name) { return (fs::path(out_dir) / name).string(); };
    write_corpus_file(at("train.txt"), toy.train);
    write_corpus_file(at("dev.txt"), toy.dev);
    write_corpus_file(at("test.txt"), toy.test);
    write_text_file(at("lexicon.tsv"), toy.lexicon.write());
    write_corpus_file(at("ood_pool.txt"), toy.ood_dialogs);
    write_text_file(at("segments.txt"), write_segment_pool(toy.segments));
    write_text_file(at("config.txt"), c.to_text());
  }
};

// --- augment ---------------------------------------------------------------

struct AugmentCommand {
  ConfigOptions config;
  std::string input, segment_pool, output, labels_out, stats_out;
  std::vector<std::string> ood_pools;
  std::optional<double> p_start, p_cont, independent;
  std::optional<std::uint64_t> seed;
  bool weighted = false;

  void attach(CLI::App& root) {
    auto* app = root.add_subcommand("augment", "Insert turn- and segment-level OOD content");
    config.attach(app);
    app->add_option("--input", input, "IND dialog transcript")->required()->check(CLI::ExistingFile);
    app->add_option("--ood-pool", ood_pools,
                    "Foreign-domain transcript, optionally path:weight (repeatable)")
        ->required();
    app->add_option("--segment-pool", segment_pool, "Interjections, one per line")
        ->required()
        ->check(CLI::ExistingFile);
    app->add_option("--p-start", p_start, "augment.p_ood_start");
    app->add_option("--p-cont", p_cont, "augment.p_ood_cont");
    app->add_option("--independent-segment-prob", independent,
                    "augment.independent_segment_prob");
    app->add_option("--seed", seed, "augment.seed");
    app->add_flag("--weighted", weighted, "Sample pools by weight instead of uniformly");
    app->add_option("--output", output, "Augmented transcript")->required();
    app->add_option("--labels-out", labels_out, "Per-turn OOD label sidecar")->required();
    app->add_option("--stats-out", stats_out, "Augmentation statistics");
    app->callback([this] { run(); });
  }

  void run() {
    RunConfig c = config.resolve();
    if (p_start) c.set("augment.p_ood_start", text_of(*p_start));
    if (p_cont) c.set("augment.p_ood_cont", text_of(*p_cont));
    if (independent) c.set("augment.independent_segment_prob", text_of(*independent));
    if (seed) c.set("augment.seed", text_of(*seed));

    std::vector<OodPool> pools;
    for (const auto& spec : ood_pools) {
      std::string path = spec;
      double weight = 1.0;
      if (!std::filesystem::exists(path)) {
        const auto colon = spec.rfind(':');
        if (colon != std::string::npos) {
          path = spec.substr(0, colon);
          weight = std::stod(spec.substr(colon + 1));
        }
      }
      if (!std::filesystem::exists(path)) throw Error("--ood-pool: file not found: " + path);
      OodPool pool = load_ood_pool(read_corpus_file(path), path);
      pool.weight = weight;
      pools.push_back(std::move(pool));
    }
    FallbackAction fallback;
    fallback.utterance = c.fallback_utterance();
    const AugmentResult result =
        augment_corpus(read_corpus_file(input), c.augmentation_config(),
                       OodSampler(std::move(pools), weighted),
                       load_segment_pool(read_text_file(segment_pool)), fallback);
    write_corpus_file(output, result.dialogs);
    write_text_file(labels_out, write_labels(result.dialogs));
    if (!stats_out.empty()) {
      write_text_file(stats_out, result.stats.to_text() + "# config\n" + c.to_text());
    }
  }
};

// --- data shared by train and gridsearch ------------------------------------

struct DataOptions {
  std::string train, dev, lexicon, embeddings;
  std::vector<std::string> vocab_extra;

  void attach(CLI::App* app) {
    app->add_option("--train", train, "IND training transcript")->required()->check(CLI::ExistingFile);
    app->add_option("--dev", dev, "IND development transcript")->required()->check(CLI::ExistingFile);
    app->add_option("--lexicon", lexicon, "Slot lexicon (slot<TAB>value); default: from KB facts")
        ->check(CLI::ExistingFile);
    app->add_option("--vocab-extra", vocab_extra,
                    "Extra transcripts whose user tokens join the vocabulary (repeatable)")
        ->check(CLI::ExistingFile);
    app->add_option("--embeddings", embeddings, "Embedding file (V d header)")
        ->check(CLI::ExistingFile);
  }

  struct Loaded {
    FeatureSpace space;
    std::vector<FeaturizedDialog> train, dev;
    std::optional<EmbeddingTable> embeddings;

    TrainData data() const {
      return TrainData{train, dev, space.vocab.size(), space.actions.size(),
                       space.actions.fallback_id(), embeddings ? &*embeddings : nullptr};
    }
  };

  Loaded load(RunConfig& c) const {
    if (!embeddings.empty()) c.set("model.embeddings", embeddings);
    if (!lexicon.empty()) c.set("corpus.lexicon", lexicon);
    const Corpus train_corpus = read_corpus_file(train);
    const Corpus dev_corpus = read_corpus_file(dev);
    std::vector<Corpus> extra{dev_corpus};
    for (const auto& p : vocab_extra) extra.push_back(read_corpus_file(p));
    Lexicon lex = c.get("corpus.lexicon").empty() ? lexicon_from_kb_facts(train_corpus)
                                                  : read_lexicon_file(c.get("corpus.lexicon"));
    Loaded out{FeatureSpace::build(train_corpus, extra, std::move(lex), c.fallback_utterance()),
               {}, {}, std::nullopt};
    out.train = out.space.featurize(train_corpus);
    out.dev = out.space.featurize(dev_corpus, UnknownActionPolicy::kMarkUnknown);
    if (!c.get("model.embeddings").empty()) {
      out.embeddings = load_embeddings_file(c.get("model.embeddings"), out.space.vocab,
                                            derive_seed(c.get_seed("train.seed"), "embeddings"));
    }
    return out;
  }
};

// --- train -----------------------------------------------------------------

struct TrainCommand {
  ConfigOptions config;
  DataOptions data;
  std::string variant, out_checkpoint, history_out;
  std::optional<std::uint64_t> seed;
  std::optional<double> turn_dropout;

  void attach(CLI::App& root) {
    auto* app = root.add_subcommand("train", "Train one model and save a checkpoint");
    config.attach(app);
    data.attach(app);
    app->add_option("--variant", variant, "model.variant: hcn, hhcn or vhcn");
    app->add_option("--seed", seed, "train.seed");
    app->add_option("--turn-dropout", turn_dropout, "turn_dropout.ratio (0 disables)");
    app->add_option("--out-checkpoint", out_checkpoint, "Checkpoint path")->required();
    app->add_option("--history-out", history_out, "Per-epoch history (TSV)");
    app->callback([this] { run(); });
  }

  void run() {
    RunConfig c = config.resolve();
    if (!variant.empty()) c.set("model.variant", variant);
    if (seed) c.set("train.seed", text_of(*seed));
    if (turn_dropout) c.set("turn_dropout.ratio", text_of(*turn_dropout));
    DataOptions::Loaded loaded = data.load(c);
    TrainResult result = train_model(c.model_config(), c.train_config(), loaded.data());
    std::cerr << "best epoch " << result.history.best_epoch << ", dev accuracy "
              << result.history.best_dev_acc << '\n';
    if (!history_out.empty()) write_text_file(history_out, result.history.to_text());
    save_checkpoint(out_checkpoint,
                    Checkpoint{std::move(loaded.space), std::move(result.model), c.echo()});
  }
};

// --- gridsearch ------------------------------------------------------------

struct GridCommand {
  ConfigOptions config;
  DataOptions data;
  std::string variant, stage1, stage2, results_out, out_checkpoint;
  int jobs = 1;

  void attach(CLI::App& root) {
    auto* app = root.add_subcommand("gridsearch", "Two-stage hyperparameter search");
    config.attach(app);
    data.attach(app);
    app->add_option("--variant", variant, "model.variant");
    app->add_option("--stage1-grid", stage1,
                    "Comma-separated embedding sizes, or emb:latent pairs for vhcn")
        ->required();
    app->add_option("--stage2-grid", stage2,
                    "Comma-separated turn-dropout ratios (default 0.05..0.7)");
    app->add_option("--jobs", jobs, "Parallel training runs")->check(CLI::PositiveNumber);
    app->add_option("--results-out", results_out, "One line per cell")->required();
    app->add_option("--out-checkpoint", out_checkpoint, "Checkpoint of the selected cell");
    app->callback([this] { run(); });
  }

  void run() {
    RunConfig c = config.resolve();
    if (!variant.empty()) c.set("model.variant", variant);
    const ModelConfig base = c.model_config();
    std::vector<Stage1Point> points;
    for (const auto& item : split(stage1, ',')) {
      Stage1Point p;
      const auto colon = item.find(':');
      p.embedding_size = std::stoi(item.substr(0, colon));
      p.latent_size = colon == std::string::npos ? base.latent_size : std::stoi(item.substr(colon + 1));
      points.push_back(p);
    }
    std::vector<double> ratios = default_stage2_grid();
    if (!stage2.empty()) {
      ratios.clear();
      for (const auto& item : split(stage2, ',')) ratios.push_back(std::stod(item));
    }
    DataOptions::Loaded loaded = data.load(c);
    GridSearchResult result =
        grid_search(base, c.train_config(), points, ratios, loaded.data(), jobs);
    write_text_file(results_out, result.to_text());
    if (!out_checkpoint.empty()) {
      c.set("model.embedding_size", text_of(result.best_point.embedding_size));
      c.set("model.latent_size", text_of(result.best_point.latent_size));
      c.set("turn_dropout.ratio", text_of(result.best_ratio));
      save_checkpoint(out_checkpoint,
                      Checkpoint{std::move(loaded.space), std::move(result.best_model), c.echo()});
    }
  }
};

// --- evaluate / report -------------------------------------------------------

struct EvaluateCommand {
  std::string checkpoint, test, labels, clean_test, report_out, name;

  void attach(CLI::App& root) {
    auto* app = root.add_subcommand("evaluate", "Score a checkpoint on an augmented test set");
    app->add_option("--checkpoint", checkpoint, "Checkpoint file")->required()->check(CLI::ExistingFile);
    app->add_option("--test", test, "Augmented test transcript")->required()->check(CLI::ExistingFile);
    app->add_option("--labels", labels, "Label sidecar for --test")->check(CLI::ExistingFile);
    app->add_option("--clean-test", clean_test, "Original test transcript")
        ->check(CLI::ExistingFile);
    app->add_option("--name", name, "Model name in the report (default: from the checkpoint)");
    app->add_option("--report-out", report_out, "Report record")->required();
    app->callback([this] { run(); });
  }

  void run() {
    const Checkpoint cp = load_checkpoint(checkpoint);
    Corpus corpus = read_corpus_file(test);
    if (!labels.empty()) apply_labels(corpus, read_text_file(labels));
    ReportRecord record;
    record.model = name;
    if (record.model.empty()) {
      record.model = std::string(to_string(cp.model.config().variant));
      for (const auto& [k, v] : cp.config_echo) {
        if (k == "turn_dropout.ratio" && v != "0") record.model = "TD-" + record.model;
      }
    }
    record.augmented = evaluate_model(cp, corpus);
    if (!clean_test.empty()) record.clean = evaluate_model(cp, read_corpus_file(clean_test));
    record.config_echo = cp.config_echo;
    write_text_file(report_out, write_report_record(record));
  }
};

struct ReportCommand {
  std::vector<std::string> inputs;
  std::string format = "text", output;

  void attach(CLI::App& root) {
    auto* app = root.add_subcommand("report", "Aggregate report records into one table");
    app->add_option("inputs", inputs, "Report records")->required()->check(CLI::ExistingFile);
    app->add_option("--format", format, "text or csv")->check(CLI::IsMember({"text", "csv"}));
    app->add_option("--output", output, "Write the table here instead of stdout");
    app->callback([this] { run(); });
  }

  void run() {
    std::vector<ReportRecord> records;
    for (const auto& p : inputs) records.push_back(parse_report_record(read_text_file(p)));
    const std::string table =
        render_table(records, format == "csv" ? TableFormat::kCsv : TableFormat::kText);
    if (output.empty()) {
      std::cout << table;
    } else {
      write_text_file(output, table);
    }
  }
};

struct PipelineCommand {
  ConfigOptions config;
  std::string out_dir;
  std::optional<std::uint64_t> root_seed;

  void attach(CLI::App& root) {
    auto* app = root.add_subcommand("pipeline", "Toy domain end to end: augment, train, evaluate, report");
    config.attach(app);
    app->add_option("--out-dir", out_dir, "Artifact directory")->required();
    app->add_option("--root-seed", root_seed, "pipeline.root_seed");
    app->callback([this] { run(); });
  }

  void run() {
    RunConfig c = config.resolve();
    if (root_seed) c.set("pipeline.root_seed", text_of(*root_seed));
    const PipelineResult result = run_pipeline(c, out_dir);
    std::cout << result.table;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Out-of-domain robust dialog management: augmentation, training, evaluation"};
  app.require_subcommand(0, 1);
  bool version = false;
  app.add_flag("--version", version, "Print tool and file-format versions");

  ToyCommand toy;
  AugmentCommand augment;
  TrainCommand train;
  GridCommand grid;
  EvaluateCommand evaluate;
  ReportCommand report;
  PipelineCommand pipeline;
  toy.attach(app);
  augment.attach(app);
  train.attach(app);
  grid.attach(app);
  evaluate.attach(app);
  report.attach(app);
  pipeline.attach(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  if (version) {
    std::cout << "oodhcn " << kVersion << '\n'
              << "corpus format " << kCorpusFormatVersion << '\n'
              << "label format " << kLabelFormatVersion << '\n'
              << "checkpoint format " << kCheckpointFormatVersion << '\n'
              << "report format " << kReportFormatVersion << '\n';
    return 0;
  }
  if (app.get_subcommands().empty()) {
    std::cout << app.help();
    return 2;
  }
  return 0;
}
