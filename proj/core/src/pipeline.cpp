#include "oodhcn/pipeline.hpp"

#include <filesystem>
#include <functional>
#include <sstream>

#include "oodhcn/checkpoint.hpp"
#include "oodhcn/error.hpp"
#include "oodhcn/rng.hpp"
#include "oodhcn/toy.hpp"
#include "oodhcn/train.hpp"
#include "oodhcn/vocabulary.hpp"

namespace oodhcn {

std::vector<PipelineModel> parse_pipeline_models(std::string_view text) {
  std::vector<PipelineModel> out;
  std::string item;
  std::istringstream in{std::string(text)};
  while (std::getline(in, item, ',')) {
    const auto b = item.find_first_not_of(' ');
    if (b == std::string::npos) continue;
    item = item.substr(b, item.find_last_not_of(' ') - b + 1);
    PipelineModel m;
    m.name = item;
    std::string_view base = item;
    if (base.rfind("TD-", 0) == 0) {
      m.turn_dropout = true;
      base.remove_prefix(3);
    }
    m.variant = parse_variant(base);
    out.push_back(std::move(m));
  }
  if (out.empty()) throw Error("pipeline.models lists no models");
  return out;
}

namespace {

template <typename F>
auto stage(const char* name, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const std::exception& e) {
    throw Error(std::string("stage '") + name + "': " + e.what());
  }
}

std::string seed_text(std::uint64_t seed) { return std::to_string(seed); }

}  // namespace

PipelineResult run_pipeline(const RunConfig& base_config, const std::string& out_dir) {
  namespace fs = std::filesystem;
  const fs::path dir(out_dir);
  fs::create_directories(dir);
  auto path = [&](const std::string& name) { return (dir / name).string(); };

  RunConfig config = base_config;
  const std::uint64_t root = config.get_seed("pipeline.root_seed");
  config.set("toy.seed", seed_text(derive_seed(root, "toy")));
  config.set("augment.seed", seed_text(derive_seed(root, "augment")));
  const auto models = stage("config", [&] { return parse_pipeline_models(config.get("pipeline.models")); });
  write_text_file(path("config.txt"), config.to_text());

  const ToyDomain toy = stage("toy", [&] {
    ToyDomain t = generate_toy_domain(config.get_seed("toy.seed"), config.get_int("toy.n_dialogs"),
                                      config.get_int("toy.n_actions"));
    write_corpus_file(path("train.txt"), t.train);
    write_corpus_file(path("dev.txt"), t.dev);
    write_corpus_file(path("test.txt"), t.test);
    write_text_file(path("lexicon.tsv"), t.lexicon.write());
    write_corpus_file(path("ood_pool.txt"), t.ood_dialogs);
    write_text_file(path("segments.txt"), write_segment_pool(t.segments));
    return t;
  });

  PipelineResult result;
  stage("augment", [&] {
    const Corpus test = read_corpus_file(path("test.txt"));
    const OodSampler sampler({load_ood_pool(read_corpus_file(path("ood_pool.txt")), "toy")});
    const SegmentPool segments = load_segment_pool(read_text_file(path("segments.txt")));
    FallbackAction fallback;
    fallback.utterance = config.fallback_utterance();
    const AugmentResult augmented =
        augment_corpus(test, config.augmentation_config(), sampler, segments, fallback);
    write_corpus_file(path("test_ood.txt"), augmented.dialogs);
    write_text_file(path("test_ood.labels"), write_labels(augmented.dialogs));
    write_text_file(path("augment_stats.txt"), augmented.stats.to_text());
    result.augment_stats = augmented.stats;
    return 0;
  });
  (void)toy;

  for (const PipelineModel& m : models) {
    RunConfig mc = config;
    mc.set("model.variant", to_string(m.variant));
    mc.set("train.seed", seed_text(derive_seed(root, "train/" + std::string(to_string(m.variant)))));
    if (!m.turn_dropout) {
      mc.set("turn_dropout.ratio", "0");
    } else if (mc.get("turn_dropout.ratio") == "auto") {
      std::ostringstream r;
      r << default_turn_dropout_ratio(m.variant);
      mc.set("turn_dropout.ratio", r.str());
    }

    stage("train", [&] {
      const Corpus train = read_corpus_file(path("train.txt"));
      const Corpus dev = read_corpus_file(path("dev.txt"));
      const Corpus test_ood = read_corpus_file(path("test_ood.txt"));
      const Corpus extra[] = {dev, test_ood};
      FeatureSpace space = FeatureSpace::build(train, extra, read_lexicon_file(path("lexicon.tsv")),
                                               mc.fallback_utterance());
      const auto train_f = space.featurize(train);
      const auto dev_f = space.featurize(dev, UnknownActionPolicy::kMarkUnknown);
      const ModelConfig model_config = mc.model_config();
      std::optional<EmbeddingTable> embeddings;
      if (!model_config.embeddings_path.empty()) {
        embeddings = load_embeddings_file(model_config.embeddings_path, space.vocab,
                                          derive_seed(mc.get_seed("train.seed"), "embeddings"));
      }
      TrainData data{train_f, dev_f, space.vocab.size(), space.actions.size(),
                     space.actions.fallback_id(), embeddings ? &*embeddings : nullptr};
      TrainResult trained = train_model(model_config, mc.train_config(), data);
      write_text_file(path(m.name + ".history.tsv"), trained.history.to_text());
      save_checkpoint(path(m.name + ".ckpt"),
                      Checkpoint{std::move(space), std::move(trained.model), mc.echo()});
      return 0;
    });

    stage("evaluate", [&] {
      const Checkpoint cp = load_checkpoint(path(m.name + ".ckpt"));
      Corpus test_ood = read_corpus_file(path("test_ood.txt"));
      apply_labels(test_ood, read_text_file(path("test_ood.labels")));
      ReportRecord record;
      record.model = m.name;
      record.augmented = evaluate_model(cp, test_ood);
      record.clean = evaluate_model(cp, read_corpus_file(path("test.txt")));
      record.config_echo = cp.config_echo;
      write_text_file(path(m.name + ".report"), write_report_record(record));
      return 0;
    });
  }

  stage("report", [&] {
    for (const PipelineModel& m : models) {
      result.records.push_back(parse_report_record(read_text_file(path(m.name + ".report"))));
    }
    result.table = render_table(result.records, TableFormat::kText);
    write_text_file(path("report.txt"), result.table);
    write_text_file(path("report.csv"), render_table(result.records, TableFormat::kCsv));
    return 0;
  });
  return result;
}

}  // namespace oodhcn
