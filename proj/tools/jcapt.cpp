#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "jcapt/data/config.hpp"
#include "jcapt/data/dataset.hpp"
#include "jcapt/data/import.hpp"
#include "jcapt/data/model_io.hpp"
#include "jcapt/data/scores.hpp"
#include "jcapt/data/synth.hpp"
#include "jcapt/errors.hpp"
#include "jcapt/metrics/metrics.hpp"
#include "jcapt/training/gradsuite.hpp"
#include "jcapt/training/trainer.hpp"

namespace fs = std::filesystem;
using namespace jcapt;

namespace {

// Missing or contradictory arguments discovered after parsing; exit 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void setup_logging() {
  auto logger = spdlog::stderr_color_st("jcapt");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  const char* env = std::getenv("CAPT_LOG");
  const auto level = spdlog::level::from_str(env ? env : "info");
  // from_str maps unknown names to off
  if (env && level == spdlog::level::off && std::string(env) != "off") {
    spdlog::set_level(spdlog::level::info);
    spdlog::warn("CAPT_LOG='{}' is not a level (trace, debug, info, warn, error, critical, off); using info", env);
  } else {
    spdlog::set_level(level);
  }
}

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;

  void add_to(CLI::App* app) {
    app->add_option("--config", config, "Run configuration file")->check(CLI::ExistingFile);
    app->add_option("--seed", seed, "Random seed");
  }
  data::RunConfig load() const {
    data::RunConfig c = config.empty() ? data::RunConfig{} : data::load_run_config(config);
    if (seed) c.train.seed = *seed;
    return c;
  }
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError(fmt::format("{}: cannot open for writing", path.string()));
  out << text;
}

data::Dataset load_split(const fs::path& dir, const char* split) {
  const auto resolved = data::resolve_split(dir, split);
  spdlog::debug("loading {}", resolved.string());
  return data::load_dataset(resolved);
}

// ---- synth ----

struct SynthArgs {
  Common common;
  std::size_t n = 0;
  std::string out;
};

int run_synth(const SynthArgs& a) {
  const auto cfg = a.common.load();
  const auto corpus = data::synth_corpus(a.n, a.common.seed.value_or(cfg.train.seed));
  data::write_synth_corpus(corpus, a.out);
  std::cout << corpus.report_json();
  spdlog::info("wrote {} train / {} test utterances to {}", corpus.train.size(), corpus.test.size(), a.out);
  return 0;
}

// ---- train ----

struct TrainArgs {
  Common common;
  std::string data, model_out, loss_log;
  std::optional<std::size_t> epochs, threads, batch_size;
  std::optional<double> lr, lr_final, alpha;
};

int run_train(const TrainArgs& a) {
  auto cfg = a.common.load();
  if (!a.data.empty()) cfg.data.train = a.data;
  if (!a.model_out.empty()) cfg.data.model = a.model_out;
  if (!a.loss_log.empty()) cfg.data.loss_log = a.loss_log;
  if (a.epochs) cfg.train.epochs = *a.epochs;
  if (a.threads) cfg.train.threads = *a.threads;
  if (a.batch_size) cfg.train.batch_size = *a.batch_size;
  if (a.lr) cfg.train.lr = *a.lr;
  if (a.lr_final) cfg.train.lr_final = *a.lr_final;
  if (a.alpha) cfg.train.alpha = *a.alpha;
  if (cfg.data.train.empty()) throw UsageError("train: no training data (--data or [data] train)");
  if (cfg.data.model.empty()) cfg.data.model = "model.bin";
  if (cfg.data.loss_log.empty()) cfg.data.loss_log = cfg.data.model.string() + ".loss.csv";
  cfg.validate();

  const auto ds = load_split(cfg.data.train, "train");
  if (ds.utterances.front().features.cols() != cfg.model.feature_dim) {
    spdlog::info("feature_dim {} from data (config said {})", ds.utterances.front().features.cols(),
                 cfg.model.feature_dim);
    cfg.model.feature_dim = ds.utterances.front().features.cols();
  }
  model::JcaptModel m(cfg.model, features::PhonologicalTable::builtin(), cfg.train.seed);
  spdlog::info("training on {} utterances, {} parameters, {} epochs", ds.size(), m.params().scalar_count(),
               cfg.train.epochs);

  const bool fresh = !fs::exists(cfg.data.loss_log) || fs::file_size(cfg.data.loss_log) == 0;
  std::ofstream log(cfg.data.loss_log, std::ios::app);
  if (!log) throw FormatError(fmt::format("{}: cannot open loss log", cfg.data.loss_log.string()));
  if (fresh) training::write_loss_log_header(log);

  training::TrainHooks hooks;
  hooks.loss_log = &log;
  hooks.on_epoch = [&](std::size_t epoch, const training::LossBreakdown& l) {
    spdlog::info("epoch {:>4}  l_phn {:.6f}  l_word {:.6f}  l_utt {:.6f}  l_mdd {:.6f}  l_total {:.6f}", epoch, l.l_phn,
                 l.l_word, l.l_utt, l.l_mdd, l.l_total);
    return true;
  };
  const auto result = training::train(m, ds.utterances, cfg.train, hooks);
  data::save_model(m, cfg.data.model);

  const auto& last = result.epochs.back();
  nlohmann::ordered_json j;
  j["model"] = cfg.data.model.string();
  j["loss_log"] = cfg.data.loss_log.string();
  j["epochs"] = result.epochs.size();
  j["final"] = {{"l_phn", last.l_phn}, {"l_word", last.l_word}, {"l_utt", last.l_utt},
                {"l_apa", last.l_apa}, {"l_mdd", last.l_mdd},   {"l_total", last.l_total}};
  std::cout << j.dump(2) << "\n";
  return 0;
}

// ---- eval / score ----

struct EvalArgs {
  Common common;
  std::string model, data, out, id;
};

fs::path model_path(const EvalArgs& a, const data::RunConfig& cfg, const char* cmd) {
  if (!a.model.empty()) return a.model;
  if (!cfg.data.model.empty()) return cfg.data.model;
  throw UsageError(fmt::format("{}: no model path (--model or [data] model)", cmd));
}

fs::path data_path(const EvalArgs& a, const data::RunConfig& cfg, const char* cmd) {
  if (!a.data.empty()) return a.data;
  if (!cfg.data.test.empty()) return cfg.data.test;
  throw UsageError(fmt::format("{}: no dataset (--data or [data] test)", cmd));
}

int run_eval(const EvalArgs& a) {
  const auto cfg = a.common.load();
  const auto mpath = model_path(a, cfg, "eval");
  const auto dpath = data_path(a, cfg, "eval");
  const auto m = data::load_model(mpath);
  const auto ds = load_split(dpath, "test");
  const auto report = metrics::evaluate(m, ds.utterances);
  const auto text = report.to_json();
  if (!a.out.empty()) write_text(a.out, text);
  std::cout << text;
  return 0;
}

int run_score(const EvalArgs& a) {
  const auto cfg = a.common.load();
  const auto m = data::load_model(model_path(a, cfg, "score"));
  const auto ds = load_split(data_path(a, cfg, "score"), "test");
  const auto& u = a.id.empty() ? ds.utterances.front() : ds.find(a.id);
  const auto b = m.predict(u);
  const auto predicted = metrics::predicted_phones(b.mdd_logits);

  using data::ScoreLevel;
  nlohmann::ordered_json j;
  j["id"] = u.id;
  auto phones = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < u.size(); ++i) {
    phones.push_back({{"canonical", features::PhoneInventory::symbol(u.canonical[i])},
                      {"predicted", features::PhoneInventory::symbol(predicted[i])},
                      {"mispronounced", predicted[i] != u.canonical[i]},
                      {"score", data::denormalize(b.phone_scores[i], ScoreLevel::phone)},
                      {"word", u.word_of_phone[i]}});
  }
  j["phones"] = phones;
  auto words = nlohmann::ordered_json::array();
  for (std::size_t w = 0; w < b.word_scores.rows(); ++w) {
    words.push_back({{"accuracy", data::denormalize(b.word_scores(w, 0), ScoreLevel::word)},
                     {"stress", data::denormalize(b.word_scores(w, 1), ScoreLevel::word)},
                     {"total", data::denormalize(b.word_scores(w, 2), ScoreLevel::word)}});
  }
  j["words"] = words;
  nlohmann::ordered_json utt;
  for (std::size_t k = 0; k < scoring::kAspectCount; ++k) {
    utt[std::string(scoring::aspect_name(scoring::kAspects[k]))] =
        data::denormalize(b.utterance_scores[k], ScoreLevel::utterance);
  }
  j["utterance"] = utt;
  std::cout << j.dump(2) << "\n";
  return 0;
}

// ---- gradcheck ----

struct GradArgs {
  Common common;
  double tolerance = 1e-4;
};

int run_gradcheck(const GradArgs& a) {
  const auto cfg = a.common.load();
  const auto cases = training::run_grad_suite(a.common.seed.value_or(cfg.train.seed), a.tolerance);
  bool ok = true;
  for (const auto& c : cases) {
    std::cout << fmt::format("{} {:<36} max_rel {:.3e}  scalars {:>5}  worst {}\n", c.passed ? "PASS" : "FAIL", c.name,
                             c.result.max_rel_error, c.result.checked, c.worst_param);
    ok = ok && c.passed;
  }
  std::cout << (ok ? "all gradient checks passed\n" : "gradient check FAILED\n");
  return ok ? 0 : 1;
}

// ---- import ----

struct ImportArgs {
  std::string scores, features, out;
};

int run_import(const ImportArgs& a) {
  auto records = data::import_speechocean(a.scores);
  fs::create_directories(a.out);
  if (!a.features.empty()) {
    const auto feats = data::read_feature_file(a.features);
    data::save_dataset(data::assemble_dataset(std::move(records), &feats), a.out);
  } else {
    std::ofstream out(fs::path(a.out) / data::kRecordsFile, std::ios::trunc);
    if (!out) throw FormatError(fmt::format("{}: cannot write records", a.out));
    for (const auto& r : records) out << data::serialize_record(r) << '\n';
    spdlog::warn("no --features given; place a matching {} next to the records before training",
                 data::kFeaturesFile);
  }
  spdlog::info("imported {} utterances into {}", records.size(), a.out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Joint pronunciation assessment and mispronunciation detection"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Write a synthetic corpus with a planted scoring rule");
  synth.common.add_to(s);
  s->add_option("--n", synth.n, "Number of utterances")->required()->check(CLI::PositiveNumber);
  s->add_option("--out", synth.out, "Output directory")->required();

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Train a model and write it with its loss log");
  train.common.add_to(t);
  t->add_option("--data", train.data, "Training dataset directory (or corpus root with train/)");
  t->add_option("--model-out", train.model_out, "Where to write the model (default model.bin)");
  t->add_option("--loss-log", train.loss_log, "Loss CSV, appended (default <model>.loss.csv)");
  t->add_option("--epochs", train.epochs);
  t->add_option("--lr", train.lr);
  t->add_option("--lr-final", train.lr_final, "cosine-decay the learning rate to this value");
  t->add_option("--alpha", train.alpha);
  t->add_option("--batch-size", train.batch_size);
  t->add_option("--threads", train.threads);

  EvalArgs eval;
  auto* e = app.add_subcommand("eval", "Print the evaluation report of a model on a dataset");
  eval.common.add_to(e);
  e->add_option("--model", eval.model, "Model file");
  e->add_option("--data", eval.data, "Dataset directory (or corpus root with test/)");
  e->add_option("--out", eval.out, "Also write the report here");

  EvalArgs score;
  auto* sc = app.add_subcommand("score", "Print predictions for one utterance");
  score.common.add_to(sc);
  sc->add_option("--model", score.model, "Model file");
  sc->add_option("--data", score.data, "Dataset directory (or corpus root with test/)");
  sc->add_option("--id", score.id, "Utterance id (default: first)");

  GradArgs grad;
  auto* g = app.add_subcommand("gradcheck", "Finite-difference check of every layer and a tiny full model");
  grad.common.add_to(g);
  g->add_option("--tolerance", grad.tolerance, "Maximum relative error")->check(CLI::PositiveNumber);

  ImportArgs imp;
  auto* im = app.add_subcommand("import", "Convert speechocean762 scores.json annotations");
  im->add_option("--scores", imp.scores, "scores.json")->required()->check(CLI::ExistingFile);
  im->add_option("--features", imp.features, "Feature container keyed by utterance id")->check(CLI::ExistingFile);
  im->add_option("--out", imp.out, "Output dataset directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::ParseError& ex) {
    app.exit(ex);
    return 2;
  }

  try {
    if (s->parsed()) return run_synth(synth);
    if (t->parsed()) return run_train(train);
    if (e->parsed()) return run_eval(eval);
    if (sc->parsed()) return run_score(score);
    if (g->parsed()) return run_gradcheck(grad);
    if (im->parsed()) return run_import(imp);
  } catch (const UsageError& ex) {
    std::cerr << ex.what() << "\n\n" << app.get_subcommands().front()->help();
    return 2;
  } catch (const std::exception& ex) {
    spdlog::error("{}", ex.what());
    return 1;
  }
  return 2;
}
