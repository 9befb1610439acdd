#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "setre/data.hpp"
#include "setre/metrics.hpp"
#include "setre/model.hpp"

namespace setre {

struct TrainingConfig {
  int epochs = 100;
  int batch_size = 8;
  double encoder_lr = 1e-5;
  double decoder_lr = 2e-5;
  std::uint64_t seed = 42;
  double clip_norm = 1.0;
  double weight_decay = 0.01;
  double dev_fraction = 0.1;   // slice of the training corpus held out for model selection
  int eval_interval = 1;       // epochs between dev/stop-target evaluations
  double stop_at_train_f1 = 0.0;  // > 0: stop once exact train F1 reaches this value
};

struct DataConfig {
  std::string train_path;
  std::string test_path;
  CorpusFormat format = CorpusFormat::kNativeJsonl;
  MatchingMode mode = MatchingMode::kExact;
};

struct OutputConfig {
  std::string checkpoint_dir = "checkpoints";
  std::string report_path;
};

struct RunConfig {
  ModelConfig model;
  TrainingConfig training;
  DataConfig data;
  OutputConfig output;

  static RunConfig from_json_file(const std::string& path);
  static RunConfig from_json_text(const std::string& text);
  std::string to_json() const;
  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double dev_f1 = -1.0;    // -1 when no dev evaluation ran this epoch
  double train_f1 = -1.0;  // -1 when the stop target did not trigger an evaluation
};

struct TrainResult {
  Parameters params;       // best by dev F1 when a dev split exists, else final
  double best_dev_f1 = -1.0;
  std::vector<EpochRecord> curve;
  int epochs_run = 0;
};

/// Minimizes the set loss with AdamW over shuffled mini-batches; encoder and
/// decoder parameter groups run at their own learning rates. Emits one JSON
/// line per step and per epoch to `log` when given. Deterministic for a
/// fixed seed.
TrainResult train(const RunConfig& config, const Corpus& corpus, std::ostream* log = nullptr);

/// Eval-mode forward passes over the corpus; extracted triples are returned
/// in raw token coordinates, aligned with the corpus sentences.
std::vector<std::vector<ExtractedTriple>> predict_corpus(const Parameters& params,
                                                         const Corpus& corpus,
                                                         double min_confidence = 0.0);

EvalReport evaluate_corpus(const Parameters& params, const Corpus& corpus, MatchingMode mode,
                           double min_confidence = 0.0);

/// Checkpoint directory layout: params.bin (binary tensor container) plus
/// model.json (model configuration, vocabulary, relation inventory).
void save_model(const std::string& dir, const Parameters& params, const Vocabulary& vocab,
                const RelationInventory& relations);

struct LoadedModel {
  Parameters params;
  Vocabulary vocab;
  RelationInventory relations;
};

LoadedModel load_model(const std::string& dir);

}  // namespace setre
