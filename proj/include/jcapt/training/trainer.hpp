#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "jcapt/model/model.hpp"
#include "jcapt/training/loss.hpp"
#include "jcapt/training/optim.hpp"

namespace jcapt::training {

using model::JcaptModel;

struct TrainConfig {
  double alpha = 0.3;
  double lr = 1e-3;
  // Cosine decay from lr (first epoch) to lr_final (last epoch); unset keeps lr constant.
  std::optional<double> lr_final;
  std::size_t epochs = 10;
  std::size_t batch_size = 8;
  std::uint64_t seed = 0;
  OptimizerKind optimizer = OptimizerKind::adam;
  // Worker threads for per-utterance gradients; results are reduced in a
  // fixed order so the thread count never changes the outcome.
  std::size_t threads = 1;
  void validate() const;
};

struct StepRecord {
  std::size_t epoch = 0;  // 1-based
  std::size_t batch = 0;  // 1-based within the epoch
  LossBreakdown mean;
  std::vector<LossBreakdown> per_utterance;
};

struct TrainHooks {
  std::function<void(const StepRecord&)> on_step;
  // Return false to stop after this epoch.
  std::function<bool(std::size_t epoch, const LossBreakdown&)> on_epoch;
  std::ostream* loss_log = nullptr;
};

struct TrainLog {
  std::vector<LossBreakdown> epochs;
};

// Mean-of-utterances losses and gradient for one batch.
struct BatchResult {
  diff::GradientSet grads;
  std::vector<LossBreakdown> losses;
  LossBreakdown mean;
};
BatchResult batch_gradient(const JcaptModel& model, const std::vector<const Utterance*>& batch, double alpha,
                           std::size_t threads = 1);

// Throws EmptyDatasetError on an empty dataset and NumericError (with
// epoch/batch/utterance) on a non-finite loss or parameter.
TrainLog train(JcaptModel& model, const std::vector<Utterance>& data, const TrainConfig& cfg,
               const TrainHooks& hooks = {});

// Learning rate used during `epoch` (1-based).
double epoch_lr(const TrainConfig& cfg, std::size_t epoch);

void write_loss_log_header(std::ostream& out);
void write_loss_log_row(std::ostream& out, std::size_t epoch, const LossBreakdown& l);

LossBreakdown mean_losses(const std::vector<LossBreakdown>& items);

struct FitStats {
  double phone_mse = 0.0;
  double mdd_accuracy = 0.0;
};
FitStats fit_stats(const JcaptModel& model, const std::vector<Utterance>& data);

struct OverfitReport {
  FitStats stats;
  std::size_t epochs = 0;
  bool passed = false;
  std::string diagnostic;
};

// Trains on a small set (1..64 utterances) until phone MSE < mse_target and
// MDD accuracy > acc_target, or cfg.epochs run out.
OverfitReport overfit_sanity(JcaptModel& model, const std::vector<Utterance>& data, const TrainConfig& cfg,
                             double mse_target = 0.01, double acc_target = 0.99, std::size_t check_every = 5);

}  // namespace jcapt::training
