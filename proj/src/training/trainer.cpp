#include "jcapt/training/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numbers>
#include <numeric>
#include <ostream>
#include <thread>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "jcapt/errors.hpp"

namespace jcapt::training {

void TrainConfig::validate() const {
  check_alpha(alpha);
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError(fmt::format("learning rate must be >= 0, got {}", lr));
  if (lr_final && (!(*lr_final >= 0.0) || !std::isfinite(*lr_final))) {
    throw ConfigError(fmt::format("final learning rate must be >= 0, got {}", *lr_final));
  }
  if (batch_size == 0) throw ConfigError("batch size must be >= 1");
  if (threads == 0) throw ConfigError("threads must be >= 1");
}

LossBreakdown mean_losses(const std::vector<LossBreakdown>& items) {
  LossBreakdown m;
  for (const auto& l : items) {
    m.l_phn += l.l_phn;
    m.l_word += l.l_word;
    m.l_utt += l.l_utt;
    m.l_apa += l.l_apa;
    m.l_mdd += l.l_mdd;
    m.l_total += l.l_total;
  }
  const double inv = items.empty() ? 0.0 : 1.0 / static_cast<double>(items.size());
  m.l_phn *= inv;
  m.l_word *= inv;
  m.l_utt *= inv;
  m.l_apa *= inv;
  m.l_mdd *= inv;
  m.l_total *= inv;
  return m;
}

BatchResult batch_gradient(const JcaptModel& model, const std::vector<const Utterance*>& batch, double alpha,
                           std::size_t threads) {
  if (batch.empty()) throw EmptyDatasetError("batch_gradient: empty batch");
  const auto& store = model.params();
  std::vector<diff::GradientSet> grads(batch.size());
  std::vector<LossBreakdown> losses(batch.size());
  std::vector<std::exception_ptr> errors(batch.size());

  auto run = [&](std::size_t i) {
    try {
      diff::Tape tape;
      LossTerms terms = utterance_losses(model.forward(tape, store, *batch[i]), *batch[i], alpha);
      losses[i] = terms.values();
      if (!std::isfinite(losses[i].l_total)) return;
      grads[i] = tape.backward(terms.l_total);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  const std::size_t workers = std::min(threads, batch.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < batch.size(); ++i) run(i);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < batch.size(); i += workers) run(i);
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  BatchResult out{diff::GradientSet(store), std::move(losses), {}};
  for (auto& g : grads) {
    if (g.size() != 0) out.grads += g;
  }
  out.grads.scale(1.0 / static_cast<double>(batch.size()));
  out.mean = mean_losses(out.losses);
  return out;
}

void write_loss_log_header(std::ostream& out) { out << "epoch,l_phn,l_word,l_utt,l_mdd,l_total\n"; }

void write_loss_log_row(std::ostream& out, std::size_t epoch, const LossBreakdown& l) {
  fmt::print(out, "{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", epoch, l.l_phn, l.l_word, l.l_utt, l.l_mdd,
             l.l_total);
  out.flush();
}

double epoch_lr(const TrainConfig& cfg, std::size_t epoch) {
  if (!cfg.lr_final || cfg.epochs < 2) return cfg.lr;
  const double t = static_cast<double>(epoch - 1) / static_cast<double>(cfg.epochs - 1);
  return *cfg.lr_final + 0.5 * (cfg.lr - *cfg.lr_final) * (1.0 + std::cos(std::numbers::pi * t));
}

TrainLog train(JcaptModel& model, const std::vector<Utterance>& data, const TrainConfig& cfg, const TrainHooks& hooks) {
  cfg.validate();
  if (data.empty()) throw EmptyDatasetError("train: empty dataset");
  for (const auto& u : data) u.validate(model.config().feature_dim);

  auto optimizer = make_optimizer(cfg.optimizer, cfg.lr);
  Rng rng(cfg.seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  TrainLog log;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    optimizer->set_lr(epoch_lr(cfg, epoch));
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<LossBreakdown> seen;
    seen.reserve(data.size());
    std::size_t batch_no = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      ++batch_no;
      std::vector<const Utterance*> batch;
      for (std::size_t i = start; i < std::min(order.size(), start + cfg.batch_size); ++i) batch.push_back(&data[order[i]]);

      BatchResult r = batch_gradient(model, batch, cfg.alpha, cfg.threads);
      for (std::size_t i = 0; i < batch.size(); ++i) {
        if (!std::isfinite(r.losses[i].l_total)) {
          throw NumericError(fmt::format("non-finite loss at epoch {}, batch {} (utterance '{}')", epoch, batch_no,
                                         batch[i]->id));
        }
      }
      optimizer->step(model.params(), r.grads);
      if (!model.params().all_finite()) {
        throw NumericError(fmt::format("non-finite parameter after epoch {}, batch {}", epoch, batch_no));
      }
      if (hooks.on_step) hooks.on_step(StepRecord{epoch, batch_no, r.mean, r.losses});
      seen.insert(seen.end(), r.losses.begin(), r.losses.end());
    }
    log.epochs.push_back(mean_losses(seen));
    if (hooks.loss_log) write_loss_log_row(*hooks.loss_log, epoch, log.epochs.back());
    if (hooks.on_epoch && !hooks.on_epoch(epoch, log.epochs.back())) break;
  }
  return log;
}

FitStats fit_stats(const JcaptModel& model, const std::vector<Utterance>& data) {
  double se = 0.0;
  std::size_t phones = 0, correct = 0;
  for (const auto& u : data) {
    auto p = model.predict(u);
    for (std::size_t i = 0; i < u.size(); ++i) {
      const double e = p.phone_scores[i] - u.phone_scores[i];
      se += e * e;
      auto row = p.mdd_logits.row(i);
      const auto best = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
      correct += best == u.realized[i];
    }
    phones += u.size();
  }
  if (phones == 0) return {};
  return {se / static_cast<double>(phones), static_cast<double>(correct) / static_cast<double>(phones)};
}

OverfitReport overfit_sanity(JcaptModel& model, const std::vector<Utterance>& data, const TrainConfig& cfg,
                             double mse_target, double acc_target, std::size_t check_every) {
  if (data.empty()) throw EmptyDatasetError("overfit_sanity: empty dataset");
  if (data.size() > 64) throw ContractError(fmt::format("overfit_sanity: {} utterances, at most 64", data.size()));
  OverfitReport report;
  auto met = [&] { return report.stats.phone_mse < mse_target && report.stats.mdd_accuracy > acc_target; };
  TrainHooks hooks;
  hooks.on_epoch = [&](std::size_t epoch, const LossBreakdown&) {
    report.epochs = epoch;
    if (epoch % std::max<std::size_t>(1, check_every) != 0 && epoch != cfg.epochs) return true;
    report.stats = fit_stats(model, data);
    return !met();
  };
  train(model, data, cfg, hooks);
  report.stats = fit_stats(model, data);
  report.passed = met();
  report.diagnostic = fmt::format("after {} epochs: phone MSE {:.6g} (target < {}), MDD accuracy {:.4f} (target > {})",
                                  report.epochs, report.stats.phone_mse, mse_target, report.stats.mdd_accuracy,
                                  acc_target);
  return report;
}

}  // namespace jcapt::training
