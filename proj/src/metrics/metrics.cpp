#include "jcapt/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include <json.hpp>

#include "jcapt/errors.hpp"

namespace jcapt::metrics {

std::optional<double> pcc(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ContractError(fmt::format("pcc: length mismatch {} vs {}", x.size(), y.size()));
  const std::size_t n = x.size();
  if (n < 2) return std::nullopt;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double mse(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ContractError(fmt::format("mse: length mismatch {} vs {}", x.size(), y.size()));
  if (x.empty()) throw ContractError("mse: empty input");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
  return s / static_cast<double>(x.size());
}

MddConfusion& MddConfusion::operator+=(const MddConfusion& o) {
  ta += o.ta;
  fr += o.fr;
  fa += o.fa;
  tr += o.tr;
  cd += o.cd;
  return *this;
}

MddConfusion mdd_confusion(std::span<const PhoneId> canonical, std::span<const PhoneId> annotated,
                           std::span<const PhoneId> predicted) {
  if (canonical.size() != annotated.size() || canonical.size() != predicted.size()) {
    throw AlignmentError(fmt::format("mdd_confusion: lengths canonical {}, annotated {}, predicted {}",
                                     canonical.size(), annotated.size(), predicted.size()));
  }
  MddConfusion c;
  for (std::size_t i = 0; i < canonical.size(); ++i) {
    const bool flagged = predicted[i] != canonical[i];
    if (annotated[i] == canonical[i]) {
      ++(flagged ? c.fr : c.ta);
    } else if (!flagged) {
      ++c.fa;
    } else {
      ++c.tr;
      if (predicted[i] == annotated[i]) ++c.cd;
    }
  }
  return c;
}

namespace {
Rate ratio(std::size_t num, std::size_t den) {
  if (den == 0) return {0.0, true};
  return {static_cast<double>(num) / static_cast<double>(den), false};
}
}  // namespace

MddRates mdd_rates(const MddConfusion& c) {
  MddRates r;
  r.recall = ratio(c.tr, c.tr + c.fa);
  r.precision = ratio(c.tr, c.tr + c.fr);
  const double s = r.recall.value + r.precision.value;
  if (s == 0.0) {
    r.f1 = {0.0, true};
  } else {
    r.f1 = {2.0 * r.precision.value * r.recall.value / s, r.recall.undefined || r.precision.undefined};
  }
  r.correct_diag = ratio(c.cd, c.tr);
  return r;
}

PerCounts per_counts(std::span<const PhoneId> annotated, std::span<const PhoneId> predicted) {
  if (annotated.size() != predicted.size()) {
    throw AlignmentError(fmt::format("per: lengths annotated {}, predicted {}", annotated.size(), predicted.size()));
  }
  PerCounts c;
  for (std::size_t i = 0; i < annotated.size(); ++i) {
    if (annotated[i] != predicted[i]) ++c.errors;
    if (annotated[i] != features::kDeleted) ++c.reference;
  }
  return c;
}

double per(const PerCounts& c) {
  if (c.reference == 0) throw ContractError("per: reference has no spoken phones");
  return static_cast<double>(c.errors) / static_cast<double>(c.reference);
}

double per(std::span<const PhoneId> annotated, std::span<const PhoneId> predicted) {
  return per(per_counts(annotated, predicted));
}

std::vector<PhoneId> predicted_phones(const diff::Tensor& logits) {
  std::vector<PhoneId> out(logits.rows());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    auto r = logits.row(i);
    out[i] = static_cast<PhoneId>(std::max_element(r.begin(), r.end()) - r.begin());
  }
  return out;
}

namespace {

nlohmann::ordered_json opt(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

nlohmann::ordered_json rate(const Rate& r) { return r.undefined ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(r.value); }

constexpr std::array<const char*, 3> kWordFields = {"accuracy", "stress", "total"};

}  // namespace

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["utterances"] = utterances;
  j["phones"] = phones;
  j["words"] = words;
  j["phone"] = {{"mse", phone_mse}, {"pcc", opt(phone_pcc)}};
  nlohmann::ordered_json w;
  for (std::size_t k = 0; k < 3; ++k) w[kWordFields[k]] = {{"mse", word_mse[k]}, {"pcc", opt(word_pcc[k])}};
  j["word"] = w;
  nlohmann::ordered_json u;
  for (std::size_t k = 0; k < scoring::kAspectCount; ++k) {
    u[std::string(scoring::aspect_name(scoring::kAspects[k]))] = {{"mse", utterance_mse[k]},
                                                                   {"pcc", opt(utterance_pcc[k])}};
  }
  j["utterance"] = u;
  j["mdd"] = {{"ta", confusion.ta},     {"fr", confusion.fr},
              {"fa", confusion.fa},     {"tr", confusion.tr},
              {"cd", confusion.cd},     {"recall", rate(mdd.recall)},
              {"precision", rate(mdd.precision)}, {"f1", rate(mdd.f1)},
              {"per", per},             {"correct_diag", rate(mdd.correct_diag)}};
  return j.dump(2) + "\n";
}

EvalReport evaluate(const model::JcaptModel& m, const std::vector<model::Utterance>& data) {
  if (data.empty()) throw EmptyDatasetError("evaluate: dataset is empty");
  EvalReport rep;
  std::vector<double> phone_pred, phone_true;
  std::array<std::vector<double>, 3> word_pred, word_true;
  std::array<std::vector<double>, scoring::kAspectCount> utt_pred, utt_true;
  PerCounts pc;

  for (const auto& u : data) {
    try {
      u.validate(m.config().feature_dim);
      const auto b = m.predict(u);
      for (std::size_t i = 0; i < u.size(); ++i) {
        phone_pred.push_back(b.phone_scores[i]);
        phone_true.push_back(u.phone_scores[i]);
      }
      for (std::size_t w = 0; w < u.word_count(); ++w) {
        for (std::size_t k = 0; k < 3; ++k) {
          word_pred[k].push_back(b.word_scores(w, k));
          word_true[k].push_back(u.word_scores(w, k));
        }
      }
      for (std::size_t k = 0; k < scoring::kAspectCount; ++k) {
        utt_pred[k].push_back(b.utterance_scores[k]);
        utt_true[k].push_back(u.utterance_scores[k]);
      }
      const auto predicted = predicted_phones(b.mdd_logits);
      rep.confusion += mdd_confusion(u.canonical, u.realized, predicted);
      const auto c = per_counts(u.realized, predicted);
      pc.errors += c.errors;
      pc.reference += c.reference;
    } catch (const Error&) {
      rethrow_with_context(fmt::format("utterance '{}': ", u.id));
    }
    rep.phones += u.size();
    rep.words += u.word_count();
  }
  rep.utterances = data.size();
  rep.phone_mse = mse(phone_pred, phone_true);
  rep.phone_pcc = pcc(phone_pred, phone_true);
  for (std::size_t k = 0; k < 3; ++k) {
    rep.word_mse[k] = mse(word_pred[k], word_true[k]);
    rep.word_pcc[k] = pcc(word_pred[k], word_true[k]);
  }
  for (std::size_t k = 0; k < scoring::kAspectCount; ++k) {
    rep.utterance_mse[k] = mse(utt_pred[k], utt_true[k]);
    rep.utterance_pcc[k] = pcc(utt_pred[k], utt_true[k]);
  }
  rep.mdd = mdd_rates(rep.confusion);
  rep.per = per(pc);
  return rep;
}

}  // namespace jcapt::metrics
