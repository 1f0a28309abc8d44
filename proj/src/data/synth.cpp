#include "jcapt/data/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include <fmt/format.h>

#include <json.hpp>

#include "jcapt/data/scores.hpp"
#include "jcapt/errors.hpp"
#include "jcapt/features/gop.hpp"

namespace jcapt::data {

namespace {

using features::kDeleted;
using features::kPhoneCount;
using features::PhoneId;

// Gram-Schmidt on a Gaussian matrix.
Tensor random_orthogonal(std::size_t n, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Tensor q = Tensor::matrix(n, n);
  for (;;) {
    for (auto& v : q.vec()) v = g(rng);
    bool ok = true;
    for (std::size_t c = 0; c < n && ok; ++c) {
      for (std::size_t p = 0; p < c; ++p) {
        double dot = 0.0;
        for (std::size_t r = 0; r < n; ++r) dot += q(r, c) * q(r, p);
        for (std::size_t r = 0; r < n; ++r) q(r, c) -= dot * q(r, p);
      }
      double norm = 0.0;
      for (std::size_t r = 0; r < n; ++r) norm += q(r, c) * q(r, c);
      norm = std::sqrt(norm);
      if (norm < 1e-6) ok = false;
      for (std::size_t r = 0; r < n && ok; ++r) q(r, c) /= norm;
    }
    if (ok) return q;
  }
}

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
std::size_t uniform_index(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}
double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

// Frame posteriors: the canonical phone gets about u of the mass; a
// substituted phone takes most of the rest.
double synth_gop(PhoneId canonical, PhoneId realized, double u, Rng& rng) {
  const std::size_t frames = uniform_index(rng, 2, 6);
  std::normal_distribution<double> jitter(0.0, 0.15);
  Tensor post = Tensor::matrix(frames, kPhoneCount);
  for (std::size_t t = 0; t < frames; ++t) {
    const double pc = std::clamp(u * std::exp(jitter(rng)), 0.01, 0.98);
    double rest = 1.0 - pc;
    post(t, canonical) = pc;
    std::size_t others = kPhoneCount - 1;
    if (realized != canonical && realized != kDeleted) {
      post(t, realized) = 0.7 * rest;
      rest *= 0.3;
      --others;
    }
    for (PhoneId k = 0; k < kPhoneCount; ++k) {
      if (k != canonical && (k != realized || realized == kDeleted || realized == canonical)) {
        post(t, k) = rest / static_cast<double>(others);
      }
    }
  }
  return features::compute_gop(post, canonical).value;
}

}  // namespace

SynthCorpus synth_corpus(std::size_t n, std::uint64_t seed, const SynthOptions& opt) {
  if (n == 0) throw ContractError("synth_corpus: n must be >= 1");
  if (opt.min_phones < 1 || opt.max_phones < opt.min_phones || opt.max_words < 1) {
    throw ContractError("synth_corpus: invalid phone/word bounds");
  }
  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const std::size_t latent = opt.code_dims + 1 + opt.nuisance_dims;

  Tensor codes = Tensor::matrix(kPhoneCount, opt.code_dims);
  for (auto& v : codes.vec()) v = gauss(rng);
  const Tensor q = random_orthogonal(latent, rng);

  SynthCorpus c;
  c.n = n;
  c.seed = seed;
  c.options = opt;
  const std::size_t n_train = n - n / 2;
  std::vector<UtteranceRecord> train, test;
  FeatureFile feats;
  double oracle_se = 0.0;
  std::size_t test_phones = 0, mispronounced = 0, total_phones = 0;

  for (std::size_t k = 0; k < n; ++k) {
    UtteranceRecord r;
    r.id = fmt::format("synth{:05d}", k);
    r.feature_key = r.id;
    const std::size_t words = uniform_index(rng, 1, opt.max_words);
    const std::size_t phones = uniform_index(rng, std::max(opt.min_phones, words), opt.max_phones);

    // Word boundaries: words - 1 distinct cut points in 1..phones-1.
    std::vector<std::size_t> cuts(phones - 1);
    for (std::size_t i = 0; i < cuts.size(); ++i) cuts[i] = i + 1;
    std::shuffle(cuts.begin(), cuts.end(), rng);
    cuts.resize(words - 1);
    std::sort(cuts.begin(), cuts.end());

    Tensor f = Tensor::matrix(phones, opt.feature_dim());
    std::vector<double> us(phones);
    std::size_t deleted = 0;
    for (std::size_t i = 0, w = 0; i < phones; ++i) {
      while (w < cuts.size() && cuts[w] <= i) ++w;
      const auto canonical = static_cast<PhoneId>(uniform_index(rng, 0, kDeleted - 1));
      PhoneId realized = canonical;
      const bool wrong = uniform(rng, 0.0, 1.0) < opt.mispronounce_rate;
      if (wrong) {
        if (uniform(rng, 0.0, 1.0) < opt.deletion_share) {
          realized = kDeleted;
          ++deleted;
        } else {
          realized = static_cast<PhoneId>(uniform_index(rng, 0, kDeleted - 2));
          if (realized >= canonical) ++realized;
        }
        ++mispronounced;
      }
      const double u = wrong ? uniform(rng, 0.10, 0.45) : uniform(rng, 0.55, 0.90);
      us[i] = u;
      const double score = u + uniform(rng, -opt.phone_noise, opt.phone_noise);
      r.phones.push_back({std::string(features::PhoneInventory::symbol(canonical)),
                          std::string(features::PhoneInventory::symbol(realized)),
                          denormalize(score, ScoreLevel::phone), w});
      if (k >= n_train) {
        oracle_se += (score - u) * (score - u);
        ++test_phones;
      }

      std::vector<double> z(latent);
      for (std::size_t d = 0; d < opt.code_dims; ++d) z[d] = codes(realized, d);
      z[opt.code_dims] = u;
      for (std::size_t d = opt.code_dims + 1; d < latent; ++d) z[d] = gauss(rng);
      f(i, 0) = synth_gop(canonical, realized, u, rng);
      for (std::size_t row = 0; row < latent; ++row) {
        double s = 0.0;
        for (std::size_t col = 0; col < latent; ++col) s += q(row, col) * z[col];
        f(i, 1 + row) = s;
      }
    }
    total_phones += phones;
    round_to_float(f);

    for (std::size_t w = 0; w < words; ++w) {
      double sum = 0.0, lo = 1.0;
      std::size_t cnt = 0;
      for (std::size_t i = 0; i < phones; ++i) {
        if (r.phones[i].word != w) continue;
        sum += us[i];
        lo = std::min(lo, us[i]);
        ++cnt;
      }
      const double acc = sum / static_cast<double>(cnt), stress = 0.3 + 0.6 * lo, total = 0.5 * acc + 0.5 * stress;
      auto noisy = [&](double v) {
        return denormalize(clamp01(v + uniform(rng, -opt.word_noise, opt.word_noise)), ScoreLevel::word);
      };
      r.words.push_back({noisy(acc), noisy(stress), noisy(total)});
    }

    double mean_u = 0.0;
    for (double u : us) mean_u += u;
    mean_u /= static_cast<double>(phones);
    const double acc = mean_u, comp = 1.0 - static_cast<double>(deleted) / static_cast<double>(phones);
    const double flu = 0.4 + 0.5 * mean_u, pros = 0.35 + 0.55 * mean_u;
    const std::array<double, 5> clean = {acc, comp, flu, pros, (acc + comp + flu + pros) / 4.0};
    for (std::size_t a = 0; a < 5; ++a) {
      r.utterance[a] =
          denormalize(clamp01(clean[a] + uniform(rng, -opt.utterance_noise, opt.utterance_noise)), ScoreLevel::utterance);
    }

    feats.add(r.id, std::move(f));
    (k < n_train ? train : test).push_back(std::move(r));
  }

  c.train = assemble_dataset(std::move(train), &feats);
  c.test = assemble_dataset(std::move(test), &feats);
  c.oracle_test_phone_mse = test_phones ? oracle_se / static_cast<double>(test_phones) : 0.0;
  c.mispronounced_fraction = static_cast<double>(mispronounced) / static_cast<double>(total_phones);
  return c;
}

std::string SynthCorpus::report_json() const {
  nlohmann::ordered_json j;
  j["n"] = n;
  j["seed"] = seed;
  j["train_utterances"] = train.size();
  j["test_utterances"] = test.size();
  j["feature_dim"] = options.feature_dim();
  j["phone_noise"] = options.phone_noise;
  j["bayes_phone_mse"] = options.bayes_phone_mse();
  j["oracle_test_phone_mse"] = oracle_test_phone_mse;
  j["mispronounced_fraction"] = mispronounced_fraction;
  return j.dump(2) + "\n";
}

void write_synth_corpus(const SynthCorpus& c, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  save_dataset(c.train, dir / "train");
  if (c.test.size() > 0) save_dataset(c.test, dir / "test");
  std::ofstream out(dir / "synth_report.json", std::ios::trunc);
  if (!out) throw FormatError(fmt::format("{}: cannot write synth_report.json", dir.string()));
  out << c.report_json();
}

}  // namespace jcapt::data
