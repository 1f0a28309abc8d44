#include "jcapt/training/gradsuite.hpp"

#include <functional>
#include <random>

#include <fmt/format.h>

#include "jcapt/diff/ops.hpp"
#include "jcapt/features/frontend.hpp"
#include "jcapt/features/phones.hpp"
#include "jcapt/model/model.hpp"
#include "jcapt/scoring/heads.hpp"
#include "jcapt/ssm/encoder.hpp"
#include "jcapt/ssm/scan.hpp"
#include "jcapt/training/loss.hpp"

namespace jcapt::training {

namespace {

using diff::ParamStore;
using diff::Tape;
using diff::Tensor;
using diff::Var;

constexpr double kEpsilon = 3e-4;
constexpr std::size_t kPhones = 5;

Tensor uniform(diff::Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> d(lo, hi);
  for (auto& v : t.vec()) v = d(rng);
  return t;
}

// Scalar readout touching every element with a distinct fixed weight.
Var readout(Var y, const Tensor& w) { return diff::sum(diff::mul(y, y.tape->constant(w))); }

ssm::EncoderConfig tiny_encoder() {
  ssm::EncoderConfig cfg;
  cfg.d_model = 8;
  cfg.d_state = 4;
  cfg.think_tokens = 2;
  return cfg;
}

model::Utterance tiny_utterance(std::size_t feature_dim, Rng& rng) {
  model::Utterance u;
  u.id = "gradcheck";
  const std::vector<std::size_t> words = {0, 0, 1, 1, 1};
  for (std::size_t i = 0; i < kPhones; ++i) {
    const auto c = static_cast<features::PhoneId>(std::uniform_int_distribution<int>(0, features::kDeleted - 1)(rng));
    u.canonical.push_back(c);
    u.realized.push_back(i == 2 ? features::kDeleted : c);
    u.word_of_phone.push_back(words[i]);
    u.phone_scores.push_back(std::uniform_real_distribution<double>(0, 1)(rng));
  }
  u.word_scores = uniform({2, scoring::kWordScoreCount}, rng, 0.0, 1.0);
  for (auto& s : u.utterance_scores) s = std::uniform_real_distribution<double>(0, 1)(rng);
  u.features = uniform({kPhones, feature_dim}, rng);
  return u;
}

GradCase check(std::string name, const diff::LossBuilder& f, ParamStore& store, double tol) {
  GradCase c;
  c.name = std::move(name);
  c.result = diff::grad_check(f, store, kEpsilon, diff::Stencil::five_point);
  if (c.result.checked) c.worst_param = store[store.locate(c.result.worst_index).first].name;
  c.passed = c.result.max_rel_error <= tol;
  return c;
}

}  // namespace

std::vector<GradCase> run_grad_suite(std::uint64_t seed, double tol) {
  Rng rng(seed);
  std::vector<GradCase> out;

  {
    ParamStore store;
    const auto w1 = store.add("w1", uniform({4, 5}, rng)), b1 = store.add("b1", uniform({5}, rng));
    const auto w2 = store.add("w2", uniform({5, 3}, rng)), g = store.add("gain", uniform({3}, rng));
    const Tensor x = uniform({6, 4}, rng), w = uniform({6, 3}, rng);
    out.push_back(check(
        "diff.composition",
        [&](Tape& t, const ParamStore& s) {
          Var h = diff::tanh(diff::add_bias(diff::matmul(t.constant(x), t.param(s, w1)), t.param(s, b1)));
          h = diff::rms_norm(diff::silu(diff::matmul(h, t.param(s, w2))), t.param(s, g));
          return readout(diff::softmax(h), w);
        },
        store, tol));
  }

  for (auto mode : {ssm::ScanMode::sequential, ssm::ScanMode::parallel}) {
    ParamStore store;
    const std::size_t steps = 6, ch = 3, st = 2;
    const auto x = store.add("x", uniform({steps, ch}, rng));
    const auto delta = store.add("delta", uniform({steps, ch}, rng, 0.1, 1.0));
    const auto a = store.add("a", uniform({ch, st}, rng, -1.5, -0.1));
    const auto b = store.add("b", uniform({steps, st}, rng));
    const auto c = store.add("c", uniform({steps, st}, rng));
    const auto d = store.add("d", uniform({ch}, rng));
    const Tensor w = uniform({steps, ch}, rng);
    out.push_back(check(
        mode == ssm::ScanMode::sequential ? "ssm.selective_scan.sequential" : "ssm.selective_scan.parallel",
        [&](Tape& t, const ParamStore& s) {
          return readout(ssm::selective_scan(t.param(s, x), t.param(s, delta), t.param(s, a), t.param(s, b),
                                             t.param(s, c), t.param(s, d), mode),
                         w);
        },
        store, tol));
  }

  {
    ParamStore store;
    const auto cfg = tiny_encoder();
    ssm::MambaBlock block(cfg, "block", store, rng);
    diff::jitter(store, rng);
    const Tensor x = uniform({kPhones, cfg.d_model}, rng), w = uniform({kPhones, cfg.d_model}, rng);
    out.push_back(check(
        "ssm.mamba_block",
        [&](Tape& t, const ParamStore& s) { return readout(block.forward(t, s, t.constant(x)), w); }, store, tol));
  }

  for (auto combine : {ssm::Combine::concat_project, ssm::Combine::sum}) {
    ParamStore store;
    auto cfg = tiny_encoder();
    cfg.combine = combine;
    ssm::BiMambaEncoder enc(cfg, store, rng);
    diff::jitter(store, rng);
    const Tensor x = uniform({kPhones, cfg.d_model}, rng), w = uniform({kPhones, cfg.d_model}, rng);
    out.push_back(check(
        combine == ssm::Combine::sum ? "ssm.bimamba_encoder.sum" : "ssm.bimamba_encoder.concat_project",
        [&](Tape& t, const ParamStore& s) { return readout(enc.forward(t, s, t.constant(x)), w); }, store, tol));
  }

  const model::Utterance u = tiny_utterance(6, rng);
  {
    ParamStore store;
    features::FeatureFrontEnd fe(6, 8, features::PhonologicalTable::builtin(), store, rng);
    diff::jitter(store, rng);
    const Tensor w = uniform({kPhones, 8}, rng);
    out.push_back(check(
        "features.frontend",
        [&](Tape& t, const ParamStore& s) { return readout(fe.assemble(t, s, u.features, u.canonical), w); }, store,
        tol));
  }

  {
    ParamStore store;
    scoring::ScoringHeads heads(8, 0, store, rng);
    const auto h = store.add("input.h", uniform({kPhones, 8}, rng));
    diff::jitter(store, rng);
    const auto spans = u.spans();
    out.push_back(check(
        "scoring.heads",
        [&](Tape& t, const ParamStore& s) {
          return utterance_losses(heads.forward(t, s, t.param(s, h), spans), u, 0.3).l_total;
        },
        store, tol));
  }

  {
    model::ModelConfig cfg;
    cfg.encoder = tiny_encoder();
    cfg.feature_dim = 6;
    model::JcaptModel m(cfg, features::PhonologicalTable::builtin(), rng());
    diff::jitter(m.params(), rng);
    out.push_back(check(
        "model.full_tiny",
        [&](Tape& t, const ParamStore& s) { return utterance_losses(m.forward(t, s, u), u, 0.3).l_total; },
        m.params(), tol));
  }
  return out;
}

}  // namespace jcapt::training
