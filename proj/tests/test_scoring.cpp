#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "jcapt/diff/gradcheck.hpp"
#include "jcapt/diff/ops.hpp"
#include "jcapt/errors.hpp"
#include "jcapt/scoring/heads.hpp"
#include "test_util.hpp"

using namespace jcapt;
using namespace jcapt::diff;
using namespace jcapt::scoring;
using testutil::random_tensor;
using testutil::uniform_int;
using testutil::weighted_sum;

namespace {

Tensor repeated_rows(const Tensor& row, std::size_t n) {
  Tensor h = Tensor::matrix(n, row.size());
  for (std::size_t i = 0; i < n; ++i) std::copy(row.data().begin(), row.data().end(), h.row(i).begin());
  return h;
}

}  // namespace

TEST_CASE("attention_weights") {
  Rng rng(11);
  ParamStore store;
  AspectPooler pooler(4, 2, "p", store, rng);

  SUBCASE("identical rows give uniform weights") {
    Tape tape;
    Tensor a = pooler.weights(tape, store, tape.constant(repeated_rows(random_tensor({4}, rng), 5))).value();
    for (double v : a.data()) CHECK(v == doctest::Approx(0.2).epsilon(1e-15));
  }
  SUBCASE("N = 1") {
    Tape tape;
    CHECK(pooler.weights(tape, store, tape.constant(random_tensor({1, 4}, rng))).value()[0] == 1.0);
  }
  SUBCASE("pre-softmax scores (2, 0)") {
    ParamStore s1;
    AspectPooler p1(1, 1, "p", s1, rng);
    s1[p1.w_proj].value = Tensor({1, 1}, 1.0);
    s1[p1.w_score].value = Tensor({1, 1}, 4.0);
    Tape tape;
    Var h = tape.constant(Tensor({2, 1}, {std::atanh(0.5), 0.0}));
    Tensor sc = p1.scores(tape, s1, h).value();
    CHECK(sc[0] == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(sc[1] == 0.0);
    Tensor a = p1.weights(tape, s1, h).value();
    CHECK(a[0] == doctest::Approx(0.8808).epsilon(1e-4));
    CHECK(a[1] == doctest::Approx(0.1192).epsilon(1e-4));
  }
  SUBCASE("weights are positive and sum to 1 for every aspect") {
    for (int trial = 0; trial < 100; ++trial) {
      ParamStore s;
      ScoringHeads heads(6, 0, s, rng);
      Tape tape;
      Var h = tape.constant(random_tensor({uniform_int(rng, 1, 40), 6}, rng, -3.0, 3.0));
      for (Aspect asp : kAspects) {
        Tensor a = heads.pooler(asp).weights(tape, s, h).value();
        CHECK(std::all_of(a.data().begin(), a.data().end(), [](double v) { return v > 0.0; }));
        CHECK(std::abs(std::accumulate(a.data().begin(), a.data().end(), 0.0) - 1.0) <= 1e-9);
      }
    }
  }
  SUBCASE("distinct aspects attend differently") {
    ParamStore s;
    ScoringHeads heads(8, 0, s, rng);
    Tape tape;
    Var h = tape.constant(random_tensor({6, 8}, rng));
    std::vector<Tensor> alphas;
    for (Aspect asp : kAspects) alphas.push_back(heads.pooler(asp).weights(tape, s, h).value());
    bool all_equal = true;
    for (const auto& a : alphas) all_equal = all_equal && a == alphas[0];
    CHECK_FALSE(all_equal);
  }
}

TEST_CASE("pool") {
  Rng rng(12);
  Tape tape;
  Tensor hv = random_tensor({4, 3}, rng);
  Var h = tape.constant(hv);

  SUBCASE("uniform alpha is the row mean") {
    Tensor out = pool(h, tape.constant(Tensor({4}, 0.25))).value();
    for (std::size_t k = 0; k < 3; ++k) {
      double m = 0.0;
      for (std::size_t i = 0; i < 4; ++i) m += hv(i, k) / 4.0;
      CHECK(out[k] == doctest::Approx(m).epsilon(1e-14));
    }
  }
  SUBCASE("one-hot alpha picks a row") {
    Tensor out = pool(h, tape.constant(Tensor({4}, {0.0, 0.0, 1.0, 0.0}))).value();
    for (std::size_t k = 0; k < 3; ++k) CHECK(out[k] == hv(2, k));
  }
  SUBCASE("convex hull per coordinate") {
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t n = uniform_int(rng, 1, 20);
      Tensor x = random_tensor({n, 5}, rng, -10.0, 10.0);
      Tensor logits = random_tensor({1, n}, rng, -5.0, 5.0);
      Var a = reshape(softmax(tape.constant(logits)), {n});
      Tensor out = pool(tape.constant(x), a).value();
      for (std::size_t k = 0; k < 5; ++k) {
        double lo = x(0, k), hi = x(0, k);
        for (std::size_t i = 1; i < n; ++i) {
          lo = std::min(lo, x(i, k));
          hi = std::max(hi, x(i, k));
        }
        CHECK(out[k] >= lo - 1e-12);
        CHECK(out[k] <= hi + 1e-12);
      }
    }
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(pool(h, tape.constant(Tensor({3}, 1.0 / 3.0))), ContractError);
    CHECK_THROWS_AS(pool(h, tape.constant(Tensor({4}, 0.3))), ContractError);
  }
}

TEST_CASE("word spans") {
  const std::size_t idx[] = {0, 0, 1, 2, 2, 2};
  CHECK(word_spans_from_index(idx) == WordSpans{{0, 2}, {2, 3}, {3, 6}});
  const std::size_t gap[] = {0, 2};
  const std::size_t back[] = {0, 1, 0};
  const std::size_t late[] = {1, 1};
  CHECK_THROWS_AS(word_spans_from_index(gap), AlignmentError);
  CHECK_THROWS_AS(word_spans_from_index(back), AlignmentError);
  CHECK_THROWS_AS(word_spans_from_index(late), AlignmentError);
  CHECK_THROWS_AS(validate_word_spans({{0, 2}, {1, 3}}, 3), AlignmentError);
  CHECK_THROWS_AS(validate_word_spans({{0, 1}, {2, 3}}, 3), AlignmentError);
  CHECK_THROWS_AS(validate_word_spans({{0, 1}, {1, 1}, {1, 3}}, 3), AlignmentError);
  CHECK_THROWS_AS(validate_word_spans({{0, 2}}, 3), AlignmentError);
  CHECK_THROWS_AS(validate_word_spans({}, 0), AlignmentError);
}

TEST_CASE("scoring heads") {
  Rng rng(13);
  const std::size_t d = 6;
  ParamStore store;
  ScoringHeads heads(d, 0, store, rng);
  CHECK(heads.d_attn() == 3);

  SUBCASE("phone-level shapes") {
    Tape tape;
    Var h = tape.constant(random_tensor({3, d}, rng));
    CHECK(heads.phone_scores(tape, store, h).shape() == Shape{3});
    CHECK(heads.mdd_logits(tape, store, h).shape() == Shape{3, 41});
  }
  SUBCASE("zero-weight phone head outputs its bias") {
    store[heads.phone_w].value.fill(0.0);
    store[heads.phone_b].value[0] = 0.37;
    Tape tape;
    Tensor s = heads.phone_scores(tape, store, tape.constant(random_tensor({4, d}, rng))).value();
    for (double v : s.data()) CHECK(v == 0.37);
  }
  SUBCASE("argmax invariant under a constant shift of a logit row") {
    Tape tape;
    Tensor logits = heads.mdd_logits(tape, store, tape.constant(random_tensor({5, d}, rng))).value();
    Tensor shifted = logits;
    for (std::size_t i = 0; i < 5; ++i) {
      for (auto& v : shifted.row(i)) v += 3.5 * static_cast<double>(i) - 7.0;
    }
    Tensor p = softmax(tape.constant(logits)).value();
    Tensor q = softmax(tape.constant(shifted)).value();
    for (std::size_t i = 0; i < 5; ++i) {
      auto a = std::max_element(p.row(i).begin(), p.row(i).end()) - p.row(i).begin();
      auto b = std::max_element(q.row(i).begin(), q.row(i).end()) - q.row(i).begin();
      CHECK(a == b);
    }
  }
  SUBCASE("one word spanning everything is regressor(mean H)") {
    Tape tape;
    Tensor hv = random_tensor({4, d}, rng);
    Tensor w = heads.word_scores(tape, store, tape.constant(hv), {{0, 4}}).value();
    const Tensor& ww = store[heads.word_w].value;
    for (std::size_t j = 0; j < 3; ++j) {
      double expect = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        double m = 0.0;
        for (std::size_t i = 0; i < 4; ++i) m += hv(i, k);
        expect += m / 4.0 * ww(k, j);
      }
      CHECK(w(0, j) == doctest::Approx(expect).epsilon(1e-13));
    }
  }
  SUBCASE("two identical single-phone words score identically") {
    Tape tape;
    Tensor w = heads.word_scores(tape, store, tape.constant(repeated_rows(random_tensor({d}, rng), 2)), {{0, 1}, {1, 2}})
                   .value();
    for (std::size_t j = 0; j < 3; ++j) CHECK(w(0, j) == w(1, j));
  }
  SUBCASE("3-phone / 2-word hand fixture") {
    ParamStore s;
    ScoringHeads small(2, 1, s, rng);
    s[small.word_w].value = Tensor({2, 3}, {1.0, 0.0, 2.0, 0.0, 1.0, -1.0});
    s[small.word_b].value = Tensor({3}, {0.5, 0.0, 0.0});
    Tape tape;
    Var h = tape.constant(Tensor({3, 2}, {1.0, 2.0, 3.0, 4.0, 5.0, 6.0}));
    Tensor w = small.word_scores(tape, s, h, {{0, 2}, {2, 3}}).value();
    // word 0 mean (2, 3): (2 + 0.5, 3, 4 - 3); word 1 row (5, 6): (5.5, 6, 10 - 6)
    CHECK(w == Tensor({2, 3}, {2.5, 3.0, 1.0, 5.5, 6.0, 4.0}));
  }
  SUBCASE("word pooling ignores order within a span of identical rows") {
    Tape tape;
    Tensor r1 = random_tensor({d}, rng), r2 = random_tensor({d}, rng);
    Tensor a = Tensor::matrix(3, d), b = Tensor::matrix(3, d);
    for (std::size_t k = 0; k < d; ++k) {
      a(0, k) = r1[k];
      a(1, k) = r1[k];
      a(2, k) = r2[k];
      b(0, k) = r1[k];
      b(1, k) = r1[k];
      b(2, k) = r2[k];
    }
    std::swap_ranges(b.row(0).begin(), b.row(0).end(), b.row(1).begin());
    Tensor wa = heads.word_scores(tape, store, tape.constant(a), {{0, 2}, {2, 3}}).value();
    Tensor wb = heads.word_scores(tape, store, tape.constant(b), {{0, 2}, {2, 3}}).value();
    CHECK(wa == wb);
  }
  SUBCASE("word head rejects a bad alignment") {
    Tape tape;
    CHECK_THROWS_AS(heads.word_scores(tape, store, tape.constant(random_tensor({3, d}, rng)), {{0, 1}, {2, 3}}),
                    AlignmentError);
  }
  SUBCASE("identical rows: utterance scores equal regressor(h_1), independent of N") {
    Tensor row = random_tensor({d}, rng);
    for (std::size_t n : {1u, 2u, 7u}) {
      Tape tape;
      Tensor u = heads.utterance_scores(tape, store, tape.constant(repeated_rows(row, n))).value();
      REQUIRE(u.size() == 5);
      for (Aspect a : kAspects) {
        const auto i = static_cast<std::size_t>(a);
        double expect = store[heads.utt_b[i]].value[0];
        for (std::size_t k = 0; k < d; ++k) expect += row[k] * store[heads.utt_w[i]].value(k, 0);
        CHECK(u[i] == doctest::Approx(expect).epsilon(1e-13));
      }
    }
  }
  SUBCASE("forward bundle") {
    Tape tape;
    auto out = heads.forward(tape, store, tape.constant(random_tensor({5, d}, rng)), {{0, 2}, {2, 5}});
    auto bundle = PredictionBundle::from(out);
    CHECK(bundle.phone_scores.shape() == Shape{5});
    CHECK(bundle.mdd_logits.shape() == Shape{5, 41});
    CHECK(bundle.word_scores.shape() == Shape{2, 3});
    CHECK(bundle.utterance_scores.shape() == Shape{5});
    CHECK(bundle.all_finite());
    CHECK_THROWS_AS(heads.forward(tape, store, tape.constant(random_tensor({5, d + 1}, rng)), {{0, 5}}),
                    DimensionError);
  }
}

TEST_CASE("every head passes grad_check") {
  Rng rng(14);
  const std::size_t d = 5, n = 4;
  ParamStore store;
  ScoringHeads heads(d, 0, store, rng);
  const ParamId h_id = store.add("input.h", random_tensor({n, d}, rng));
  const WordSpans spans{{0, 1}, {1, 4}};
  const std::size_t labels[] = {3, 40, 0, 17};

  auto run = [&](auto&& head) {
    auto f = [&](Tape& t, const ParamStore& s) { return head(t, s, t.param(s, h_id)); };
    auto r = grad_check(f, store);
    INFO(store[store.locate(r.worst_index).first].name, " analytic=", r.analytic, " numeric=", r.numeric);
    CHECK(r.max_rel_error <= 1e-4);
  };
  SUBCASE("phone regressor") { run([&](Tape& t, const ParamStore& s, Var h) { return weighted_sum(heads.phone_scores(t, s, h), 1); }); }
  SUBCASE("mdd classifier") {
    run([&](Tape& t, const ParamStore& s, Var h) { return cross_entropy(heads.mdd_logits(t, s, h), labels); });
  }
  SUBCASE("word regressor") {
    run([&](Tape& t, const ParamStore& s, Var h) { return weighted_sum(heads.word_scores(t, s, h, spans), 2); });
  }
  SUBCASE("utterance regressors with attention pooling") {
    run([&](Tape& t, const ParamStore& s, Var h) { return weighted_sum(heads.utterance_scores(t, s, h), 3); });
  }
}
