#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "doctest.h"
#include "jcapt/diff/gradcheck.hpp"
#include "jcapt/diff/ops.hpp"
#include "jcapt/errors.hpp"
#include "test_util.hpp"

using namespace jcapt;
using namespace jcapt::diff;
using testutil::random_tensor;
using testutil::uniform_int;
using testutil::weighted_sum;

TEST_CASE("softmax and tanh spot values") {
  Tape tape;
  auto s = softmax(tape.constant(Tensor({2}, {0.0, 0.0})));
  CHECK(s.value()[0] == doctest::Approx(0.5));
  CHECK(s.value()[1] == doctest::Approx(0.5));

  CHECK(diff::tanh(tape.constant(Tensor::scalar(0.0))).value().item() == 0.0);

  // e^2 / (e^2 + 1)
  const double expected = std::exp(2.0) / (std::exp(2.0) + 1.0);
  auto s2 = softmax(tape.constant(Tensor({2}, {2.0, 0.0})));
  CHECK(s2.value()[0] == doctest::Approx(expected).epsilon(1e-12));
  CHECK(s2.value()[0] == doctest::Approx(0.8808).epsilon(1e-4));
  CHECK(s2.value()[1] == doctest::Approx(0.1192).epsilon(1e-3));
}

TEST_CASE("softmax survives large logits") {
  Tape tape;
  auto s = softmax(tape.constant(Tensor({3}, {1000.0, 1000.0, -1000.0})));
  CHECK(s.value().all_finite());
  CHECK(s.value()[0] == doctest::Approx(0.5));
}

TEST_CASE("backward basics") {
  ParamStore store;
  auto x = store.add("x", Tensor::scalar(1.7));

  SUBCASE("identity loss has unit gradient") {
    Tape tape;
    auto g = tape.backward(tape.param(store, x));
    CHECK(g[x].item() == 1.0);
    CHECK(g.touched(x));
  }

  SUBCASE("mse at its minimum has zero gradient") {
    ParamStore s2;
    auto v = s2.add("v", Tensor({3}, {0.1, -2.0, 4.0}));
    Tape tape;
    auto g = tape.backward(mse(tape.param(s2, v), s2[v].value));
    for (double e : g[v].vec()) CHECK(e == 0.0);
  }

  SUBCASE("sum(A x) gives the column sums of A") {
    ParamStore s2;
    Rng rng(3);
    Tensor a = random_tensor({4, 3}, rng);
    auto v = s2.add("v", random_tensor({3, 1}, rng));
    Tape tape;
    auto g = tape.backward(sum(matmul(tape.constant(a), tape.param(s2, v))));
    for (std::size_t k = 0; k < 3; ++k) {
      double col = 0.0;
      for (std::size_t r = 0; r < 4; ++r) col += a(r, k);
      CHECK(g[v][k] == doctest::Approx(col).epsilon(1e-14));
    }
  }

  SUBCASE("parameter used twice accumulates by sum") {
    Tape tape;
    auto p = tape.param(store, x);
    auto g = tape.backward(add(mul(p, p), p));  // x^2 + x
    CHECK(g[x].item() == doctest::Approx(2 * 1.7 + 1));
  }

  SUBCASE("unreached parameters stay untouched") {
    ParamStore s2;
    auto a = s2.add("a", Tensor::scalar(1.0));
    auto b = s2.add("b", Tensor::scalar(2.0));
    Tape tape;
    tape.param(s2, b);
    auto g = tape.backward(scale(tape.param(s2, a), 3.0));
    CHECK(g.touched(a));
    CHECK_FALSE(g.touched(b));
    CHECK(g[b].item() == 0.0);
  }
}

TEST_CASE("error paths") {
  Tape tape;
  auto a = tape.constant(Tensor::matrix(2, 3, 1.0));
  auto b = tape.constant(Tensor::matrix(2, 3, 1.0));
  SUBCASE("matmul shape mismatch names the op and the shapes") {
    try {
      matmul(a, b);
      FAIL("expected DimensionError");
    } catch (const DimensionError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("matmul") != std::string::npos);
      CHECK(msg.find("[2x3]") != std::string::npos);
    }
  }
  SUBCASE("add shape mismatch") { CHECK_THROWS_AS(add(a, tape.constant(Tensor::matrix(3, 2))), DimensionError); }
  SUBCASE("non-scalar loss") { CHECK_THROWS_AS(tape.backward(a), ContractError); }
  SUBCASE("empty tape") {
    Tape other;
    Var dangling{&other, 0};
    CHECK_THROWS_AS(other.backward(dangling), ContractError);
  }
  SUBCASE("cross entropy label out of range") {
    std::vector<std::size_t> labels{0, 3};
    CHECK_THROWS_AS(cross_entropy(a, labels), ContractError);
  }
}

TEST_CASE("grad_check examples") {
  SUBCASE("x^2 at 3") {
    ParamStore store;
    auto x = store.add("x", Tensor::scalar(3.0));
    auto r = grad_check([x](Tape& t, const ParamStore& s) { auto p = t.param(s, x); return mul(p, p); }, store);
    CHECK(r.analytic == doctest::Approx(6.0));
    CHECK(r.max_rel_error < 1e-8);
  }

  SUBCASE("random 3-layer composition") {
    Rng rng(11);
    ParamStore store;
    auto w1 = store.add("w1", random_tensor({4, 5}, rng));
    auto b1 = store.add("b1", random_tensor({5}, rng));
    auto w2 = store.add("w2", random_tensor({5, 3}, rng));
    auto w3 = store.add("w3", random_tensor({3, 3}, rng));
    Tensor input = random_tensor({6, 4}, rng);
    auto f = [&](Tape& t, const ParamStore& s) {
      auto h = diff::tanh(add_bias(matmul(t.constant(input), t.param(s, w1)), t.param(s, b1)));
      h = silu(matmul(h, t.param(s, w2)));
      h = softmax(matmul(h, t.param(s, w3)));
      return weighted_sum(h, 5);
    };
    CHECK(grad_check(f, store).max_rel_error < 1e-4);
  }

  SUBCASE("wrong backward is caught") {
    ParamStore store;
    Rng rng(2);
    auto x = store.add("x", random_tensor({5}, rng, 0.5, 1.5));
    // Doubles x but reports a gradient of 1.5 instead of 2.
    auto f = [x](Tape& t, const ParamStore& s) {
      Var in = t.param(s, x);
      Tensor out = in.value();
      for (auto& v : out.vec()) v *= 2.0;
      Var y = t.record(std::move(out), {in}, [in](Tape& tp, const Tensor& g) {
        Tensor gi = g;
        for (auto& v : gi.vec()) v *= 1.5;
        tp.accumulate(in, gi);
      });
      return sum(y);
    };
    CHECK(grad_check(f, store).max_rel_error > 1e-2);
  }

  SUBCASE("five-point stencil is exact on a quartic") {
    ParamStore store;
    auto x = store.add("x", Tensor::scalar(0.7));
    auto f = [x](Tape& t, const ParamStore& s) {
      auto p = t.param(s, x);
      auto p2 = mul(p, p);
      return mul(p2, p2);
    };
    // 4·0.7³ = 1.372; the three-point rule is off by 4·x·eps² = 2.8e-6 at eps 1e-3.
    const auto three = grad_check(f, store, 1e-3);
    const auto five = grad_check(f, store, 1e-3, Stencil::five_point);
    CHECK(three.numeric - 1.372 == doctest::Approx(2.8e-6).epsilon(1e-6));
    CHECK(std::abs(five.numeric - 1.372) < 1e-11);
    CHECK(five.max_rel_error < 1e-10);
  }

  SUBCASE("epsilon range enforced") {
    ParamStore store;
    store.add("x", Tensor::scalar(1.0));
    auto f = [](Tape& t, const ParamStore& s) { return t.param(s, 0); };
    CHECK_THROWS_AS(grad_check(f, store, 1e-2), ContractError);
    CHECK_THROWS_AS(grad_check(f, store, 1e-7), ContractError);
  }

  SUBCASE("non-finite probe names the index") {
    ParamStore store;
    store.add("a", Tensor::scalar(1.0));
    store.add("b", Tensor::scalar(1.0));
    // finite at the base point, blows up once b is nudged upward
    auto f = [](Tape& t, const ParamStore& s) {
      Var b = t.param(s, 1);
      double bv = b.value().item();
      Tensor out = Tensor::scalar(bv > 1.0 ? std::nan("") : bv);
      return add(t.param(s, 0), t.record(std::move(out), {b}, [b](Tape& tp, const Tensor& g) { tp.accumulate(b, g); }));
    };
    try {
      grad_check(f, store);
      FAIL("expected NumericError");
    } catch (const NumericError& e) {
      CHECK(std::string(e.what()).find("index 1") != std::string::npos);
    }
  }
}

using UnaryOp = std::function<Var(Var)>;

// Every primitive against central differences on random shapes and values.
TEST_CASE("primitive gradients match finite differences") {
  Rng rng(2024);
  const int trials_per_op = 100;
  struct Unary {
    const char* name;
    UnaryOp op;
    double lo, hi;
  };
  std::vector<Unary> unaries = {
      {"tanh", [](Var a) { return diff::tanh(a); }, -2, 2},
      {"silu", [](Var a) { return silu(a); }, -3, 3},
      {"softplus", [](Var a) { return softplus(a); }, -3, 3},
      {"exp", [](Var a) { return diff::exp(a); }, -1, 1},
      {"softmax", [](Var a) { return softmax(a); }, -2, 2},
      {"scale", [](Var a) { return scale(a, -0.7); }, -1, 1},
      {"reverse_rows", [](Var a) { return reverse_rows(a); }, -1, 1},
      {"mean", [](Var a) { return diff::mean(a); }, -1, 1},
  };
  for (const auto& u : unaries) {
    double worst = 0.0;
    for (int trial = 0; trial < trials_per_op; ++trial) {
      ParamStore store;
      auto x = store.add("x", random_tensor({uniform_int(rng, 1, 5), uniform_int(rng, 1, 5)}, rng, u.lo, u.hi));
      const std::uint64_t wseed = rng();
      auto f = [&](Tape& t, const ParamStore& s) { return weighted_sum(u.op(t.param(s, x)), wseed); };
      worst = std::max(worst, grad_check(f, store).max_rel_error);
    }
    INFO(u.name);
    CHECK(worst < 1e-4);
  }

  struct Binary {
    const char* name;
    std::function<Var(Var, Var)> op;
    std::function<std::pair<Shape, Shape>(Rng&)> shapes;
  };
  auto same = [](Rng& r) {
    Shape s{uniform_int(r, 1, 5), uniform_int(r, 1, 5)};
    return std::pair{s, s};
  };
  std::vector<Binary> binaries = {
      {"add", [](Var a, Var b) { return add(a, b); }, same},
      {"sub", [](Var a, Var b) { return sub(a, b); }, same},
      {"mul", [](Var a, Var b) { return mul(a, b); }, same},
      {"matmul", [](Var a, Var b) { return matmul(a, b); },
       [](Rng& r) {
         std::size_t m = uniform_int(r, 1, 5), k = uniform_int(r, 1, 5), n = uniform_int(r, 1, 5);
         return std::pair{Shape{m, k}, Shape{k, n}};
       }},
      {"add_bias", [](Var a, Var b) { return add_bias(a, b); },
       [](Rng& r) {
         std::size_t m = uniform_int(r, 1, 5), n = uniform_int(r, 1, 5);
         return std::pair{Shape{m, n}, Shape{n}};
       }},
      {"mul_cols", [](Var a, Var b) { return mul_cols(a, b); },
       [](Rng& r) {
         std::size_t m = uniform_int(r, 1, 5), n = uniform_int(r, 1, 5);
         return std::pair{Shape{m, n}, Shape{n}};
       }},
      {"rms_norm", [](Var a, Var b) { return rms_norm(a, b); },
       [](Rng& r) {
         std::size_t m = uniform_int(r, 1, 5), n = uniform_int(r, 1, 5);
         return std::pair{Shape{m, n}, Shape{n}};
       }},
      {"concat_cols", [](Var a, Var b) { return concat_cols(a, b); },
       [](Rng& r) {
         std::size_t m = uniform_int(r, 1, 5);
         return std::pair{Shape{m, uniform_int(r, 1, 4)}, Shape{m, uniform_int(r, 1, 4)}};
       }},
      {"concat_rows", [](Var a, Var b) { return concat_rows(a, b); },
       [](Rng& r) {
         std::size_t n = uniform_int(r, 1, 5);
         return std::pair{Shape{uniform_int(r, 1, 4), n}, Shape{uniform_int(r, 1, 4), n}};
       }},
  };
  for (const auto& b : binaries) {
    double worst = 0.0;
    for (int trial = 0; trial < trials_per_op; ++trial) {
      auto [sa, sb] = b.shapes(rng);
      ParamStore store;
      auto pa = store.add("a", random_tensor(sa, rng));
      auto pb = store.add("b", random_tensor(sb, rng));
      const std::uint64_t wseed = rng();
      auto f = [&](Tape& t, const ParamStore& s) { return weighted_sum(b.op(t.param(s, pa), t.param(s, pb)), wseed); };
      worst = std::max(worst, grad_check(f, store).max_rel_error);
    }
    INFO(b.name);
    CHECK(worst < 1e-4);
  }

  double worst_struct = 0.0, worst_loss = 0.0;
  for (int trial = 0; trial < trials_per_op; ++trial) {
    const std::size_t rows = uniform_int(rng, 2, 7), cols = uniform_int(rng, 2, 5);
    ParamStore store;
    auto x = store.add("x", random_tensor({rows, cols}, rng));
    auto kern = store.add("k", random_tensor({uniform_int(rng, 1, 4), cols}, rng));
    auto bias = store.add("bias", random_tensor({cols}, rng));
    const std::size_t r0 = uniform_int(rng, 0, rows - 2), r1 = uniform_int(rng, r0 + 1, rows);
    const std::size_t c0 = uniform_int(rng, 0, cols - 2), c1 = uniform_int(rng, c0 + 1, cols);
    const std::size_t cut = uniform_int(rng, 1, rows - 1);
    std::vector<std::pair<std::size_t, std::size_t>> spans{{0, cut}, {cut, rows}};
    const std::uint64_t w1 = rng(), w2 = rng(), w3 = rng(), w4 = rng(), w5 = rng();
    auto f = [&](Tape& t, const ParamStore& s) {
      Var xv = t.param(s, x);
      Var l = add(weighted_sum(slice_rows(xv, r0, r1), w1), weighted_sum(slice_cols(xv, c0, c1), w2));
      l = add(l, weighted_sum(segment_mean(xv, spans), w3));
      l = add(l, weighted_sum(reshape(xv, {cols, rows}), w4));
      return add(l, weighted_sum(causal_depthwise_conv(xv, t.param(s, kern), t.param(s, bias)), w5));
    };
    worst_struct = std::max(worst_struct, grad_check(f, store).max_rel_error);

    ParamStore ls;
    auto logits = ls.add("logits", random_tensor({rows, cols}, rng, -2, 2));
    std::vector<std::size_t> labels(rows);
    for (auto& l : labels) l = uniform_int(rng, 0, cols - 1);
    Tensor target = random_tensor({rows, cols}, rng);
    auto lf = [&](Tape& t, const ParamStore& s) {
      Var lv = t.param(s, logits);
      return add(cross_entropy(lv, labels), mse(lv, target));
    };
    worst_loss = std::max(worst_loss, grad_check(lf, ls).max_rel_error);
  }
  CHECK(worst_struct < 1e-4);
  CHECK(worst_loss < 1e-4);
}

TEST_CASE("softmax rows are positive and sum to one") {
  Rng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    Tape tape;
    auto s = softmax(tape.constant(random_tensor({uniform_int(rng, 1, 6), uniform_int(rng, 1, 50)}, rng, -30, 30)));
    for (std::size_t r = 0; r < s.value().rows(); ++r) {
      double total = 0.0;
      for (double p : s.value().row(r)) {
        CHECK(p > 0.0);
        total += p;
      }
      CHECK(std::abs(total - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("backward is linear in the loss") {
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    ParamStore store;
    auto w = store.add("w", random_tensor({3, 4}, rng));
    Tensor input = random_tensor({5, 3}, rng);
    Tensor target = random_tensor({5, 4}, rng);
    std::vector<std::size_t> labels{0, 1, 2, 3, 0};
    auto first = [&](Tape& t) { return mse(diff::tanh(matmul(t.constant(input), t.param(store, w))), target); };
    auto second = [&](Tape& t) { return cross_entropy(matmul(t.constant(input), t.param(store, w)), labels); };

    Tape t1, t2, t3;
    auto g1 = t1.backward(first(t1));
    auto g2 = t2.backward(second(t2));
    auto g12 = t3.backward(add(first(t3), second(t3)));
    g1 += g2;
    CHECK(g12.max_abs_diff(g1) < 1e-12);
  }
}

TEST_CASE("tensor invariants") {
  CHECK_THROWS_AS(Tensor({2, 3}, std::vector<double>(5)), DimensionError);
  CHECK_THROWS_AS(Tensor({0, 3}), DimensionError);
  Tensor t({2, 3}, 1.0);
  CHECK(t.size() == 6);
  CHECK(t.rows() == 2);
  CHECK(t.cols() == 3);
  CHECK_THROWS_AS(t.item(), ContractError);
}
