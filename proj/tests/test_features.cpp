#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "doctest.h"
#include "jcapt/errors.hpp"
#include "jcapt/features/frontend.hpp"
#include "jcapt/features/gop.hpp"
#include "jcapt/features/phones.hpp"
#include "test_util.hpp"

using namespace jcapt;
using namespace jcapt::features;
using testutil::random_tensor;
using testutil::uniform_int;

namespace {

Tensor one_hot_posteriors(std::size_t frames, PhoneId id) {
  Tensor p = Tensor::matrix(frames, kPhoneCount);
  for (std::size_t t = 0; t < frames; ++t) p(t, id) = 1.0;
  return p;
}

// Random posterior rows (normalized exponentials).
Tensor random_posteriors(Rng& rng, std::size_t frames) {
  Tensor p = random_tensor({frames, kPhoneCount}, rng, -3.0, 3.0);
  for (std::size_t t = 0; t < frames; ++t) {
    double z = 0.0;
    for (auto& v : p.row(t)) z += (v = std::exp(v));
    for (auto& v : p.row(t)) v /= z;
  }
  return p;
}

}  // namespace

TEST_CASE("phone inventory") {
  CHECK(PhoneInventory::symbols().size() == 41);
  CHECK(PhoneInventory::id("AA") == 0);
  CHECK(PhoneInventory::id("ZH") == 38);
  CHECK(PhoneInventory::id("<del>") == kDeleted);
  CHECK(PhoneInventory::id("<unk>") == kUnknown);
  for (PhoneId id = 0; id < kPhoneCount; ++id) CHECK(PhoneInventory::id(PhoneInventory::symbol(id)) == id);
  try {
    PhoneInventory::id("QQ");
    FAIL("expected InventoryError");
  } catch (const InventoryError& e) {
    CHECK(std::string(e.what()).find("QQ") != std::string::npos);
  }
  CHECK_THROWS_AS(PhoneInventory::symbol(41), InventoryError);
}

TEST_CASE("compute_gop") {
  SUBCASE("certain canonical phone gives 0") {
    auto r = compute_gop(one_hot_posteriors(4, 7), 7);
    CHECK(r.value == 0.0);
    CHECK_FALSE(r.clamped);
  }
  SUBCASE("uniform posteriors give log(1/41)") {
    Tensor p = Tensor::matrix(3, kPhoneCount, 1.0 / 41.0);
    CHECK(compute_gop(p, 5).value == doctest::Approx(std::log(1.0 / 41.0)).epsilon(1e-12));
    CHECK(compute_gop(p, 5).value == doctest::Approx(-3.7136).epsilon(1e-4));
  }
  SUBCASE("two frames at 0.5 and 0.25") {
    Tensor p = Tensor::matrix(2, kPhoneCount);
    p(0, 3) = 0.5;
    p(0, 4) = 0.5;
    p(1, 3) = 0.25;
    p(1, 10) = 0.75;
    CHECK(compute_gop(p, 3).value == doctest::Approx((std::log(0.5) + std::log(0.25)) / 2).epsilon(1e-12));
    CHECK(compute_gop(p, 3).value == doctest::Approx(-1.0397).epsilon(1e-4));
  }
  SUBCASE("zero canonical posterior is clamped and flagged") {
    auto r = compute_gop(one_hot_posteriors(2, 1), 2);
    CHECK(r.clamped);
    CHECK(r.value == doctest::Approx(std::log(kGopFloor)));
  }
  SUBCASE("rows must sum to one") {
    Tensor p = one_hot_posteriors(2, 1);
    p(1, 2) = 0.01;
    CHECK_THROWS_AS(compute_gop(p, 1), ContractError);
  }
  SUBCASE("bad shapes and ids") {
    CHECK_THROWS_AS(compute_gop(Tensor::matrix(2, 40, 0.025), 1), DimensionError);
    CHECK_THROWS_AS(compute_gop(one_hot_posteriors(1, 1), 41), InventoryError);
  }
  SUBCASE("GOP <= 0 and is 0 only for certain frames") {
    Rng rng(5);
    for (int trial = 0; trial < 500; ++trial) {
      const PhoneId id = uniform_int(rng, 0, kPhoneCount - 1);
      auto r = compute_gop(random_posteriors(rng, uniform_int(rng, 1, 8)), id);
      CHECK(r.value <= 0.0);
      CHECK(r.value < 0.0);
    }
  }
}

// Standard articulatory facts checked against the shipped table.
TEST_CASE("phonological table fixture") {
  const auto& table = PhonologicalTable::builtin();
  const PhoneId b = PhoneInventory::id("B");
  CHECK(table.has(b, "voiced"));
  CHECK(table.has(b, "bilabial"));
  CHECK(table.has(b, "stop"));
  CHECK_FALSE(table.has(PhoneInventory::id("P"), "voiced"));
  CHECK(table.has(PhoneInventory::id("M"), "nasal"));
  CHECK(table.has(PhoneInventory::id("IY"), "high"));
  CHECK(table.has(PhoneInventory::id("IY"), "front"));
  CHECK(table.has(PhoneInventory::id("UW"), "round"));
  CHECK(table.has(PhoneInventory::id("OY"), "diphthong"));
  CHECK(table.has(PhoneInventory::id("SH"), "postalveolar"));
  CHECK(table.has(PhoneInventory::id("CH"), "affricate"));
  CHECK(table.has(PhoneInventory::id("HH"), "glottal"));
  CHECK(table.has(PhoneInventory::id("F"), "labiodental"));
  CHECK(table.has(PhoneInventory::id("TH"), "dental"));
  CHECK(table.has(PhoneInventory::id("Y"), "palatal"));
  CHECK(table.has(PhoneInventory::id("NG"), "velar"));
  CHECK(table.version() == 1);

  for (PhoneId id : {kDeleted, kUnknown}) {
    const auto& row = table.row(id);
    CHECK(std::all_of(row.begin(), row.end(), [](auto v) { return v == 0; }));
  }
  for (PhoneId id = 0; id < kDeleted; ++id) {
    const auto& row = table.row(id);
    CHECK(std::accumulate(row.begin(), row.end(), 0) >= 2);
  }
}

TEST_CASE("phonological table parsing") {
  const auto& table = PhonologicalTable::builtin();
  SUBCASE("serialize/parse preserves rows and checksum") {
    auto again = PhonologicalTable::parse(table.serialize());
    CHECK(again.checksum() == table.checksum());
    for (PhoneId id = 0; id < kPhoneCount; ++id) CHECK(again.row(id) == table.row(id));
  }
  auto mutate = [&](const std::string& symbol, std::size_t attr, char bit) {
    std::string text = table.serialize();
    const std::string key = "\n" + symbol + " ";
    auto pos = text.find(key);
    REQUIRE(pos != std::string::npos);
    text[pos + key.size() + 2 * attr] = bit;
    return text;
  };
  SUBCASE("vowel with two heights is rejected") {
    // AA is low; also set high (index 16)
    CHECK_THROWS_AS(PhonologicalTable::parse(mutate("AA", 16, '1')), FormatError);
  }
  SUBCASE("nonzero <del> row is rejected") { CHECK_THROWS_AS(PhonologicalTable::parse(mutate("<del>", 0, '1')), FormatError); }
  SUBCASE("real phone with one attribute is rejected") {
    // P is stop + bilabial; clear bilabial (index 8)
    CHECK_THROWS_AS(PhonologicalTable::parse(mutate("P", 8, '0')), FormatError);
  }
  SUBCASE("changed bit changes the checksum") {
    auto other = PhonologicalTable::parse(mutate("B", 22, '1'));
    CHECK(other.checksum() != table.checksum());
  }
  SUBCASE("missing row, bad symbol, bad bit") {
    std::string text = table.serialize();
    auto pos = text.find("\nZH ");
    CHECK_THROWS_AS(PhonologicalTable::parse(text.substr(0, pos + 1)), FormatError);
    CHECK_THROWS_AS(PhonologicalTable::parse(text + "XX 0 0\n"), FormatError);
    CHECK_THROWS_AS(PhonologicalTable::parse(mutate("B", 3, '2')), FormatError);
    CHECK_THROWS_AS(PhonologicalTable::load("/nonexistent/table.txt"), FormatError);
  }
}

TEST_CASE("canonical embedding and fusion") {
  Rng rng(3);
  ParamStore store;
  FeatureFrontEnd fe(33, 8, PhonologicalTable::builtin(), store, rng);

  SUBCASE("canonical input layout") {
    Tensor del = canonical_input(kDeleted, fe.table());
    CHECK(del.size() == 65);
    CHECK(del[kDeleted] == 1.0);
    for (std::size_t a = 0; a < kAttributeCount; ++a) CHECK(del[kPhoneCount + a] == 0.0);
    Tensor b = canonical_input(PhoneInventory::id("B"), fe.table());
    CHECK(b[kPhoneCount + 0] == 1.0);  // voiced
    CHECK(b[kPhoneCount + 1] == 1.0);  // stop
    CHECK(b[kPhoneCount + 8] == 1.0);  // bilabial
    CHECK_THROWS_AS(canonical_input(99, fe.table()), InventoryError);
  }
  SUBCASE("identical phones at different positions embed identically") {
    Tape tape;
    const PhoneId phones[] = {4, 9, 4};
    Var c = fe.canonical(tape, store, phones);
    for (std::size_t k = 0; k < 8; ++k) CHECK(c.value()(0, k) == c.value()(2, k));
    CHECK(fe.canonical_embedding(store, 4) == fe.canonical_embedding(store, 4));
  }
  SUBCASE("embeddings are injective; a degenerate projection is caught") {
    CHECK_NOTHROW(fe.check_injective(store));
    store[fe.canon_w].value.fill(0.0);
    CHECK_THROWS_AS(fe.check_injective(store), ContractError);
  }
  SUBCASE("fuse examples") {
    Tensor x({2}, {1.0, 2.0}), c({2}, {3.0, 4.0}), zero({2}, 0.0);
    CHECK(fuse(x, c) == Tensor({2}, {4.0, 6.0}));
    CHECK(fuse(x, zero) == x);
    CHECK(fuse(zero, c) == c);
    CHECK_THROWS_AS(fuse(x, Tensor({3}, 0.0)), ContractError);
  }
  SUBCASE("fuse is commutative to the last bit") {
    for (int trial = 0; trial < 200; ++trial) {
      Tensor a = random_tensor({uniform_int(rng, 1, 64)}, rng, -1e3, 1e3);
      Tensor b = random_tensor(a.shape(), rng, -1e-3, 1e-3);
      CHECK(fuse(a, b) == fuse(b, a));
    }
  }
}

TEST_CASE("assemble_utterance_features") {
  Rng rng(4);
  ParamStore store;
  const std::size_t feat = 5, d = 6;
  FeatureFrontEnd fe(feat, d, PhonologicalTable::builtin(), store, rng);
  store[fe.feat_b].value = random_tensor({d}, rng);

  SUBCASE("N = 1") {
    Tape tape;
    const PhoneId p[] = {12};
    Var x = fe.assemble(tape, store, random_tensor({1, feat}, rng), p);
    CHECK(x.value().rows() == 1);
    CHECK(x.value().cols() == d);
  }
  SUBCASE("matches a hand-composed pipeline on 3 phones") {
    Tensor features = random_tensor({3, feat}, rng);
    const PhoneId phones[] = {PhoneInventory::id("K"), PhoneInventory::id("AE"), PhoneInventory::id("T")};
    Tape tape;
    Tensor got = fe.assemble(tape, store, features, phones).value();
    const Tensor& w = store[fe.feat_w].value;
    const Tensor& b = store[fe.feat_b].value;
    const Tensor& wc = store[fe.canon_w].value;
    for (std::size_t i = 0; i < 3; ++i) {
      Tensor in = canonical_input(phones[i], fe.table());
      for (std::size_t k = 0; k < d; ++k) {
        double x = b[k], c = 0.0;
        for (std::size_t f = 0; f < feat; ++f) x += features(i, f) * w(f, k);
        for (std::size_t j = 0; j < kCanonicalInputDim; ++j) c += in[j] * wc(j, k);
        CHECK(got(i, k) == doctest::Approx(x + c).epsilon(1e-13));
      }
    }
  }
  SUBCASE("permuting phones permutes rows") {
    Tensor features = random_tensor({4, feat}, rng);
    const PhoneId phones[] = {1, 20, 7, 33};
    const std::size_t perm[] = {2, 0, 3, 1};
    Tensor pf = Tensor::matrix(4, feat);
    PhoneId pp[4];
    for (std::size_t i = 0; i < 4; ++i) {
      pp[i] = phones[perm[i]];
      for (std::size_t f = 0; f < feat; ++f) pf(i, f) = features(perm[i], f);
    }
    Tape tape;
    Tensor base = fe.assemble(tape, store, features, phones).value();
    Tensor permuted = fe.assemble(tape, store, pf, pp).value();
    for (std::size_t i = 0; i < 4; ++i) {
      for (std::size_t k = 0; k < d; ++k) CHECK(permuted(i, k) == base(perm[i], k));
    }
  }
  SUBCASE("row count mismatch is an integrity error") {
    Tape tape;
    const PhoneId phones[] = {1, 2, 3};
    CHECK_THROWS_AS(fe.assemble(tape, store, random_tensor({2, feat}, rng), phones), IntegrityError);
  }
}
