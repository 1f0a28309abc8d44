#include "jcapt/features/frontend.hpp"

#include <fmt/format.h>

#include "jcapt/diff/ops.hpp"
#include "jcapt/errors.hpp"

namespace jcapt::features {

Tensor canonical_input(PhoneId id, const PhonologicalTable& table) {
  if (id >= kPhoneCount) throw InventoryError(fmt::format("canonical_input: phone id {} outside inventory", id));
  Tensor v({kCanonicalInputDim}, 0.0);
  v[id] = 1.0;
  const auto& row = table.row(id);
  for (std::size_t a = 0; a < kAttributeCount; ++a) v[kPhoneCount + a] = row[a];
  return v;
}

Tensor fuse(const Tensor& x, const Tensor& c) {
  if (x.shape() != c.shape()) {
    throw ContractError(
        fmt::format("fuse: acoustic {} and canonical {} differ", diff::shape_str(x.shape()), diff::shape_str(c.shape())));
  }
  Tensor out = x;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += c[i];
  return out;
}

Var fuse(Var x, Var c) {
  if (x.shape() != c.shape()) {
    throw ContractError(
        fmt::format("fuse: acoustic {} and canonical {} differ", diff::shape_str(x.shape()), diff::shape_str(c.shape())));
  }
  return diff::add(x, c);
}

FeatureFrontEnd::FeatureFrontEnd(std::size_t feature_dim, std::size_t d_model, PhonologicalTable table,
                                 ParamStore& store, Rng& rng)
    : feature_dim_(feature_dim), d_model_(d_model), table_(std::move(table)) {
  if (feature_dim_ == 0 || d_model_ == 0) throw ConfigError("feature front end: dimensions must be >= 1");
  feat_w = store.add("frontend.feat_w", diff::he_uniform({feature_dim_, d_model_}, feature_dim_, rng));
  feat_b = store.add("frontend.feat_b", Tensor({d_model_}, 0.0));
  canon_w = store.add("frontend.canon_w", diff::he_uniform({kCanonicalInputDim, d_model_}, kCanonicalInputDim, rng));
  check_injective(store);
}

Var FeatureFrontEnd::acoustic(Tape& tape, const ParamStore& store, const Tensor& features) const {
  if (features.rank() != 2 || features.cols() != feature_dim_) {
    throw DimensionError(fmt::format("acoustic projection: features {} do not have {} columns",
                                     diff::shape_str(features.shape()), feature_dim_));
  }
  return diff::add_bias(diff::matmul(tape.constant(features), tape.param(store, feat_w)), tape.param(store, feat_b));
}

Var FeatureFrontEnd::canonical(Tape& tape, const ParamStore& store, std::span<const PhoneId> phones) const {
  Tensor inputs = Tensor::matrix(phones.size(), kCanonicalInputDim);
  for (std::size_t i = 0; i < phones.size(); ++i) {
    Tensor row = canonical_input(phones[i], table_);
    std::copy(row.vec().begin(), row.vec().end(), inputs.row(i).begin());
  }
  return diff::matmul(tape.constant(std::move(inputs)), tape.param(store, canon_w));
}

Var FeatureFrontEnd::assemble(Tape& tape, const ParamStore& store, const Tensor& features,
                              std::span<const PhoneId> phones) const {
  if (phones.empty()) throw IntegrityError("assemble_utterance_features: utterance has no phones");
  if (features.rows() != phones.size()) {
    throw IntegrityError(fmt::format("assemble_utterance_features: {} feature rows for {} phones", features.rows(),
                                     phones.size()));
  }
  return fuse(acoustic(tape, store, features), canonical(tape, store, phones));
}

Tensor FeatureFrontEnd::canonical_embedding(const ParamStore& store, PhoneId id) const {
  Tape tape;
  const PhoneId one[] = {id};
  return Tensor({d_model_}, canonical(tape, store, one).value().vec());
}

void FeatureFrontEnd::check_injective(const ParamStore& store) const {
  std::vector<Tensor> emb;
  for (PhoneId id = 0; id < kPhoneCount; ++id) emb.push_back(canonical_embedding(store, id));
  for (PhoneId a = 0; a < kPhoneCount; ++a) {
    for (PhoneId b = a + 1; b < kPhoneCount; ++b) {
      if (emb[a] == emb[b]) {
        throw ContractError(fmt::format("canonical embeddings of '{}' and '{}' collide", PhoneInventory::symbol(a),
                                        PhoneInventory::symbol(b)));
      }
    }
  }
}

}  // namespace jcapt::features
