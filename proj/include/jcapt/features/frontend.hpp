#pragma once

#include <cstddef>
#include <span>

#include "jcapt/diff/init.hpp"
#include "jcapt/diff/params.hpp"
#include "jcapt/diff/tape.hpp"
#include "jcapt/features/phones.hpp"

namespace jcapt::features {

using diff::ParamId;
using diff::ParamStore;
using diff::Tape;
using diff::Tensor;
using diff::Var;

// [one-hot(41) ⊕ attributes(24)] for one phone.
Tensor canonical_input(PhoneId id, const PhonologicalTable& table);

// x̂ = x + c. Throws ContractError on a dimension mismatch.
Tensor fuse(const Tensor& x, const Tensor& c);
Var fuse(Var x, Var c);

// Projects phone-aligned acoustic features (GOP ⊕ SSL-style vector) and the
// symbolic canonical input into d_model and fuses them.
class FeatureFrontEnd {
 public:
  // Throws ContractError if two phones' canonical embeddings collide.
  FeatureFrontEnd(std::size_t feature_dim, std::size_t d_model, PhonologicalTable table, ParamStore& store, Rng& rng);

  std::size_t feature_dim() const { return feature_dim_; }
  std::size_t d_model() const { return d_model_; }
  const PhonologicalTable& table() const { return table_; }

  // N×F → N×d_model (affine).
  Var acoustic(Tape& tape, const ParamStore& store, const Tensor& features) const;
  // c_i = W_c · [onehot ⊕ attr] for each phone → N×d_model.
  Var canonical(Tape& tape, const ParamStore& store, std::span<const PhoneId> phones) const;
  // Row i = acoustic_i + canonical_i. Throws IntegrityError if the feature
  // row count differs from the phone count.
  Var assemble(Tape& tape, const ParamStore& store, const Tensor& features, std::span<const PhoneId> phones) const;

  Tensor canonical_embedding(const ParamStore& store, PhoneId id) const;
  void check_injective(const ParamStore& store) const;

  ParamId feat_w, feat_b, canon_w;

 private:
  std::size_t feature_dim_;
  std::size_t d_model_;
  PhonologicalTable table_;
};

}  // namespace jcapt::features
