#pragma once

#include <stdexcept>
#include <string>

namespace jcapt {

// Root of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes are incompatible with a primitive.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A documented precondition was violated by the caller.
class ContractError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf encountered where finite values are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

class InventoryError : public Error {
 public:
  using Error::Error;
};

// Dataset records disagree with each other or with their feature rows.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

class EmptyDatasetError : public Error {
 public:
  using Error::Error;
};

class AlignmentError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed or incompatible file (dataset, feature container, model, table).
class FormatError : public Error {
 public:
  using Error::Error;
};

// Call inside a catch block: rethrows the active error with `prefix`
// prepended to its message, keeping its concrete type.
[[noreturn]] inline void rethrow_with_context(const std::string& prefix) {
  try {
    throw;
  } catch (const DimensionError& e) {
    throw DimensionError(prefix + e.what());
  } catch (const ContractError& e) {
    throw ContractError(prefix + e.what());
  } catch (const NumericError& e) {
    throw NumericError(prefix + e.what());
  } catch (const InventoryError& e) {
    throw InventoryError(prefix + e.what());
  } catch (const IntegrityError& e) {
    throw IntegrityError(prefix + e.what());
  } catch (const EmptyDatasetError& e) {
    throw EmptyDatasetError(prefix + e.what());
  } catch (const AlignmentError& e) {
    throw AlignmentError(prefix + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(prefix + e.what());
  } catch (const FormatError& e) {
    throw FormatError(prefix + e.what());
  } catch (const Error& e) {
    throw Error(prefix + e.what());
  }
}

}  // namespace jcapt
