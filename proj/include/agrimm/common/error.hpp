#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace agrimm {

/// Failure kinds raised across the toolkit. Each operation documents the
/// subset it can raise; callers dispatch on `Error::code()`.
enum class Errc {
  // corpus
  ParseError,
  DuplicateId,
  UnknownComponent,
  DegenerateBox,
  EmptyCorpus,
  // synthesis
  MissingBinding,
  UnknownPlaceholder,
  EndpointError,
  ValidationFailed,
  MissingClass,
  JsonShapeError,
  NoJsonFound,
  StrictParseError,
  // review
  NotFound,
  StateError,
  PersistenceError,
  BindError,
  // metrics / judge
  LengthMismatch,
  EmptyMatrix,
  ZeroVector,
  DimensionMismatch,
  DimensionDrift,
  EmptyInput,
  EmptyField,
  ScoreOutOfRange,
  MissingJustification,
  OutOfRange,
  // modelmath
  BudgetTooSmall,
  ShapeError,
  IndexError,
  PositiveLogProb,
  // runtime
  ConfigError,
  IoError,
};

std::string_view errc_name(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, std::string detail, std::string message = {});

  Errc code() const noexcept { return code_; }
  /// Offending value: an id, field name, class list, line number, ...
  const std::string& detail() const noexcept { return detail_; }
  /// Raw upstream payload (e.g. the model response that failed validation).
  const std::string& raw() const noexcept { return raw_; }

  Error& with_raw(std::string raw) {
    raw_ = std::move(raw);
    return *this;
  }

 private:
  Errc code_;
  std::string detail_;
  std::string raw_;
};

}  // namespace agrimm
