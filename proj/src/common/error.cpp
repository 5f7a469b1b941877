#include "agrimm/common/error.hpp"

namespace agrimm {

std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::ParseError: return "ParseError";
    case Errc::DuplicateId: return "DuplicateId";
    case Errc::UnknownComponent: return "UnknownComponent";
    case Errc::DegenerateBox: return "DegenerateBox";
    case Errc::EmptyCorpus: return "EmptyCorpus";
    case Errc::MissingBinding: return "MissingBinding";
    case Errc::UnknownPlaceholder: return "UnknownPlaceholder";
    case Errc::EndpointError: return "EndpointError";
    case Errc::ValidationFailed: return "ValidationFailed";
    case Errc::MissingClass: return "MissingClass";
    case Errc::JsonShapeError: return "JsonShapeError";
    case Errc::NoJsonFound: return "NoJsonFound";
    case Errc::StrictParseError: return "StrictParseError";
    case Errc::NotFound: return "NotFound";
    case Errc::StateError: return "StateError";
    case Errc::PersistenceError: return "PersistenceError";
    case Errc::BindError: return "BindError";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::EmptyMatrix: return "EmptyMatrix";
    case Errc::ZeroVector: return "ZeroVector";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::DimensionDrift: return "DimensionDrift";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::EmptyField: return "EmptyField";
    case Errc::ScoreOutOfRange: return "ScoreOutOfRange";
    case Errc::MissingJustification: return "MissingJustification";
    case Errc::OutOfRange: return "OutOfRange";
    case Errc::BudgetTooSmall: return "BudgetTooSmall";
    case Errc::ShapeError: return "ShapeError";
    case Errc::IndexError: return "IndexError";
    case Errc::PositiveLogProb: return "PositiveLogProb";
    case Errc::ConfigError: return "ConfigError";
    case Errc::IoError: return "IoError";
  }
  return "Unknown";
}

namespace {

std::string compose(Errc code, const std::string& detail, const std::string& message) {
  std::string out(errc_name(code));
  if (!detail.empty()) out += "(" + detail + ")";
  if (!message.empty()) out += ": " + message;
  return out;
}

}  // namespace

Error::Error(Errc code, std::string detail, std::string message)
    : std::runtime_error(compose(code, detail, message)),
      code_(code),
      detail_(std::move(detail)) {}

}  // namespace agrimm
