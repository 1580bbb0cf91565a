#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gpgs {

enum class ErrorKind {
  InvalidArgument,
  MissingFile,
  MalformedLine,
  DanglingReference,
  DuplicateId,
  NoCorrespondences,
  UnknownImage,
  DimensionMismatch,
  EmptyDataset,
  BadMagic,
  BadDims,
  TruncatedPayload,
  IoFailure,
  UnsupportedProperty,
  NotPositiveDefinite,
  EmptyPredictionSet,
  EmptySet,
  ShapeMismatch,
  ConstantTruth,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library carries a kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// True for failures caused by the numerics rather than the inputs.
inline bool is_numerical(ErrorKind kind) { return kind == ErrorKind::NotPositiveDefinite; }

}  // namespace gpgs
