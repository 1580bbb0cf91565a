#include "gpgs/error.hpp"

namespace gpgs {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::MissingFile: return "MissingFile";
    case ErrorKind::MalformedLine: return "MalformedLine";
    case ErrorKind::DanglingReference: return "DanglingReference";
    case ErrorKind::DuplicateId: return "DuplicateId";
    case ErrorKind::NoCorrespondences: return "NoCorrespondences";
    case ErrorKind::UnknownImage: return "UnknownImage";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::BadMagic: return "BadMagic";
    case ErrorKind::BadDims: return "BadDims";
    case ErrorKind::TruncatedPayload: return "TruncatedPayload";
    case ErrorKind::IoFailure: return "IoFailure";
    case ErrorKind::UnsupportedProperty: return "UnsupportedProperty";
    case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorKind::EmptyPredictionSet: return "EmptyPredictionSet";
    case ErrorKind::EmptySet: return "EmptySet";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::ConstantTruth: return "ConstantTruth";
  }
  return "Unknown";
}

}  // namespace gpgs
