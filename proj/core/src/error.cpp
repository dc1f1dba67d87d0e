#include "daml/error.hpp"

namespace daml {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MalformedName: return "MalformedName";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::InsufficientClasses: return "InsufficientClasses";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::ZeroVector: return "ZeroVector";
    case ErrorKind::EmptyCluster: return "EmptyCluster";
    case ErrorKind::NoPreviousClassifier: return "NoPreviousClassifier";
    case ErrorKind::InvalidState: return "InvalidState";
    case ErrorKind::DegenerateBatch: return "DegenerateBatch";
    case ErrorKind::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorKind::ClassCountMismatch: return "ClassCountMismatch";
    case ErrorKind::EpochSkipped: return "EpochSkipped";
    case ErrorKind::NoValidGallery: return "NoValidGallery";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

void raise(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace daml
