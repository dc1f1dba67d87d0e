#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace daml {

enum class ErrorKind {
  MalformedName,
  InvalidConfig,
  InsufficientClasses,
  ShapeMismatch,
  ZeroVector,
  EmptyCluster,
  NoPreviousClassifier,
  InvalidState,
  DegenerateBatch,
  LabelOutOfRange,
  ClassCountMismatch,
  EpochSkipped,
  NoValidGallery,
  ConfigError,
  IoError,
};

std::string_view to_string(ErrorKind kind);

// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void raise(ErrorKind kind, const std::string& message);

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) raise(kind, message);
}

}  // namespace daml
