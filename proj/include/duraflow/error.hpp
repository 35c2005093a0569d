#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace duraflow {

enum class ErrorCode {
  MissingHeader,
  MalformedRow,
  TooFewRows,
  AllMissingColumn,
  SchemaMismatch,
  SingleClassTraining,
  EmptyBranch,
  ZeroActual,
  EmptyInput,
  MissingCovers,
  InvalidArgument,
  Io,
  Format,
};

std::string_view to_string(ErrorCode code);

// All library failures surface as this type; the CLI maps it to exit code 1.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace duraflow
