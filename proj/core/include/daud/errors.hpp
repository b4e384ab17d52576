#pragma once

#include <stdexcept>
#include <string>

namespace daud {

// Error families map onto CLI exit codes: Config=2, Data=3, Backend=4, Invariant=5.
enum class ErrorKind { Config, Data, Backend, Invariant };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string code, const std::string& message)
      : std::runtime_error(code + ": " + message), kind_(kind), code_(std::move(code)) {}

  ErrorKind kind() const { return kind_; }
  const std::string& code() const { return code_; }

 private:
  ErrorKind kind_;
  std::string code_;
};

inline int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config: return 2;
    case ErrorKind::Data: return 3;
    case ErrorKind::Backend: return 4;
    case ErrorKind::Invariant: return 5;
  }
  return 1;
}

[[noreturn]] inline void throw_config(const std::string& code, const std::string& msg) {
  throw Error(ErrorKind::Config, code, msg);
}
[[noreturn]] inline void throw_data(const std::string& code, const std::string& msg) {
  throw Error(ErrorKind::Data, code, msg);
}
[[noreturn]] inline void throw_backend(const std::string& code, const std::string& msg) {
  throw Error(ErrorKind::Backend, code, msg);
}
[[noreturn]] inline void throw_invariant(const std::string& code, const std::string& msg) {
  throw Error(ErrorKind::Invariant, code, msg);
}

}  // namespace daud
