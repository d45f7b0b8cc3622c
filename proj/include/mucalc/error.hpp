#pragma once

#include <stdexcept>
#include <string>

namespace mucalc {

enum class ErrorKind {
  Parse,        // malformed textual input (formula grammar, JSON)
  Invalid,      // semantic precondition violated (unknown node, bad decomposition, ...)
  SizeGuard,    // a configured size limit would be exceeded
  Internal,     // broken invariant inside the library
};

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, std::string msg) : std::runtime_error(std::move(msg)), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

private:
  ErrorKind kind_;
};

[[noreturn]] inline void throw_parse(const std::string& msg) { throw Error(ErrorKind::Parse, msg); }
[[noreturn]] inline void throw_invalid(const std::string& msg) { throw Error(ErrorKind::Invalid, msg); }
[[noreturn]] inline void throw_size_guard(const std::string& msg) { throw Error(ErrorKind::SizeGuard, msg); }
[[noreturn]] inline void throw_internal(const std::string& msg) { throw Error(ErrorKind::Internal, msg); }

} // namespace mucalc
