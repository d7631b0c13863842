#pragma once

#include <stdexcept>
#include <string>

namespace landnav {

enum class ErrorKind { Input, Numerical };

/// Exception carrying a category that the command-line front end maps to an
/// exit code (input errors -> 2, numerical failures -> 3).
class NavError : public std::runtime_error {
 public:
  NavError(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline NavError input_error(const std::string& what) { return {ErrorKind::Input, what}; }
inline NavError numerical_error(const std::string& what) { return {ErrorKind::Numerical, what}; }

}  // namespace landnav
