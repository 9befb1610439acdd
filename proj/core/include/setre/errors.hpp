#pragma once

#include <stdexcept>
#include <string>

namespace setre {

// Bad shapes, bad indices, contract violations. CLI maps this to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Missing files, parse failures, write failures. CLI maps this to exit code 2.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace setre
