#ifndef ASCLTSIM_ERRORS_HPP
#define ASCLTSIM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace ascltsim {

// Exit-code contract: user-facing errors (bad arguments, bad config, bad
// model/size combinations) map to exit 1; InternalError maps to exit 2.

struct DomainError : std::runtime_error {
  explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct SizeError : std::runtime_error {
  explicit SizeError(const std::string& what) : std::runtime_error(what) {}
};

struct ModelError : std::runtime_error {
  explicit ModelError(const std::string& what) : std::runtime_error(what) {}
};

struct CalibrationError : std::runtime_error {
  explicit CalibrationError(const std::string& what) : std::runtime_error(what) {}
};

struct EmbeddingError : std::runtime_error {
  explicit EmbeddingError(const std::string& what) : std::runtime_error(what) {}
};

struct IoError : std::runtime_error {
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// Invariant violations inside the library itself.
struct InternalError : std::logic_error {
  explicit InternalError(const std::string& what) : std::logic_error(what) {}
};

}  // namespace ascltsim

#endif
