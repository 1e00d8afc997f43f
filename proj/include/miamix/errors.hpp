#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace miamix {

/// Bad argument to a library call (dimension mismatch, out-of-range value).
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Configuration rejected by validation.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Filesystem failure; the message names the offending path.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed manifest, sidecar or config text.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unsupported or corrupt image file.
class DecodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An internal postcondition did not hold.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

namespace detail {

// Message is only turned into a std::string on failure, so literal
// messages cost nothing in hot loops.
template <typename Error = ArgumentError, typename Message>
inline void require(bool condition, Message&& message) {
  if (!condition) [[unlikely]] throw Error(std::string(std::forward<Message>(message)));
}

}  // namespace detail
}  // namespace miamix
