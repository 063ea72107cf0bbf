#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace uesentry {

using Bytes = std::vector<std::uint8_t>;

/// Validation failure while loading DSL/config input. The message names the
/// offending field and the violated constraint.
struct ValidationError {
  std::string message;
};

/// Wire-level failure in the SCP/1 codec or framing layer.
struct CodecError {
  std::string message;
};

/// Transport-level failure (connect, read, write, bind).
struct NetError {
  std::string message;
};

/// Minimal sum type for fallible operations. Either a value or an error,
/// never both; querying the wrong side is undefined.
template <typename T, typename E>
class Result {
 public:
  Result(T value) : v_(std::in_place_index<0>, std::move(value)) {}
  Result(E error) : v_(std::in_place_index<1>, std::move(error)) {}

  bool ok() const { return v_.index() == 0; }
  explicit operator bool() const { return ok(); }

  T& value() { return std::get<0>(v_); }
  const T& value() const { return std::get<0>(v_); }
  const E& error() const { return std::get<1>(v_); }

  T value_or(T fallback) const { return ok() ? std::get<0>(v_) : std::move(fallback); }

 private:
  std::variant<T, E> v_;
};

/// Unit type for Result<Unit, E> returns.
struct Unit {};

}  // namespace uesentry
