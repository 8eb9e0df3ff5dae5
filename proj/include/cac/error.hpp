#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace cac {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Caller violated a precondition (non-binary mask, negative radius, ...).
class InvalidInput : public Error {
  public:
    using Error::Error;
};

/// Malformed or unsupported file content. `key()` names the offending
/// header key or JSON field.
class ParseError : public Error {
  public:
    enum class Kind { MissingKey, UnsupportedValue, InvalidValue, DataLength, Io };

    ParseError(Kind kind, std::string key, const std::string& what)
        : Error(what), kind_(kind), key_(std::move(key)) {}

    Kind kind() const noexcept { return kind_; }
    const std::string& key() const noexcept { return key_; }

  private:
    Kind kind_;
    std::string key_;
};

class GridMismatchError : public Error {
  public:
    GridMismatchError(std::string field, const std::string& what)
        : Error(what), field_(std::move(field)) {}

    /// One of "dims", "spacing", "origin".
    const std::string& field() const noexcept { return field_; }

  private:
    std::string field_;
};

/// Raised by the separation-plane fit when the equidistance support is too
/// small; the caller is expected to fall back to an ostium-anchored plane.
class DegenerateFitError : public Error {
  public:
    using Error::Error;
};

/// A pipeline stage failed; `stage()` carries its name.
class StageError : public Error {
  public:
    StageError(std::string stage, const std::string& what)
        : Error(stage + ": " + what), stage_(std::move(stage)) {}

    const std::string& stage() const noexcept { return stage_; }

  private:
    std::string stage_;
};

}  // namespace cac
