#pragma once

#include <stdexcept>
#include <string>

namespace wfc {

enum class ErrorKind {
    shape,
    parameter,
    format,
    io,
    state,
    weight,
    value,
};

const char* to_string(ErrorKind kind) noexcept;

// Every failure raised by the library carries one of the kinds above so the
// C layer can translate it into a status code without string matching.
class Error : public std::runtime_error {
  public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

  private:
    ErrorKind kind_;
};

struct ShapeError : Error {
    explicit ShapeError(const std::string& w) : Error(ErrorKind::shape, w) {}
};
struct ParameterError : Error {
    explicit ParameterError(const std::string& w) : Error(ErrorKind::parameter, w) {}
};
struct FormatError : Error {
    explicit FormatError(const std::string& w) : Error(ErrorKind::format, w) {}
};
struct IoError : Error {
    explicit IoError(const std::string& w) : Error(ErrorKind::io, w) {}
};
struct StateError : Error {
    explicit StateError(const std::string& w) : Error(ErrorKind::state, w) {}
};
struct WeightError : Error {
    explicit WeightError(const std::string& w) : Error(ErrorKind::weight, w) {}
};
struct ValueError : Error {
    explicit ValueError(const std::string& w) : Error(ErrorKind::value, w) {}
};

} // namespace wfc
