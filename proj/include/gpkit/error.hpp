#pragma once

#include <stdexcept>
#include <string>

namespace gpkit {

/// Base class for every error raised by the library. `kind()` is a stable,
/// machine-readable tag used by the CLI when reporting failures.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}

    [[nodiscard]] const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define GPKIT_DEFINE_ERROR(Name)                                             \
    class Name : public Error {                                              \
    public:                                                                  \
        explicit Name(const std::string& what) : Error(#Name, what) {}       \
    }

GPKIT_DEFINE_ERROR(NotPSD);
GPKIT_DEFINE_ERROR(DimensionMismatch);
GPKIT_DEFINE_ERROR(IndexOutOfRange);
GPKIT_DEFINE_ERROR(InvalidArgument);
GPKIT_DEFINE_ERROR(InternalConsistency);
GPKIT_DEFINE_ERROR(UnsupportedKernel);
GPKIT_DEFINE_ERROR(DegenerateDistance);
GPKIT_DEFINE_ERROR(InvalidDelta);
GPKIT_DEFINE_ERROR(OptimFailed);
GPKIT_DEFINE_ERROR(TrajectoryTooShort);
GPKIT_DEFINE_ERROR(MissingColumn);
GPKIT_DEFINE_ERROR(SchemaVersionMismatch);
GPKIT_DEFINE_ERROR(IntegrityError);
GPKIT_DEFINE_ERROR(IoError);

#undef GPKIT_DEFINE_ERROR

/// CSV parse failure; carries the 1-based file line and the column name.
class ParseError : public Error {
public:
    ParseError(std::size_t row, std::string column, const std::string& what)
        : Error("ParseError", "row " + std::to_string(row) + ", column " + column + ": " + what),
          row_(row),
          column_(std::move(column)) {}

    [[nodiscard]] std::size_t row() const noexcept { return row_; }
    [[nodiscard]] const std::string& column() const noexcept { return column_; }

private:
    std::size_t row_;
    std::string column_;
};

namespace detail {

inline void require_dims(bool ok, const std::string& what) {
    if (!ok) { throw DimensionMismatch(what); }
}

}  // namespace detail

}  // namespace gpkit
