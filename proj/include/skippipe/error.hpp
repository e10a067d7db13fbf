#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace skippipe {

/// Bad input: malformed matrices, inconsistent sizes, out-of-range ids.
/// Matrix errors carry the offending row/column.
class ValidationError : public std::invalid_argument {
public:
    explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
    ValidationError(const std::string& what, int row, int col)
        : std::invalid_argument(what + " at [" + std::to_string(row) + ", " + std::to_string(col) + "]"),
          row_(row), col_(col) {}

    std::optional<int> row() const { return row_; }
    std::optional<int> col() const { return col_; }

private:
    std::optional<int> row_;
    std::optional<int> col_;
};

/// No schedule satisfies the constraints (single-agent search or the CBS tree ran dry).
class InfeasibleError : public std::runtime_error {
public:
    explicit InfeasibleError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace skippipe
