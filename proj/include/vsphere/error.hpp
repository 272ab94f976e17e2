#pragma once

#include <stdexcept>
#include <string>

namespace vsphere {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Geometry that cannot be rasterized (zero-length edges, antipodal vertices,
/// grazing rays, runaway subdivision).
class DegenerateGeometry : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed file contents (PFM header, sidecar mismatch, OBJ records).
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Structured-text parse failure; `where` names the offending key or line.
class ParseError : public std::runtime_error {
public:
    ParseError(std::string where, const std::string& what)
        : std::runtime_error(where.empty() ? what : where + ": " + what), where_(std::move(where)) {}

    const std::string& where() const noexcept { return where_; }

private:
    std::string where_;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace vsphere
