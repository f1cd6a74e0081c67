#ifndef CFSURV_ERRORS_HPP
#define CFSURV_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace cfsurv {

/// Malformed input: missing columns, unparsable values, invariant
/// violations in user-supplied data. CLI maps these to exit code 2.
class SchemaError : public std::runtime_error {
public:
    explicit SchemaError(const std::string& what) : std::runtime_error(what) {}
};

/// Data that is structurally fine but degenerate for the requested
/// computation (empty selections, impossible fold sizes, k out of
/// range). CLI maps these to exit code 3.
class DegenerateError : public std::runtime_error {
public:
    explicit DegenerateError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace cfsurv

#endif
