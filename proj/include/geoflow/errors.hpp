#pragma once

#include <stdexcept>
#include <string>

namespace geoflow {

struct GeoflowError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParameterError : GeoflowError {
    using GeoflowError::GeoflowError;
};

// Malformed input data (ledger lines, ascii grids, plan/workflow documents).
struct ParseError : GeoflowError {
    explicit ParseError(const std::string& msg, int line = -1)
        : GeoflowError(line >= 0 ? msg + " (line " + std::to_string(line) + ")" : msg),
          line_number(line) {}
    int line_number;
};

struct TemplateError : GeoflowError {
    explicit TemplateError(const std::string& name)
        : GeoflowError("unbound placeholder: " + name), placeholder(name) {}
    std::string placeholder;
};

struct BudgetExhausted : GeoflowError {
    using GeoflowError::GeoflowError;
};

struct FixtureExhausted : GeoflowError {
    using GeoflowError::GeoflowError;
};

struct BackendUnavailable : GeoflowError {
    using GeoflowError::GeoflowError;
};

struct BackendRejected : GeoflowError {
    BackendRejected(int status_code, const std::string& excerpt)
        : GeoflowError("backend rejected request (status " + std::to_string(status_code) +
                       "): " + excerpt),
          status(status_code), body_excerpt(excerpt) {}
    int status;
    std::string body_excerpt;
};

struct DuplicateEntry : GeoflowError {
    using GeoflowError::GeoflowError;
};

struct SearchUnavailable : GeoflowError {
    using GeoflowError::GeoflowError;
};

struct SandboxMisconfigured : GeoflowError {
    using GeoflowError::GeoflowError;
};

struct CorruptLedger : GeoflowError {
    using GeoflowError::GeoflowError;
};

struct WorkspaceError : GeoflowError {
    using GeoflowError::GeoflowError;
};

struct CaseInvalid : GeoflowError {
    using GeoflowError::GeoflowError;
};

}  // namespace geoflow
