#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tunetree {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class ValidationRule { unknown_parameter, illegal_value, constraint_violation };

std::string_view to_string(ValidationRule rule);

/// A configuration, bundle or value broke a catalog rule. Carries the
/// offending parameter (or the constraint's parameter list) and the rule.
class ValidationError : public Error {
public:
    ValidationError(ValidationRule rule, std::string parameter, const std::string& detail);

    ValidationRule rule() const noexcept { return rule_; }
    const std::string& parameter() const noexcept { return parameter_; }

private:
    ValidationRule rule_;
    std::string parameter_;
};

/// Malformed catalog, plan, table or model document.
class DocumentError : public Error {
public:
    using Error::Error;
};

class PlanInvalid : public Error {
public:
    using Error::Error;
};

/// Backend infrastructure failure. Distinct from an application crash,
/// which is an ordinary trial outcome.
class ExecutorFailure : public Error {
public:
    using Error::Error;
};

class SpawnFailure : public ExecutorFailure {
public:
    using ExecutorFailure::ExecutorFailure;
};

class MissingEntry : public ExecutorFailure {
public:
    using ExecutorFailure::ExecutorFailure;
};

class TemplateError : public Error {
public:
    using Error::Error;
};

/// The initial configuration could not be measured, so there is nothing to
/// compare candidates against.
class BaselineFailed : public Error {
public:
    using Error::Error;
};

class SearchSpaceTooLarge : public Error {
public:
    using Error::Error;
};

class EmptyCandidates : public Error {
public:
    using Error::Error;
};

class NoValidValues : public Error {
public:
    using Error::Error;
};

class IoFailure : public Error {
public:
    using Error::Error;
};

class SchemaVersionMismatch : public Error {
public:
    using Error::Error;
};

} // namespace tunetree
