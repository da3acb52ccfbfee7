#pragma once

#include <stdexcept>
#include <string>

namespace cohortrisk {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidParameter : public Error {
public:
    using Error::Error;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

// Statistic under the exclusion hypothesis is undefined (empty cohort).
class DegenerateCohort : public Error {
public:
    using Error::Error;
};

class EmptySketch : public Error {
public:
    using Error::Error;
};

class UndefinedCorrelation : public Error {
public:
    using Error::Error;
};

// No cohort meets k_min; callers should fall back to the all-population cohort.
class GlobalFallback : public Error {
public:
    using Error::Error;
};

class NumericalDegeneracy : public Error {
public:
    using Error::Error;
};

class NonDisjoint : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    ConfigError(const std::string& field, const std::string& what)
        : Error(field.empty() ? what : field + ": " + what), field_(field) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

}  // namespace cohortrisk
