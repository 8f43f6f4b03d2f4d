#pragma once

#include <stdexcept>
#include <string>

namespace hawkes {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NotSubcritical : public Error {
public:
    explicit NotSubcritical(double rho)
        : Error("model is not subcritical: spectral radius " + std::to_string(rho) + " >= 1 - 1e-9"),
          rho(rho) {}
    double rho;
};

class InvalidConfig : public Error {
public:
    using Error::Error;
};

class InvalidDelta : public Error {
public:
    using Error::Error;
};

class InsufficientData : public Error {
public:
    using Error::Error;
};

class RankDeficientDesign : public Error {
public:
    using Error::Error;
};

class DimensionGuardExceeded : public Error {
public:
    using Error::Error;
};

class EnumerationBudgetExceeded : public Error {
public:
    using Error::Error;
};

class OutOfRange : public Error {
public:
    using Error::Error;
};

class TooFewPoints : public Error {
public:
    using Error::Error;
};

class MissingFit : public Error {
public:
    using Error::Error;
};

class AllImmigrationZero : public Error {
public:
    AllImmigrationZero() : Error("all immigration intensities are zero") {}
};

class NonFinite : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(long line, const std::string& what)
        : Error("parse error at line " + std::to_string(line) + ": " + what), line(line) {}
    long line;
};

class UnsortedEvents : public Error {
public:
    explicit UnsortedEvents(long line)
        : Error("event times decrease at line " + std::to_string(line)), line(line) {}
    long line;
};

class BadComponent : public Error {
public:
    BadComponent(long line, const std::string& what)
        : Error("bad component at line " + std::to_string(line) + ": " + what), line(line) {}
    long line;
};

class SchemaError : public Error {
public:
    SchemaError(std::string json_path, const std::string& what)
        : Error("schema error at " + json_path + ": " + what), path(std::move(json_path)) {}
    std::string path;
};

} // namespace hawkes
