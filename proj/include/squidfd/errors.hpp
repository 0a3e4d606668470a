#pragma once

#include <stdexcept>
#include <string>

namespace squidfd {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class GeometryError : public Error {
public:
    using Error::Error;
};

class GeometryOffGrid : public GeometryError {
public:
    using GeometryError::GeometryError;
};

class GeometryOverlap : public GeometryError {
public:
    using GeometryError::GeometryError;
};

class MarginViolation : public GeometryError {
public:
    using GeometryError::GeometryError;
};

class FieldInConductor : public GeometryError {
public:
    using GeometryError::GeometryError;
};

class SolverError : public Error {
public:
    using Error::Error;
};

class InconsistentGrids : public SolverError {
public:
    using SolverError::SolverError;
};

class EmptySystem : public SolverError {
public:
    using SolverError::SolverError;
};

class SingularSystem : public SolverError {
public:
    using SolverError::SolverError;
};

class IntegralError : public Error {
public:
    using Error::Error;
};

class PathOffGrid : public IntegralError {
public:
    using IntegralError::IntegralError;
};

class OpenLoop : public IntegralError {
public:
    using IntegralError::IntegralError;
};

class PathsDoNotCloseLoop : public IntegralError {
public:
    using IntegralError::IntegralError;
};

class FieldNotInGap : public IntegralError {
public:
    using IntegralError::IntegralError;
};

class MissingConductor : public Error {
public:
    using Error::Error;
};

class DegenerateCharge : public Error {
public:
    using Error::Error;
};

class InvalidAxis : public ConfigError {
public:
    using ConfigError::ConfigError;
};

}  // namespace squidfd
