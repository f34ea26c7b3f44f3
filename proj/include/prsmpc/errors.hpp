#pragma once

#include <stdexcept>
#include <string>

namespace prsmpc {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

// Closed-loop matrix has spectral radius >= 1 (within margin).
class NotStable : public Error {
public:
    using Error::Error;
};

class InvalidProbability : public Error {
public:
    using Error::Error;
};

class WindowExceedsHorizon : public Error {
public:
    using Error::Error;
};

class IndexOutOfRange : public Error {
public:
    using Error::Error;
};

class EmptySchedule : public Error {
public:
    using Error::Error;
};

// Pontryagin difference left no feasible point in the constraint set.
class EmptyResult : public Error {
public:
    using Error::Error;
};

class CenterMismatch : public Error {
public:
    using Error::Error;
};

// Terminal-set invariance or membership condition failed; message names it.
class AssumptionViolated : public Error {
public:
    using Error::Error;
};

class Infeasible : public Error {
public:
    using Error::Error;
};

class MaxIterations : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class UnstableDiscretization : public Error {
public:
    using Error::Error;
};

} // namespace prsmpc
