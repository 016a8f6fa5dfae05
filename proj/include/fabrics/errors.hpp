#pragma once

#include <stdexcept>
#include <string>

namespace fabrics {

/// Base class for all errors thrown by this library.
class FabricsError : public std::runtime_error {
public:
    explicit FabricsError(const std::string& what) : std::runtime_error(what) {}
};

class DimensionMismatch : public FabricsError {
public:
    explicit DimensionMismatch(const std::string& what) : FabricsError(what) {}
};

/// Velocity too small for the energization projector denominator.
class DegenerateVelocity : public FabricsError {
public:
    explicit DegenerateVelocity(const std::string& what) : FabricsError(what) {}
};

/// Metric matrix is singular or ill-conditioned beyond the configured guard.
class SingularMetric : public FabricsError {
public:
    explicit SingularMetric(const std::string& what) : FabricsError(what) {}
};

/// Distance-map gradient undefined (coincident centers).
class GradientSingularity : public FabricsError {
public:
    explicit GradientSingularity(const std::string& what) : FabricsError(what) {}
};

/// Clearance coordinate evaluated at or below zero (interpenetration).
class NonpositiveDistance : public FabricsError {
public:
    explicit NonpositiveDistance(const std::string& what) : FabricsError(what) {}
};

class IndexOutOfRange : public FabricsError {
public:
    explicit IndexOutOfRange(const std::string& what) : FabricsError(what) {}
};

class InvalidState : public FabricsError {
public:
    explicit InvalidState(const std::string& what) : FabricsError(what) {}
};

class ConfigError : public FabricsError {
public:
    explicit ConfigError(const std::string& what) : FabricsError(what) {}
};

}  // namespace fabrics
