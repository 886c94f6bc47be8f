#pragma once

#include <stdexcept>
#include <string>

namespace dem {

/// Base class for every domain error raised by the library. The CLI maps
/// these onto exit code 2 and reports `kind()` in its error JSON.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

class PointOutsideDomain : public Error {
public:
    explicit PointOutsideDomain(const std::string& what) : Error("PointOutsideDomain", what) {}
};

class TrajectoryNotCovering : public Error {
public:
    explicit TrajectoryNotCovering(const std::string& what) : Error("TrajectoryNotCovering", what) {}
};

class OutOfRange : public Error {
public:
    explicit OutOfRange(const std::string& what) : Error("OutOfRange", what) {}
};

class ShapeMismatch : public Error {
public:
    explicit ShapeMismatch(const std::string& what) : Error("ShapeMismatch", what) {}
};

class ExhaustedEdges : public Error {
public:
    explicit ExhaustedEdges(const std::string& what) : Error("ExhaustedEdges", what) {}
};

class NotCooperative : public Error {
public:
    explicit NotCooperative(const std::string& what) : Error("NotCooperative", what) {}
};

class InvalidParams : public Error {
public:
    InvalidParams(const std::string& what, double min_lambda)
        : Error("InvalidParams", what), min_lambda_(min_lambda) {}
    /// Smallest deviation parameter that would have passed validation
    /// (+infinity when no value can).
    double min_lambda() const noexcept { return min_lambda_; }

private:
    double min_lambda_;
};

class SigmaInadmissible : public Error {
public:
    SigmaInadmissible(const std::string& what, double admissible)
        : Error("SigmaInadmissible", what), admissible_(admissible) {}
    double admissible() const noexcept { return admissible_; }

private:
    double admissible_;
};

}  // namespace dem
