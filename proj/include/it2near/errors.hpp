#pragma once

#include <stdexcept>
#include <string>

namespace it2near {

/// Base class for every domain error raised by the engine.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidParameter : public Error {
public:
    using Error::Error;
};

class ImageTooSmall : public Error {
public:
    using Error::Error;
};

class UnknownProbe : public Error {
public:
    explicit UnknownProbe(const std::string& id) : Error("unknown probe function '" + id + "'") {}
};

class DimensionMismatch : public Error {
public:
    DimensionMismatch(std::size_t a, std::size_t b)
        : Error("description length mismatch: " + std::to_string(a) + " vs " + std::to_string(b)) {}
};

class FitNotFound : public Error {
public:
    FitNotFound(const std::string& what, double best_error) : Error(what), best_error_(best_error) {}
    double best_error() const noexcept { return best_error_; }

private:
    double best_error_;
};

class FingerprintMismatch : public Error {
public:
    FingerprintMismatch(const std::string& expected, const std::string& actual)
        : Error("FingerprintMismatch: index was built with configuration " + expected +
                " but the query was described with " + actual) {}
};

class EmptyRetrieval : public Error {
public:
    EmptyRetrieval() : Error("precision is undefined for an empty retrieved set") {}
};

class NoRelevantImages : public Error {
public:
    NoRelevantImages() : Error("recall is undefined when there are no relevant images") {}
};

class DatasetError : public Error {
public:
    using Error::Error;
};

class IndexFormatError : public Error {
public:
    using Error::Error;
};

}  // namespace it2near
