#pragma once

#include <stdexcept>
#include <string>

namespace lpdcm {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Precondition on an integer or real argument violated (k out of range, odd n_lat, ...).
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// A value lies outside the domain where the quantity is defined (u <= 0, lambda outside a cone).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Malformed or inconsistent run configuration / descriptor.
class ConfigError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// The curvature matrix left the Garding cone at some node, so the linearization is not elliptic.
class EllipticityError : public Error {
public:
    EllipticityError(const std::string& what, int node) : Error(what), node_(node) {}
    int node() const noexcept { return node_; }

private:
    int node_;
};

/// Surface reconstruction requires a positive definite curvature matrix everywhere.
class NotConvexError : public Error {
public:
    NotConvexError(const std::string& what, int node) : Error(what), node_(node) {}
    int node() const noexcept { return node_; }

private:
    int node_;
};

/// Verification inconsistency (e.g. an extrapolated constant outside its proven bracket).
class ConsistencyError : public Error {
public:
    using Error::Error;
};

} // namespace lpdcm
