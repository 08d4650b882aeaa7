#pragma once

#include <stdexcept>
#include <string>

namespace kinbridge {

// Malformed input, bad grid, unknown config key. The CLI maps it to exit code 2.
class ConfigurationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DomainError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Grid box too small for the mass it has to carry.
class TruncationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InfeasibilityError : public std::runtime_error {
public:
    InfeasibilityError(const std::string& what, double deficit)
        : std::runtime_error(what), deficit_(deficit) {}
    double deficit() const { return deficit_; }

private:
    double deficit_;
};

class CertificateFailure : public std::runtime_error {
public:
    CertificateFailure(const std::string& what, double worst_position, double worst_margin)
        : std::runtime_error(what), worst_position_(worst_position), worst_margin_(worst_margin) {}
    double worst_position() const { return worst_position_; }
    double worst_margin() const { return worst_margin_; }

private:
    double worst_position_;
    double worst_margin_;
};

// Numerical accuracy breached (mass drift, clamped SDE paths, non-finite quadrature).
class AccuracyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace kinbridge
