#pragma once

#include <stdexcept>
#include <string>

namespace twostrain {

// Invalid structural or epidemiological inputs (bad k/r, negative rates, eps outside [0,1), ...).
class DomainError : public std::invalid_argument {
public:
    explicit DomainError(const std::string& what) : std::invalid_argument(what) {}
};

// A closed form hit a vanishing denominator; `expression` names the term that vanished.
class SingularParameterError : public std::domain_error {
public:
    SingularParameterError(const std::string& expression, const std::string& context)
        : std::domain_error("singular parameter combination: " + expression + " vanishes in " + context),
          expression_(expression) {}
    const std::string& expression() const noexcept { return expression_; }

private:
    std::string expression_;
};

// Requested map has no inverse for this model (integrated chain with r = k: eps is identically 0).
class DegenerateMapError : public std::domain_error {
public:
    explicit DegenerateMapError(const std::string& what) : std::domain_error(what) {}
};

// Step-size underflow or non-finite state; carries the last time that was successfully reached.
class IntegrationError : public std::runtime_error {
public:
    IntegrationError(const std::string& what, double last_good_time)
        : std::runtime_error(what + " (last good t = " + std::to_string(last_good_time) + ")"),
          last_good_time_(last_good_time) {}
    double last_good_time() const noexcept { return last_good_time_; }

private:
    double last_good_time_;
};

// Bad run configuration (conflicting flags, unknown preset, ...).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Filesystem failure on an output or config path.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace twostrain
