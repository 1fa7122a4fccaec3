#pragma once

#include <stdexcept>
#include <string>

namespace cfts {

struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& m) : std::runtime_error("shape error: " + m) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& m) : std::runtime_error("config error: " + m) {}
};

struct DomainError : std::runtime_error {
    explicit DomainError(const std::string& m) : std::runtime_error("domain error: " + m) {}
};

struct ContractError : std::runtime_error {
    explicit ContractError(const std::string& m) : std::runtime_error("contract error: " + m) {}
};

struct DegenerateInput : std::runtime_error {
    explicit DegenerateInput(const std::string& m) : std::runtime_error("degenerate input: " + m) {}
};

}  // namespace cfts
