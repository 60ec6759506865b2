#pragma once

#include <stdexcept>
#include <string>

namespace diar {

// Malformed input data (RTTM, EMB1, TRK1, PLDA1, TSV). The CLI maps this
// to exit code 2.
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
    ParseError(int line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what) {}
};

// Bad configuration or missing mandatory input. The CLI maps this to exit
// code 3, together with std::invalid_argument from precondition checks.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace diar
