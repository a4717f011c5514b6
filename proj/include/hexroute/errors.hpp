#pragma once
#include <stdexcept>
#include <string>

namespace hexroute {

// Error taxonomy mirrors the CLI exit-code contract:
// validation -> 3, infeasible -> 2, io -> 4, adapter -> 5.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& what) : Error(what) {}
};

class InfeasibleError : public Error {
public:
    explicit InfeasibleError(const std::string& what) : Error(what) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(what) {}
};

class AdapterError : public Error {
public:
    explicit AdapterError(const std::string& what) : Error(what) {}
};

}  // namespace hexroute
