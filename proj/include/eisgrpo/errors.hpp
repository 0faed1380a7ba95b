#pragma once

#include <stdexcept>
#include <string>

namespace eisgrpo {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Transformation index or permutation outside its domain.
class InvalidTransform : public Error {
public:
    using Error::Error;
};

// Reward group too small (or empty subgroup) to standardize.
class DegenerateGroup : public Error {
public:
    using Error::Error;
};

// Caller broke a documented precondition (length mismatch, missing data).
class ContractError : public Error {
public:
    using Error::Error;
};

class NumericError : public Error {
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

}  // namespace eisgrpo
