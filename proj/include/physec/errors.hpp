#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace physec {

// Base class for all errors raised by the toolkit. Argument/contract
// violations use std::invalid_argument directly.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(what) {}
};

class InsufficientDataError : public Error {
public:
    explicit InsufficientDataError(const std::string& what) : Error(what) {}
};

// Quantizer guard band swallowed every sample.
class EmptyKeyError : public Error {
public:
    explicit EmptyKeyError(const std::string& what) : Error(what) {}
};

// ED's syndrome-corrected key does not match the AP's (verifier mismatch).
// failing_blocks is diagnostic only; the protocol decision rests on the
// 32-bit verifier alone.
class ReconciliationFailedError : public Error {
public:
    ReconciliationFailedError(const std::string& what, std::vector<int> blocks)
        : Error(what), failing_blocks(std::move(blocks)) {}
    std::vector<int> failing_blocks;
};

// Residual entropy after syndrome leakage is below the requested key size.
class EntropyError : public Error {
public:
    explicit EntropyError(const std::string& what) : Error(what) {}
};

class CounterReuseError : public Error {
public:
    explicit CounterReuseError(const std::string& what) : Error(what) {}
};

class CounterExhaustedError : public Error {
public:
    explicit CounterExhaustedError(const std::string& what) : Error(what) {}
};

class TagMismatchError : public Error {
public:
    explicit TagMismatchError(const std::string& what) : Error(what) {}
};

class ReplayError : public Error {
public:
    explicit ReplayError(const std::string& what) : Error(what) {}
};

class MalformedFrameError : public Error {
public:
    explicit MalformedFrameError(const std::string& what) : Error(what) {}
};

// Training/test estimate pair spaced further apart than the channel
// coherence interval.
class CoherenceError : public Error {
public:
    explicit CoherenceError(const std::string& what) : Error(what) {}
};

} // namespace physec
