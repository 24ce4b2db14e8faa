#pragma once

#include <stdexcept>
#include <string>

namespace congrec {

// Base class for everything this library throws.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// A file could not be opened or created.
struct IoError : Error {
    explicit IoError(const std::string& msg) : Error(msg) {}
};

// A row of an input file could not be parsed at all.
struct ParseError : Error {
    ParseError(const std::string& file, std::size_t line, const std::string& msg)
        : Error(file + ":" + std::to_string(line) + ": " + msg),
          file_name(file), line_number(line) {}
    std::string file_name;
    std::size_t line_number;
};

// A row parsed but violates a domain rule (range, self-loop, duplicate, ...).
struct ValidationError : Error {
    explicit ValidationError(const std::string& msg) : Error(msg) {}
};

// An operation was configured inconsistently (bad ranges, missing inputs).
struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// A dataset-level failure: empty after filtering, empty split, ...
struct DataError : Error {
    explicit DataError(const std::string& msg) : Error(msg) {}
};

// Training produced a non-finite factor entry.
struct DivergenceError : Error {
    DivergenceError(int iter, const std::string& msg)
        : Error(msg), iteration(iter) {}
    int iteration;
};

// A t-test was asked to compare samples with no usable variation.
struct DegenerateSampleError : Error {
    explicit DegenerateSampleError(const std::string& msg) : Error(msg) {}
};

}  // namespace congrec
