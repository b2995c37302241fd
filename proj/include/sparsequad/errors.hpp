#pragma once

#include <stdexcept>
#include <string>

namespace sparsequad {

// Bad input: wrong dimensions, out-of-range configuration, malformed files.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// The inputs were fine but the numerics were not (non-finite values, SVD
// failure, infeasible LP).
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace sparsequad
