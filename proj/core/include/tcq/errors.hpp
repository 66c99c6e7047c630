#ifndef TCQ_ERRORS_HPP
#define TCQ_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace tcq {

/// Invalid run configuration: unsupported dimensions, bad modes,
/// missing model parameters.
class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

/// Least-squares fit cannot proceed (underdetermined or collinear design).
class fit_error : public std::runtime_error {
public:
    explicit fit_error(const std::string& what) : std::runtime_error(what) {}
};

/// An exhaustive enumeration would exceed its combination guard.
class size_error : public std::runtime_error {
public:
    explicit size_error(const std::string& what) : std::runtime_error(what) {}
};

/// File could not be read or written; message names the path.
class io_error : public std::runtime_error {
public:
    explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace tcq

#endif
