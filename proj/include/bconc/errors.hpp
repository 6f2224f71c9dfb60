#ifndef BCONC_ERRORS_HPP
#define BCONC_ERRORS_HPP

#include <stdexcept>
#include <string>
#include <utility>

namespace bconc {

/// Bad run configuration (unknown tag, out-of-range value). `key` names the
/// offending configuration entry.
class ConfigError : public std::invalid_argument {
public:
    ConfigError(std::string key, const std::string& what)
        : std::invalid_argument(key + ": " + what), key_(std::move(key)) {}
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

/// A system matrix that should be symmetric positive definite is not; the
/// shift lambda is below the coercivity threshold.
class IndefiniteSystem : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace bconc

#endif
