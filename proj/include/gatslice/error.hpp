#pragma once

#include <stdexcept>
#include <string>

namespace gatslice {

// Invalid or inconsistent configuration (bad config file, impossible layout).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace gatslice
