#pragma once

#include <stdexcept>
#include <string>

namespace btrengine {

// All library failures surface as one exception type carrying a short
// machine-readable tag ("insufficient truncation", "singular system", ...)
// plus a human-readable detail string.
class Error : public std::runtime_error {
public:
    Error(std::string tag, const std::string& detail)
        : std::runtime_error(tag + ": " + detail), tag_(std::move(tag)) {}

    const std::string& tag() const { return tag_; }

private:
    std::string tag_;
};

inline void require(bool cond, const std::string& tag, const std::string& detail) {
    if (!cond) throw Error(tag, detail);
}

}  // namespace btrengine
