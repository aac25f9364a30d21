#pragma once

#include <stdexcept>
#include <string>

namespace eden {

// Every failure the library raises carries a short machine-readable category
// ("shape", "config", "io", "checkpoint", "ordering", "data", "range").
class Error : public std::runtime_error {
public:
    Error(std::string category, const std::string& message)
        : std::runtime_error(message), category_(std::move(category)) {}

    const std::string& category() const noexcept { return category_; }

private:
    std::string category_;
};

[[noreturn]] inline void fail(const std::string& category, const std::string& message) {
    throw Error(category, message);
}

inline void require(bool ok, const char* category, const std::string& message) {
    if (!ok) throw Error(category, message);
}

}  // namespace eden
