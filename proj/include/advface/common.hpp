#ifndef ADVFACE_COMMON_HPP
#define ADVFACE_COMMON_HPP

#include <cstdint>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace advface {

inline constexpr const char* kVersion = "0.1.0";

// Fatal contract violations surface as advface::Error; the CLI turns them
// into a non-zero exit with the message.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {
inline void fail_sstream(std::ostringstream&) {}
template <typename T, typename... Rest>
void fail_sstream(std::ostringstream& os, const T& v, const Rest&... rest) {
    os << v;
    fail_sstream(os, rest...);
}
}  // namespace detail

template <typename... Args>
[[noreturn]] void fail(const Args&... args) {
    std::ostringstream os;
    detail::fail_sstream(os, args...);
    throw Error(os.str());
}

template <typename... Args>
void require(bool cond, const Args&... args) {
    if (!cond) fail(args...);
}

// Warnings go to stderr; callers that must report counts keep their own.
template <typename... Args>
void warn(const Args&... args) {
    std::ostringstream os;
    detail::fail_sstream(os, args...);
    std::cerr << "[advface] warning: " << os.str() << "\n";
}

}  // namespace advface

#endif
