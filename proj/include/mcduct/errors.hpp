#pragma once

#include <stdexcept>
#include <string>

namespace mcduct {

/// Coarse error categories, mirrored one-to-one by the C API status codes.
enum class errc {
    invalid_argument = 1,  // bad parameter, config, or validation failure
    io = 2,                // file missing, unreadable, or malformed
    numeric = 3,           // solver blow-up, non-finite values, diverged training
    state = 4,             // stage chaining violation (hash mismatch, missing stage)
};

class error : public std::runtime_error {
public:
    error(errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
    errc code() const noexcept { return code_; }

private:
    errc code_;
};

[[noreturn]] inline void raise_invalid(const std::string& msg) {
    throw error(errc::invalid_argument, msg);
}
[[noreturn]] inline void raise_io(const std::string& msg) { throw error(errc::io, msg); }
[[noreturn]] inline void raise_numeric(const std::string& msg) { throw error(errc::numeric, msg); }
[[noreturn]] inline void raise_state(const std::string& msg) { throw error(errc::state, msg); }

}  // namespace mcduct
