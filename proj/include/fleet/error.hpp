#pragma once

#include <stdexcept>
#include <string>

namespace fleet {

// Error categories. The kebab-case names double as the machine-readable
// error codes emitted by the CLI.
enum class errc {
    coordinate_domain,
    insufficient_vessels,
    empty_sample,
    degenerate_sample,
    corrupt_input,
    config_invalid,
    input_not_found,
    empty_panel,
    window_too_short,
    io_error,
};

inline const char* code_name(errc c) {
    switch (c) {
        case errc::coordinate_domain:    return "coordinate-domain";
        case errc::insufficient_vessels: return "insufficient-vessels";
        case errc::empty_sample:         return "empty-sample";
        case errc::degenerate_sample:    return "degenerate-sample";
        case errc::corrupt_input:        return "corrupt-input";
        case errc::config_invalid:       return "config-invalid";
        case errc::input_not_found:      return "input-not-found";
        case errc::empty_panel:          return "empty-panel";
        case errc::window_too_short:     return "window-too-short";
        case errc::io_error:             return "io-error";
    }
    return "unknown";
}

class error : public std::runtime_error {
public:
    error(errc code, const std::string& what) : std::runtime_error(what), code_(code) {}

    errc code() const noexcept { return code_; }
    const char* code_name() const noexcept { return fleet::code_name(code_); }

private:
    errc code_;
};

[[noreturn]] inline void raise(errc code, const std::string& what) { throw error(code, what); }

}  // namespace fleet
