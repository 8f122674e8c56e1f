#pragma once

#include <stdexcept>
#include <string>

namespace difpath {

enum class errc {
    parameter,          // out-of-range argument
    contract,           // shape / interface contract violated
    size,               // spatial size unsupported
    symmetry,           // matrix not symmetric within tolerance
    not_psd,            // eigenvalue below the PSD clamp threshold
    insufficient_data,  // too few samples for the requested statistic
    degenerate_data,    // dataset unusable (e.g. single class)
    divergence,         // NaN/Inf surfaced during training
    format,             // malformed file content
    io,                 // missing file / failed read or write
    config,             // malformed or unknown configuration
};

const char* errc_name(errc c) noexcept;

class Error : public std::runtime_error {
public:
    Error(errc code, const std::string& msg)
        : std::runtime_error(std::string(errc_name(code)) + ": " + msg), code_(code) {}

    errc code() const noexcept { return code_; }

private:
    errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& msg) {
    throw Error(code, msg);
}

inline void require(bool cond, errc code, const std::string& msg) {
    if (!cond) {
        fail(code, msg);
    }
}

}  // namespace difpath
