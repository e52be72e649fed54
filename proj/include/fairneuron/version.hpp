#pragma once

#include <cstdlib>
#include <string>

namespace fairneuron {

inline constexpr const char* kVersion = "1.0.0";

/// Default directory for reports and other artifacts: $FAIRNEURON_OUT when
/// set, the working directory otherwise.
inline std::string default_output_dir() {
    const char* env = std::getenv("FAIRNEURON_OUT");
    return env != nullptr && *env != '\0' ? std::string(env) : std::string(".");
}

}  // namespace fairneuron
