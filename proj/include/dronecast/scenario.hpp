// SPDX-License-Identifier: Apache-2.0
//
// Scenario config files: a line-oriented key/value format with nested
// sections (see the repository README for the schema). The loader reports
// the offending line and field on every error.

#pragma once

#include <stdexcept>
#include <string>

#include "dronecast/simcore.hpp"

namespace dronecast {

class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& file, int line, const std::string& message)
        : std::runtime_error(file + ":" + std::to_string(line) + ": " + message), line_(line) {}

    int line() const { return line_; }

private:
    int line_;
};

Scenario load_scenario_file(const std::string& path);

// Parses scenario text; `name` is used in diagnostics only.
Scenario parse_scenario(const std::string& text, const std::string& name);

}  // namespace dronecast
