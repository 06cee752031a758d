#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mvclust/data.hpp"
#include "mvclust/trainer.hpp"

namespace mvclust {

// Everything a CLI invocation can be configured with. The text form is one
// key=value pair per line; '#' starts a comment; blank lines are ignored.
// Lists (encoder_hidden, label_hidden, view_dims) are comma-separated.
// Unknown keys and unparsable values throw PreconditionError.
struct RunConfig {
    SyntheticConfig synthetic;
    TrainConfig train;
};

// Applies one "key=value" assignment.
void apply_setting(RunConfig& cfg, const std::string& assignment);

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

// Every key, in a fixed order; parse_config(to_text(c)) reproduces c exactly.
std::string to_text(const RunConfig& cfg);

// All accepted keys.
std::vector<std::string> config_keys();

bool operator==(const RunConfig& a, const RunConfig& b);

}  // namespace mvclust
