#pragma once

#include <stdexcept>
#include <string>

#include "dac/model.hpp"
#include "dac/trainer.hpp"

namespace dac {

/// Everything a run needs: adaptation hyperparameters (with the augmentation
/// policy), model sizes, source-training settings, and analysis knobs.
/// Unknown keys are rejected; missing keys take the documented defaults.
struct RunConfig {
    AdaptConfig adapt;
    SourceTrainConfig source;
    int n_aug = 50;
    int n_pairs = 1000;
    bool dump_features = false;
};

struct ConfigError : std::runtime_error {
    int line;
    ConfigError(int line_, const std::string& msg)
        : std::runtime_error("config line " + std::to_string(line_) + ": " + msg), line(line_) {}
};

RunConfig parse_config_text(const std::string& text);
RunConfig parse_config_file(const std::string& path);

/// Every key, resolved. Reparsing the output reproduces the config exactly.
std::string serialize_config(const RunConfig& cfg);

std::string to_string(Scheme s);
std::string to_string(MmdKind m);
Scheme scheme_from_string(const std::string& s);
MmdKind mmd_from_string(const std::string& s);

}  // namespace dac
