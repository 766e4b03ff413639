#pragma once

#include <cstdint>
#include <string>

#include "dts/model.hpp"

namespace dts {

// Serialized training outcome. The vocabulary itself lives in its own file;
// the checkpoint pins its hash so a model is never paired with the wrong
// token-index mapping.
struct Checkpoint {
    EncoderConfig config;
    std::uint64_t vocab_hash = 0;
    int epoch = -1;
    double validation_score = 0.0;
    ModelParameters params;
};

// Versioned binary, magic "DTCK": config, vocabulary hash, then every
// trainable block and BN buffer in visitor order, each tagged by name.
void save_checkpoint(const std::string& path, const Checkpoint& checkpoint);

// Loads and verifies layout. Pass the hash of the vocabulary being used;
// a mismatch raises ValueError. Loaded models come up in infer mode.
Checkpoint load_checkpoint(const std::string& path, std::uint64_t expected_vocab_hash);

}  // namespace dts
