#pragma once

#include <cstddef>
#include <filesystem>
#include <string>

#include "swdrso/trainer.hpp"

namespace swdrso {

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  TrainConfig config;
  Model model;
  AdamState adam;
  std::size_t epochs_done = 0;
};

// Versioned JSON document. Every floating-point value is stored as a C99
// hexadecimal float so a load reproduces it bit-for-bit; an FNV-1a checksum
// over the serialized body detects corruption and truncation.
std::string serialize_checkpoint(const Checkpoint& checkpoint);
Checkpoint deserialize_checkpoint(const std::string& text);

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace swdrso
