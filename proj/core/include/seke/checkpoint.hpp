// Copyright 2026 The SEKE Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

#include "seke/model.hpp"
#include "seke/training.hpp"

namespace seke {

/// Binary layout, all integers little-endian:
///   "SEKE" | u32 version | u64 header length | UTF-8 JSON header
///   | float32 tensor payloads | u32 CRC32 of everything before it
/// The header echoes the model and training configs, the seed, the vocabulary
/// and a tensor directory of {name, shape, offset}, offsets in bytes from the
/// start of the payload.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  model::KeyphraseModel model;
  training::TrainConfig train;
};

void write_checkpoint(std::ostream& out, const model::KeyphraseModel& model,
                      const training::TrainConfig& train);
void save_checkpoint(const std::string& path, const model::KeyphraseModel& model,
                     const training::TrainConfig& train);

/// Throws DataError on a bad magic, unknown version, checksum mismatch,
/// truncated payload, or tensors that do not fit the stored config.
Checkpoint read_checkpoint(std::istream& in);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace seke
