// Copyright 2026 The SEKE Authors
// SPDX-License-Identifier: Apache-2.0

#include "seke/checkpoint.hpp"

#include <bit>
#include <fstream>
#include <iterator>

#include <zlib.h>

#include "seke/errors.hpp"

namespace seke {

namespace {

constexpr char kMagic[4] = {'S', 'E', 'K', 'E'};

template <typename U>
void put_le(std::string& buf, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

template <typename U>
U get_le(const std::string& buf, std::size_t pos) {
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    v |= static_cast<U>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
  }
  return v;
}

std::uint32_t crc_of(const std::string& buf, std::size_t len) {
  uLong crc = crc32(0L, Z_NULL, 0);
  const auto* p = reinterpret_cast<const Bytef*>(buf.data());
  // zlib takes uInt lengths; feed large buffers in chunks.
  while (len > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(len, 1u << 30));
    crc = crc32(crc, p, chunk);
    p += chunk;
    len -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

}  // namespace

void write_checkpoint(std::ostream& out, const model::KeyphraseModel& model,
                      const training::TrainConfig& train) {
  nlohmann::json tensors = nlohmann::json::array();
  std::string payload;
  for (const auto& [name, p] : model.params()) {
    tensors.push_back({{"name", name}, {"shape", p.value.shape()}, {"offset", payload.size()}});
    for (double v : p.value.data()) {
      put_le(payload, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    }
  }
  const nlohmann::json header = {{"model", model.config().to_json()},
                                 {"train", train.to_json()},
                                 {"seed", model.seed()},
                                 {"vocab", model.vocab().entries()},
                                 {"tensors", tensors}};
  const std::string header_text = header.dump();

  std::string buf(kMagic, sizeof(kMagic));
  put_le<std::uint32_t>(buf, kCheckpointVersion);
  put_le<std::uint64_t>(buf, header_text.size());
  buf += header_text;
  buf += payload;
  put_le<std::uint32_t>(buf, crc_of(buf, buf.size()));
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw DataError("checkpoint: write failed");
}

void save_checkpoint(const std::string& path, const model::KeyphraseModel& model,
                     const training::TrainConfig& train) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  write_checkpoint(out, model, train);
}

Checkpoint read_checkpoint(std::istream& in) {
  const std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  constexpr std::size_t kFixed = 4 + 4 + 8;
  if (buf.size() < kFixed + 4 || buf.compare(0, 4, kMagic, 4) != 0) {
    throw DataError("checkpoint: not a SEKE checkpoint");
  }
  const auto version = get_le<std::uint32_t>(buf, 4);
  if (version != kCheckpointVersion) {
    throw DataError("checkpoint: unsupported format version " + std::to_string(version));
  }
  const std::size_t body = buf.size() - 4;
  if (crc_of(buf, body) != get_le<std::uint32_t>(buf, body)) {
    throw DataError("checkpoint: checksum mismatch");
  }
  const auto header_len = get_le<std::uint64_t>(buf, 8);
  if (header_len > body - kFixed) throw DataError("checkpoint: truncated header");
  const std::size_t payload_start = kFixed + header_len;

  try {
    const nlohmann::json header = nlohmann::json::parse(buf.substr(kFixed, header_len));
    const auto cfg = model::ModelConfig::from_json(header.at("model"));
    const auto train = training::TrainConfig::from_json(header.at("train"));
    const auto entries = header.at("vocab").get<std::vector<std::string>>();
    nn::ParamStore store;
    for (const auto& t : header.at("tensors")) {
      const auto shape = t.at("shape").get<nn::Shape>();
      const auto offset = t.at("offset").get<std::size_t>();
      nn::Tensor value(shape);
      const std::size_t bytes = value.size() * 4;
      if (offset > body - payload_start || bytes > body - payload_start - offset) {
        throw DataError("checkpoint: tensor " + t.at("name").get<std::string>() +
                        " exceeds the payload");
      }
      for (std::size_t i = 0; i < value.size(); ++i) {
        value[i] = std::bit_cast<float>(get_le<std::uint32_t>(buf, payload_start + offset + 4 * i));
      }
      store.add(t.at("name").get<std::string>(), std::move(value));
    }
    auto m = model::KeyphraseModel::bind(cfg, backbone::Vocab::from_entries(entries),
                                         std::move(store), header.at("seed").get<std::uint64_t>());
    return Checkpoint{std::move(m), train};
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint: malformed header: ") + e.what());
  } catch (const ConfigError& e) {
    throw DataError(std::string("checkpoint: invalid stored config: ") + e.what());
  }
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  return read_checkpoint(in);
}

}  // namespace seke
