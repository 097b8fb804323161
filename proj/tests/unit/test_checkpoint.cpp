// Copyright 2026 The SEKE Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cstdint>
#include <filesystem>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "seke/checkpoint.hpp"
#include "seke/errors.hpp"
#include "seke/synthetic.hpp"

namespace seke {
namespace {

model::ModelConfig tiny_config() {
  model::ModelConfig cfg;
  cfg.toy.num_layers = 1;
  cfg.toy.num_heads = 2;
  cfg.toy.d_model = 8;
  cfg.toy.d_ff = 16;
  cfg.toy.lora_rank = 2;
  cfg.head.moe.n_experts = 4;
  cfg.head.moe.top_k = 2;
  cfg.head.moe.d_hidden = 8;
  cfg.head.moe.zero_init_router = false;
  return cfg;
}

const synthetic::Corpus& corpus() {
  static const synthetic::Corpus c = synthetic::generate(50, 3, synthetic::Rule::kMarker);
  return c;
}

model::KeyphraseModel tiny_model() {
  std::vector<std::string> texts;
  for (const auto& d : corpus().docs) texts.push_back(d.text);
  auto m = model::KeyphraseModel::create(tiny_config(), model::build_vocab(texts, 256), 17);
  m.round_to_float();
  return m;
}

std::string serialize(const model::KeyphraseModel& m, const training::TrainConfig& tc = {}) {
  std::ostringstream out(std::ios::binary);
  write_checkpoint(out, m, tc);
  return out.str();
}

Checkpoint deserialize(const std::string& bytes) {
  std::istringstream in(bytes, std::ios::binary);
  return read_checkpoint(in);
}

template <typename T>
T read_le(const std::string& s, std::size_t at) {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    v |= static_cast<T>(static_cast<unsigned char>(s[at + i])) << (8 * i);
  }
  return v;
}

template <typename T>
void write_le(std::string& s, std::size_t at, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) s[at + i] = static_cast<char>((v >> (8 * i)) & 0xff);
}

// Bitwise CRC-32 (IEEE, reflected), independent of the library's zlib call.
std::uint32_t crc32_reference(const std::string& s, std::size_t n) {
  std::uint32_t crc = 0xffffffffu;
  for (std::size_t i = 0; i < n; ++i) {
    crc ^= static_cast<unsigned char>(s[i]);
    for (int b = 0; b < 8; ++b) crc = (crc >> 1) ^ (0xedb88320u & (0u - (crc & 1u)));
  }
  return ~crc;
}

void reseal(std::string& bytes) {
  write_le<std::uint32_t>(bytes, bytes.size() - 4, crc32_reference(bytes, bytes.size() - 4));
}

TEST(Checkpoint, ByteLayout) {
  const std::string bytes = serialize(tiny_model());
  ASSERT_GT(bytes.size(), 20u);
  EXPECT_EQ(bytes.substr(0, 4), "SEKE");
  EXPECT_EQ(read_le<std::uint32_t>(bytes, 4), kCheckpointVersion);
  const auto header_len = read_le<std::uint64_t>(bytes, 8);
  const auto header = nlohmann::json::parse(bytes.substr(16, header_len));
  for (const char* key : {"model", "train", "seed", "vocab", "tensors"}) {
    EXPECT_TRUE(header.contains(key)) << key;
  }
  EXPECT_EQ(header.at("seed"), 17);
  std::size_t payload = 0;
  for (const auto& t : header.at("tensors")) {
    std::size_t n = 1;
    for (std::size_t d : t.at("shape").get<std::vector<std::size_t>>()) n *= d;
    EXPECT_EQ(t.at("offset").get<std::size_t>(), payload) << t.at("name");
    payload += 4 * n;
  }
  EXPECT_EQ(bytes.size(), 16 + header_len + payload + 4);
  EXPECT_EQ(read_le<std::uint32_t>(bytes, bytes.size() - 4),
            crc32_reference(bytes, bytes.size() - 4));
}

TEST(Checkpoint, RoundTripIsBitIdentical) {
  const auto m = tiny_model();
  training::TrainConfig tc;
  tc.seed = 99;
  tc.patience = 5;
  const Checkpoint c = deserialize(serialize(m, tc));
  EXPECT_EQ(c.train.to_json(), tc.to_json());
  EXPECT_EQ(c.model.config().to_json(), m.config().to_json());
  EXPECT_EQ(c.model.vocab(), m.vocab());
  EXPECT_EQ(c.model.seed(), m.seed());
  ASSERT_EQ(c.model.params().size(), m.params().size());
  for (const auto& [name, p] : m.params()) {
    EXPECT_EQ(c.model.params().at(name).value, p.value) << name;
    EXPECT_EQ(c.model.params().at(name).trainable, p.trainable) << name;
  }
  for (const auto& d : corpus().docs) {
    std::vector<moe::GateDecision> da, db;
    const auto a = m.label(d.text, &da);
    const auto b = c.model.label(d.text, &db);
    ASSERT_EQ(a.probs, b.probs) << d.id;
    for (std::size_t i = 0; i < da.size(); ++i) EXPECT_EQ(da[i].weights, db[i].weights);
  }
  // A second trip reproduces the same bytes.
  EXPECT_EQ(serialize(c.model, c.train), serialize(m, tc));
}

TEST(Checkpoint, SaveAndLoadFile) {
  const auto m = tiny_model();
  const auto path = std::filesystem::temp_directory_path() / "seke_test_checkpoint.bin";
  save_checkpoint(path.string(), m, {});
  const Checkpoint c = load_checkpoint(path.string());
  EXPECT_EQ(c.model.label(corpus().docs[0].text).probs, m.label(corpus().docs[0].text).probs);
  std::filesystem::remove(path);
  EXPECT_THROW(load_checkpoint(path.string()), DataError);
}

TEST(Checkpoint, RejectsBadMagic) {
  std::string bytes = serialize(tiny_model());
  bytes[0] = 'X';
  EXPECT_THROW(deserialize(bytes), DataError);
  EXPECT_THROW(deserialize(""), DataError);
  EXPECT_THROW(deserialize("SEKE"), DataError);
}

TEST(Checkpoint, RejectsUnknownVersion) {
  std::string bytes = serialize(tiny_model());
  write_le<std::uint32_t>(bytes, 4, kCheckpointVersion + 1);
  reseal(bytes);
  try {
    deserialize(bytes);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("version"), std::string::npos);
  }
}

TEST(Checkpoint, DetectsCorruption) {
  const std::string good = serialize(tiny_model());
  for (std::size_t at : {std::size_t{20}, good.size() / 2, good.size() - 5}) {
    std::string bytes = good;
    bytes[at] = static_cast<char>(bytes[at] ^ 0x10);
    try {
      deserialize(bytes);
      FAIL() << "flip at " << at;
    } catch (const DataError& e) {
      EXPECT_NE(std::string(e.what()).find("checksum"), std::string::npos);
    }
  }
  EXPECT_THROW(deserialize(good.substr(0, good.size() - 1)), DataError);
}

TEST(Checkpoint, RejectsTensorsThatDoNotFitTheConfig) {
  // Store written without the encoder, header edited to ask for one.
  auto cfg = tiny_config();
  cfg.head.use_rnn = false;
  std::vector<std::string> texts = {"a b c"};
  const auto m = model::KeyphraseModel::create(cfg, model::build_vocab(texts, 256), 1);
  const std::string bytes = serialize(m);
  const auto header_len = read_le<std::uint64_t>(bytes, 8);
  auto header = nlohmann::json::parse(bytes.substr(16, header_len));
  header["model"]["head"]["use_rnn"] = true;
  const std::string text = header.dump();
  std::string edited = bytes.substr(0, 16);
  write_le<std::uint64_t>(edited, 8, text.size());
  edited += text;
  edited += bytes.substr(16 + header_len);
  reseal(edited);
  EXPECT_THROW(deserialize(edited), DataError);
}

}  // namespace
}  // namespace seke
