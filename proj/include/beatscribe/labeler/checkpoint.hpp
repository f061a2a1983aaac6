#pragma once

// Checkpoint container.
//
//   "BSCK"            4 bytes
//   version           u32 little-endian (1)
//   header_bytes      u64 little-endian
//   header            UTF-8 JSON: config, tau, steps, tensors [{name, rows, cols}], metadata
//   parameters        f32 little-endian, tensors in header order, row-major

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "beatscribe/features.hpp"
#include "beatscribe/labeler/model.hpp"

namespace beatscribe {

struct Checkpoint {
  LabelerParams<float> params;
  double tau = 0.5;
  std::int64_t steps = 0;
  nlohmann::json metadata = nlohmann::json::object();

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

inline nlohmann::json to_json(const LabelerConfig& c) {
  return {{"layers", c.layers},
          {"model_dim", c.model_dim},
          {"heads", c.heads},
          {"ff_dim", c.ff_dim},
          {"input_dim", c.input_dim},
          {"max_ticks", c.max_ticks},
          {"seed", c.seed},
          {"vocab", std::string(to_string(c.vocab))},
          {"positional_encoding", c.positional_encoding}};
}

/// Reads the fields present in `j` over `base`.
inline LabelerConfig labeler_config_from_json(const nlohmann::json& j, LabelerConfig base = {}) {
  if (!j.is_object()) throw FormatError("labeler config must be an object");
  for (const auto& [k, v] : j.items()) {
    if (k == "layers") base.layers = v.get<int>();
    else if (k == "model_dim") base.model_dim = v.get<int>();
    else if (k == "heads") base.heads = v.get<int>();
    else if (k == "ff_dim") base.ff_dim = v.get<int>();
    else if (k == "input_dim") base.input_dim = v.get<int>();
    else if (k == "max_ticks") base.max_ticks = v.get<int>();
    else if (k == "seed") base.seed = v.get<std::uint64_t>();
    else if (k == "positional_encoding") base.positional_encoding = v.get<bool>();
    else if (k == "vocab") {
      const auto s = v.get<std::string>();
      if (s == "melody") base.vocab = Vocabulary::kMelody;
      else if (s == "chord") base.vocab = Vocabulary::kChord;
      else throw FormatError("unknown vocab '" + s + "'");
    } else {
      throw FormatError("unknown labeler config field '" + k + "'");
    }
  }
  base.validate();
  return base;
}

inline std::vector<unsigned char> encode_checkpoint(const Checkpoint& ck) {
  const ParamLayout lay(ck.params.config);
  if (ck.params.values.size() != lay.total()) throw ShapeError("parameter count does not match config");
  nlohmann::json header;
  header["config"] = to_json(ck.params.config);
  header["tau"] = ck.tau;
  header["steps"] = ck.steps;
  header["tensors"] = nlohmann::json::array();
  for (const auto& t : lay.tensors()) header["tensors"].push_back({{"name", t.name}, {"rows", t.rows}, {"cols", t.cols}});
  header["metadata"] = ck.metadata;
  const std::string text = header.dump();

  std::vector<unsigned char> out{'B', 'S', 'C', 'K'};
  detail::put_le<std::uint32_t>(out, 1);
  detail::put_le<std::uint64_t>(out, text.size());
  out.insert(out.end(), text.begin(), text.end());
  for (float v : ck.params.values) detail::put_le<float>(out, v);
  return out;
}

inline Checkpoint decode_checkpoint(std::span<const unsigned char> bytes) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), "BSCK", 4) != 0) throw FormatError("bad checkpoint magic");
  if (detail::get_le<std::uint32_t>(bytes.data() + 4) != 1) throw FormatError("unsupported checkpoint version");
  const auto hlen = detail::get_le<std::uint64_t>(bytes.data() + 8);
  if (hlen > bytes.size() - 16) throw FormatError("truncated checkpoint header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin() + 16, bytes.begin() + 16 + static_cast<std::ptrdiff_t>(hlen));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint header: ") + e.what());
  }
  Checkpoint ck;
  try {
    ck.params.config = labeler_config_from_json(header.at("config"));
    ck.tau = header.at("tau").get<double>();
    ck.steps = header.at("steps").get<std::int64_t>();
    if (header.contains("metadata")) ck.metadata = header["metadata"];
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint header: ") + e.what());
  }
  const ParamLayout lay(ck.params.config);
  const auto& tensors = header.at("tensors");
  if (!tensors.is_array() || tensors.size() != lay.tensors().size()) throw FormatError("tensor list does not match config");
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    const auto& t = lay.tensors()[i];
    if (tensors[i].at("name") != t.name || tensors[i].at("rows") != t.rows || tensors[i].at("cols") != t.cols) {
      throw FormatError("tensor " + std::to_string(i) + " does not match config");
    }
  }
  const std::size_t body = 16 + hlen;
  if (bytes.size() - body != lay.total() * 4) throw FormatError("checkpoint parameter payload has the wrong size");
  ck.params.values.resize(lay.total());
  for (std::size_t i = 0; i < lay.total(); ++i) ck.params.values[i] = detail::get_le<float>(bytes.data() + body + 4 * i);
  return ck;
}

inline void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  detail::write_file(path, encode_checkpoint(ck));
}

inline Checkpoint load_checkpoint(const std::string& path) { return decode_checkpoint(detail::read_file(path)); }

}  // namespace beatscribe
