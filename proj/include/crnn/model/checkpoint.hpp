// SPDX-License-Identifier: Apache-2.0
//
// Binary checkpoint layout (all integers and floats little-endian):
//
//   "CRN1"
//   u32 header_len, header_len bytes of UTF-8 "key=value\n" lines (config)
//   parameter blocks, each: i32 rows, i32 cols, rows·cols f32 row-major
//     embedding                                   |V|×d
//     every filter, ascending width then index    k×d
//     filter biases                               1×l
//     hop projection W                            l×z
//     gru_fwd W_z W_r W_h U_z U_r U_h             m×d, m×m
//     gru_bwd (same order)
//     tensor slices V^1 … V^m, then bias          m×m, 1×m   (only with the tensor layer)
//     classifier W_c, b_c                         (z·r)×K, 1×K
//   u32 vocab_len, vocab_len bytes: non-special tokens, one per line
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "crnn/corpus/vocabulary.hpp"
#include "crnn/model/config.hpp"
#include "crnn/model/params.hpp"

namespace crnn::model {

inline constexpr char kCheckpointMagic[4] = {'C', 'R', 'N', '1'};
inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  CrnnConfig config;
  CrnnParams<float> params;
  corpus::Vocabulary vocab;
  bool lowercase = true;
  std::vector<std::string> label_names;  // empty when labels are plain integers
};

/// Config (plus tokenizer/label settings) as the header's key=value lines.
std::string encode_header(const Checkpoint& ckpt);

std::vector<std::uint8_t> serialize(const Checkpoint& ckpt);
Checkpoint deserialize(const std::vector<std::uint8_t>& bytes);

/// Throws FileError on I/O failure, FormatError on a malformed file.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace crnn::model
