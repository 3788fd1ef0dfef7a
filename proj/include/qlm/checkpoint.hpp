#pragma once

// Binary checkpoint container, version 1. All integers and floats are
// little-endian.
//
//   bytes  "QLMCKPT1"
//   u32    format version (1)
//   u32    n_meta;   n_meta  x { str key, str value }
//   u32    n_vocab;  n_vocab x { str token }        (id = position)
//   u32    n_tensor; n_tensor x {
//            str  name
//            u8   kind (0 = real f64, 1 = complex as (re, im) f64 pairs)
//            u64  rows, u64 cols
//            data, row-major
//          }
//
// where `str` is u32 byte length followed by the bytes. Model settings are
// stored as meta keys (see describe(ModelConfig)); pipeline k has meta key
// `pipeline.<k>.n` and tensors `pipeline.<k>.ee.<l>` and `pipeline.<k>.bank`.
// The embedding is stored as `embedding.amplitudes` and `embedding.phases`.
// Other tensors (optimizer state) are carried through as extras.

#include <filesystem>
#include <map>
#include <string>

#include "qlm/data.hpp"
#include "qlm/model.hpp"

namespace qlm {

struct Checkpoint {
    ModelParams params;
    Vocabulary vocab;
    std::map<std::string, std::string> meta;   // training metadata (epoch, seed, ...)
    std::map<std::string, CMatd> extras;        // named auxiliary tensors
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace qlm
