#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace replykit {

// Versioned binary container shared by every trained artifact.
//
//   magic "RFSM" | u32 version | kind string | u64 vocab fingerprint |
//   meta JSON string | u32 tensor count | tensors
//
// Strings are u32 length + bytes; tensors are name, u32 ndim, u64 dims,
// then row-major float32 data. All integers and floats little-endian.
struct TensorBlob {
  std::string name;
  std::vector<std::uint64_t> shape;
  std::vector<float> data;

  std::uint64_t element_count() const {
    std::uint64_t n = 1;
    for (std::uint64_t d : shape) n *= d;
    return n;
  }
};

struct ModelFile {
  std::uint32_t version = 1;
  std::string kind;
  std::uint64_t vocab_fingerprint = 0;
  std::string meta_json;
  std::vector<TensorBlob> tensors;

  const TensorBlob& tensor(const std::string& name) const;
  bool has_tensor(const std::string& name) const;
};

void write_model_file(const std::string& path, const ModelFile& model);
ModelFile read_model_file(const std::string& path);

// Loud failure on fingerprint mismatch or unexpected kind.
void check_model_header(const ModelFile& model, const std::string& expected_kind,
                        std::uint64_t vocab_fingerprint);

}  // namespace replykit
