#include "replykit/model_io.hpp"

#include <cstring>
#include <fstream>

#include "replykit/errors.hpp"

namespace replykit {

namespace {

constexpr char kMagic[4] = {'R', 'F', 'S', 'M'};
constexpr std::uint32_t kCurrentVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_f32(std::string& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}
void put_string(std::string& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out += s;
}

class Reader {
 public:
  Reader(const std::string& data, const std::string& path)
      : data_(data), path_(path) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(
               static_cast<std::uint8_t>(data_[pos_ + i]))
           << (8 * i);
    }
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::uint64_t>(
               static_cast<std::uint8_t>(data_[pos_ + i]))
           << (8 * i);
    }
    pos_ += 8;
    return v;
  }
  float f32() {
    std::uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
  std::string str() {
    std::uint32_t n = u32();
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  void expect_magic() {
    need(4);
    if (std::memcmp(data_.data(), kMagic, 4) != 0) {
      throw Error(Error::Code::kBadModelFile,
                  path_ + ": not a model file (bad magic)");
    }
    pos_ += 4;
  }
  bool at_end() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) {
    if (pos_ + n > data_.size()) {
      throw Error(Error::Code::kBadModelFile, path_ + ": truncated model file");
    }
  }
  const std::string& data_;
  std::string path_;
  std::size_t pos_ = 0;
};

}  // namespace

const TensorBlob& ModelFile::tensor(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return t;
  }
  throw Error(Error::Code::kBadModelFile, "model has no tensor: " + name);
}

bool ModelFile::has_tensor(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return true;
  }
  return false;
}

void write_model_file(const std::string& path, const ModelFile& model) {
  std::string out;
  out.append(kMagic, 4);
  put_u32(out, model.version);
  put_string(out, model.kind);
  put_u64(out, model.vocab_fingerprint);
  put_string(out, model.meta_json);
  put_u32(out, static_cast<std::uint32_t>(model.tensors.size()));
  for (const auto& t : model.tensors) {
    put_string(out, t.name);
    put_u32(out, static_cast<std::uint32_t>(t.shape.size()));
    for (std::uint64_t d : t.shape) put_u64(out, d);
    if (t.data.size() != t.element_count()) {
      throw Error(Error::Code::kBadModelFile,
                  "tensor " + t.name + ": shape/data mismatch");
    }
    for (float v : t.data) put_f32(out, v);
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw Error(Error::Code::kIo, "could not open for write: " + path);
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw Error(Error::Code::kIo, "write failed: " + path);
}

ModelFile read_model_file(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw Error(Error::Code::kIo, "could not open for read: " + path);
  std::string data((std::istreambuf_iterator<char>(file)),
                   std::istreambuf_iterator<char>());
  Reader r(data, path);
  r.expect_magic();
  ModelFile model;
  model.version = r.u32();
  if (model.version != kCurrentVersion) {
    throw Error(Error::Code::kBadModelFile,
                path + ": unsupported model version " +
                    std::to_string(model.version));
  }
  model.kind = r.str();
  model.vocab_fingerprint = r.u64();
  model.meta_json = r.str();
  std::uint32_t count = r.u32();
  model.tensors.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    TensorBlob t;
    t.name = r.str();
    std::uint32_t ndim = r.u32();
    for (std::uint32_t d = 0; d < ndim; ++d) t.shape.push_back(r.u64());
    std::uint64_t n = t.element_count();
    t.data.reserve(n);
    for (std::uint64_t k = 0; k < n; ++k) t.data.push_back(r.f32());
    model.tensors.push_back(std::move(t));
  }
  if (!r.at_end()) {
    throw Error(Error::Code::kBadModelFile, path + ": trailing bytes");
  }
  return model;
}

void check_model_header(const ModelFile& model, const std::string& expected_kind,
                        std::uint64_t vocab_fingerprint) {
  if (model.kind != expected_kind) {
    throw Error(Error::Code::kBadModelFile,
                "model kind is '" + model.kind + "', expected '" +
                    expected_kind + "'");
  }
  if (model.vocab_fingerprint != vocab_fingerprint) {
    throw Error(Error::Code::kVocabMismatch,
                "model was trained against a different vocabulary");
  }
}

}  // namespace replykit
