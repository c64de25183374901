#pragma once

#include <stdexcept>
#include <string>

namespace replykit {

// Error taxonomy for the whole pipeline. Data-dependent failures carry a code
// so callers (and the CLI exit-code mapping) can react without string matching.
class Error : public std::runtime_error {
 public:
  enum class Code {
    kEmptyCorpus,
    kEmptyInput,
    kEmptyResponse,
    kEmptyTrieAfterFilter,
    kCanonicalEmpty,
    kDuplicateSeedLabel,
    kDivergedLoss,
    kMalformedInput,
    kMalformedRating,
    kNoCandidates,
    kNoSeeds,
    kResponseNotInSet,
    kSingleClassData,
    kUnknownCluster,
    kVocabMismatch,
    kZeroProbability,
    kBadModelFile,
    kBadConfig,
    kIo,
  };

  Error(Code code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Code code() const { return code_; }

 private:
  Code code_;
};

}  // namespace replykit
