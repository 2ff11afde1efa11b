#pragma once

#include <string>
#include <vector>

#include "treglab/errors.hpp"

namespace treglab {

// Byte-level vocabulary: PAD=0, CLS=1, MASK=2, byte b -> b+3.
inline constexpr int kPadId = 0;
inline constexpr int kClsId = 1;
inline constexpr int kMaskId = 2;
inline constexpr int kByteOffset = 3;
inline constexpr int kVocabSize = 259;

struct TokenSequence {
  std::vector<int> ids;     // [CLS] + bytes+3, PAD-suffixed to max_len
  int original_length = 0;  // byte length of the source text

  int length() const { return static_cast<int>(ids.size()); }
};

// [CLS] + text bytes shifted by kByteOffset, truncated to max_len-1 bytes,
// padded with PAD up to max_len.
TokenSequence tokenize(const std::string& text, int max_len);

// Inverse of tokenize for texts that fit untruncated.
std::string detokenize(const TokenSequence& seq);

}  // namespace treglab
