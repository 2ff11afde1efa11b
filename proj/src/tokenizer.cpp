#include "treglab/tokenizer.hpp"

namespace treglab {

TokenSequence tokenize(const std::string& text, int max_len) {
  if (max_len < 2) throw ValueError("tokenize: max_len must be at least 2");
  TokenSequence seq;
  seq.original_length = static_cast<int>(text.size());
  seq.ids.reserve(static_cast<size_t>(max_len));
  seq.ids.push_back(kClsId);
  size_t limit = static_cast<size_t>(max_len - 1);
  for (size_t i = 0; i < text.size() && i < limit; ++i) {
    seq.ids.push_back(static_cast<int>(static_cast<unsigned char>(text[i])) + kByteOffset);
  }
  while (seq.ids.size() < static_cast<size_t>(max_len)) seq.ids.push_back(kPadId);
  return seq;
}

std::string detokenize(const TokenSequence& seq) {
  std::string out;
  for (size_t i = 0; i < seq.ids.size(); ++i) {
    int id = seq.ids[i];
    if (id == kClsId || id == kMaskId) continue;
    if (id == kPadId) break;  // PAD only as suffix
    if (id < kByteOffset || id >= kVocabSize) {
      throw InputError("detokenize: id " + std::to_string(id) + " is not a byte token");
    }
    out.push_back(static_cast<char>(id - kByteOffset));
  }
  return out;
}

}  // namespace treglab
