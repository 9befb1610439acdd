#pragma once

namespace setre::vocab_ids {

// Reserved token ids shared by the vocabulary and the encoder.
inline constexpr int kPad = 0;
inline constexpr int kUnknown = 1;
inline constexpr int kStartMarker = 2;  // prepended to every sentence
inline constexpr int kEndMarker = 3;    // appended to every sentence
inline constexpr int kReservedCount = 4;

}  // namespace setre::vocab_ids
