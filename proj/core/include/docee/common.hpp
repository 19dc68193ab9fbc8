#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace docee {

// Malformed or inconsistent input data (files, schemas, configs).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite values or other numeric breakdown during training/inference.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Strict UTF-8 <-> UTF-32 conversion. Invalid byte sequences raise DataError.
std::u32string utf8_decode(std::string_view s);
std::string utf8_encode(std::u32string_view s);
std::string utf8_encode(char32_t c);

// FNV-1a, used for schema/vocab fingerprints in checkpoints.
uint64_t fnv1a64(std::string_view bytes);

// SplitMix64 step; used to derive independent per-item seeds from one root seed.
uint64_t mix64(uint64_t x);

}  // namespace docee
