#ifndef IRBMC_TYPES_H
#define IRBMC_TYPES_H

#include <cassert>
#include <cstdint>
#include <string>

namespace irbmc {

// Scalar types. U64/I64 exist only as internal widening types for safety
// instrumentation; the surface language stops at 32 bits.
enum class Ty : uint8_t { Bool, U8, I8, U16, I16, U32, I32, U64, I64 };

inline int width(Ty t) {
  switch (t) {
    case Ty::Bool: return 1;
    case Ty::U8: case Ty::I8: return 8;
    case Ty::U16: case Ty::I16: return 16;
    case Ty::U32: case Ty::I32: return 32;
    case Ty::U64: case Ty::I64: return 64;
  }
  return 0;
}

inline bool is_signed(Ty t) {
  return t == Ty::I8 || t == Ty::I16 || t == Ty::I32 || t == Ty::I64;
}

inline bool is_integer(Ty t) { return t != Ty::Bool; }

inline Ty widened(Ty t) {
  switch (t) {
    case Ty::U8: return Ty::U16;
    case Ty::I8: return Ty::I16;
    case Ty::U16: return Ty::U32;
    case Ty::I16: return Ty::I32;
    case Ty::U32: return Ty::U64;
    case Ty::I32: return Ty::I64;
    default: assert(!"no widening for this type"); return t;
  }
}

inline const char* ty_name(Ty t) {
  switch (t) {
    case Ty::Bool: return "bool";
    case Ty::U8: return "u8";
    case Ty::I8: return "i8";
    case Ty::U16: return "u16";
    case Ty::I16: return "i16";
    case Ty::U32: return "u32";
    case Ty::I32: return "i32";
    case Ty::U64: return "u64";
    case Ty::I64: return "i64";
  }
  return "?";
}

// Values are carried as the raw two's-complement bit pattern, zero-extended
// into a uint64_t. wrap() is the canonicalizing step after any arithmetic.
inline uint64_t wrap(uint64_t bits, Ty t) {
  int w = width(t);
  if (w >= 64) return bits;
  return bits & ((uint64_t{1} << w) - 1);
}

inline int64_t as_signed(uint64_t bits, Ty t) {
  int w = width(t);
  bits = wrap(bits, t);
  if (w < 64 && (bits >> (w - 1)) & 1) return int64_t(bits | (~uint64_t{0} << w));
  return int64_t(bits);
}

inline uint64_t min_value(Ty t) {
  if (!is_signed(t)) return 0;
  return uint64_t{1} << (width(t) - 1);  // bit pattern of the most negative value
}

inline uint64_t max_value(Ty t) {
  int w = width(t);
  if (is_signed(t)) return (uint64_t{1} << (w - 1)) - 1;
  if (w >= 64) return ~uint64_t{0};
  return (uint64_t{1} << w) - 1;
}

// True when the mathematical value v is representable in t.
inline bool fits(int64_t v, Ty t) {
  if (t == Ty::Bool) return v == 0 || v == 1;
  if (is_signed(t)) {
    int64_t lo = -(int64_t{1} << (width(t) - 1));
    int64_t hi = (int64_t{1} << (width(t) - 1)) - 1;
    return v >= lo && v <= hi;
  }
  if (v < 0) return false;
  if (width(t) >= 64) return true;
  return uint64_t(v) <= max_value(t);
}

}  // namespace irbmc

#endif
