#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <ostream>

namespace pyrlite {

enum class UidRange : std::uint8_t { Builtin, Committed, Transaction, Session, Compiled, Heap };

/// 64-bit identity of every database object, log record and row.
///
/// The value alone decides which range it belongs to:
///   [0, 4*2^60)       committed file positions
///   [4*2^60, 5*2^60)  transaction-temporary
///   [5*2^60, 6*2^60)  session
///   [6*2^60, 7*2^60)  compiled objects
///   >= 7*2^60         heap (query instancing)
///   < 0               built-in objects
class Uid {
 public:
  static constexpr std::int64_t kUnit = std::int64_t{1} << 60;
  static constexpr std::int64_t kTransactionBase = 4 * kUnit;
  static constexpr std::int64_t kSessionBase = 5 * kUnit;
  static constexpr std::int64_t kCompiledBase = 6 * kUnit;
  static constexpr std::int64_t kHeapBase = 7 * kUnit;

  constexpr Uid() = default;
  constexpr explicit Uid(std::int64_t v) : value_(v) {}

  constexpr std::int64_t value() const noexcept { return value_; }
  constexpr bool is_null() const noexcept { return value_ == 0; }

  constexpr UidRange range() const noexcept {
    if (value_ < 0) return UidRange::Builtin;
    if (value_ < kTransactionBase) return UidRange::Committed;
    if (value_ < kSessionBase) return UidRange::Transaction;
    if (value_ < kCompiledBase) return UidRange::Session;
    if (value_ < kHeapBase) return UidRange::Compiled;
    return UidRange::Heap;
  }
  constexpr bool is_committed() const noexcept { return range() == UidRange::Committed; }
  constexpr bool is_temporary() const noexcept { return range() == UidRange::Transaction; }
  constexpr bool is_builtin() const noexcept { return range() == UidRange::Builtin; }

  constexpr auto operator<=>(const Uid&) const = default;

 private:
  std::int64_t value_ = 0;
};

inline std::ostream& operator<<(std::ostream& os, Uid u) { return os << u.value(); }

namespace builtin {
inline constexpr Uid kInteger{-1};
inline constexpr Uid kReal{-2};
inline constexpr Uid kChar{-3};
inline constexpr Uid kBoolean{-4};
inline constexpr Uid kDate{-5};
/// The PUBLIC pseudo-role: grants to it apply to every user and role.
inline constexpr Uid kPublic{-16};
/// Header user/role of the bootstrap transaction that creates the first user.
inline constexpr Uid kSystem{0};
}  // namespace builtin

}  // namespace pyrlite

template <>
struct std::hash<pyrlite::Uid> {
  std::size_t operator()(pyrlite::Uid u) const noexcept { return std::hash<std::int64_t>{}(u.value()); }
};
