#pragma once

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "pyrlite/physical.hpp"

namespace pyrlite {

inline constexpr char kLogMagic[8] = {'P', 'Y', 'R', 'L', 'I', 'T', 'E', '1'};
inline constexpr std::uint8_t kLogVersion = 0x01;
/// Offset of the first physical: magic plus version byte.
inline constexpr std::uint64_t kLogHeaderSize = 9;

/// One committed transaction as read back from a log.
struct LoggedTransaction {
  Physical header;  // always a TransactionHeader
  std::vector<Physical> physicals;
  std::uint64_t end = 0;  // offset just past the last physical
};

/// Splits a whole log image into transactions. Throws LogCorruption carrying
/// the end of the last complete transaction on any malformed byte.
std::vector<LoggedTransaction> read_transactions(std::span<const std::uint8_t> file);

/// Output of relocation: the header and the staged physicals with their final
/// positions, plus the encoded bytes ready for appending at `base`.
struct PreparedCommit {
  std::uint64_t base = 0;
  Physical header;
  std::vector<Physical> physicals;
  std::unordered_map<Uid, Uid> map;  // temporary uid -> file position
  std::vector<std::uint8_t> bytes;
};

/// Relocates staged physicals (temporary defining positions) to the positions
/// they will occupy when appended at `base`. References point backward, so a
/// single forward pass fixes every uid before the physical is sized.
PreparedCommit prepare_commit(std::uint64_t base, const std::vector<Physical>& staged, Uid user, Uid role,
                              std::int64_t timestamp_us);

/// Append-only log file `<name>.pyl`. Appends are serialized by the caller
/// (the database commit lock); reads of bytes below size() are always safe.
class LogFile {
 public:
  /// Opens or creates the file; a new file gets the magic and version byte.
  LogFile(std::filesystem::path path, bool sync);
  ~LogFile();
  LogFile(const LogFile&) = delete;
  LogFile& operator=(const LogFile&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::uint64_t size() const;

  /// Whole file image.
  std::vector<std::uint8_t> read_all() const;
  /// Bytes [from, to).
  std::vector<std::uint8_t> read_range(std::uint64_t from, std::uint64_t to) const;

  /// Writes a transaction header followed by the already-relocated physicals.
  /// Each physical's pos must equal the offset it lands at. Returns the header
  /// position. Throws DurableAppendError; the file is left at its old length.
  std::uint64_t append_transaction(const std::vector<Physical>& physicals, Uid user, Uid role,
                                   std::int64_t timestamp_us);

  /// Appends pre-encoded bytes that must start at `expected_base`.
  void append_bytes(std::span<const std::uint8_t> bytes, std::uint64_t expected_base);

 private:
  std::filesystem::path path_;
  int fd_ = -1;
  bool sync_;
  mutable std::mutex io_;
  std::uint64_t size_ = 0;
};

}  // namespace pyrlite
