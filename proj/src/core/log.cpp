#include "pyrlite/log.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "pyrlite/errors.hpp"

namespace pyrlite {

std::vector<LoggedTransaction> read_transactions(std::span<const std::uint8_t> file) {
  if (file.size() < kLogHeaderSize || std::memcmp(file.data(), kLogMagic, sizeof kLogMagic) != 0)
    throw LogCorruption(0, "missing PYRLITE1 magic", 0);
  if (file[8] != kLogVersion) throw LogCorruption(8, "unsupported format version " + std::to_string(file[8]), 0);

  std::vector<LoggedTransaction> out;
  std::uint64_t pos = kLogHeaderSize;
  std::uint64_t last_good = kLogHeaderSize;
  try {
    while (pos < file.size()) {
      auto [header, next] = decode_physical(file, pos);
      if (header.kind() != PhysicalKind::TransactionHeader)
        throw LogCorruption(pos, std::string("expected a transaction header, found ") + kind_name(header.kind()));
      const auto count = header.as<phys::TransactionHeader>().count;
      if (count == 0) throw LogCorruption(pos, "empty transaction");
      LoggedTransaction tx{std::move(header), {}, 0};
      pos = next;
      for (std::uint64_t i = 0; i < count; ++i) {
        if (pos >= file.size()) throw LogCorruption(pos, "transaction truncated");
        auto [p, after] = decode_physical(file, pos);
        if (p.kind() == PhysicalKind::TransactionHeader) throw LogCorruption(pos, "transaction header inside transaction");
        tx.physicals.push_back(std::move(p));
        pos = after;
      }
      tx.end = pos;
      last_good = pos;
      out.push_back(std::move(tx));
    }
  } catch (const LogCorruption& e) {
    std::string what = e.what();
    throw LogCorruption(e.offset(), what.substr(what.find(": ") + 2), last_good);
  }
  return out;
}

PreparedCommit prepare_commit(std::uint64_t base, const std::vector<Physical>& staged, Uid user, Uid role,
                              std::int64_t timestamp_us) {
  if (staged.empty()) throw Error("empty commit");
  PreparedCommit out;
  out.base = base;
  out.header = Physical{Uid{static_cast<std::int64_t>(base)},
                        phys::TransactionHeader{user, role, timestamp_us, staged.size()}};
  encode_physical(out.header, out.bytes);
  for (const auto& p : staged) {
    Physical r = relocate(p, out.map);
    r.pos = Uid{static_cast<std::int64_t>(base + out.bytes.size())};
    if (p.pos.is_temporary()) out.map.emplace(p.pos, r.pos);
    encode_physical(r, out.bytes);
    out.physicals.push_back(std::move(r));
  }
  return out;
}

LogFile::LogFile(std::filesystem::path path, bool sync) : path_(std::move(path)), sync_(sync) {
  fd_ = ::open(path_.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
  if (fd_ < 0) throw Error("cannot open log " + path_.string() + ": " + std::strerror(errno));
  off_t end = ::lseek(fd_, 0, SEEK_END);
  if (end < 0) throw Error("cannot size log " + path_.string());
  size_ = static_cast<std::uint64_t>(end);
  if (size_ == 0) {
    std::uint8_t head[kLogHeaderSize];
    std::memcpy(head, kLogMagic, sizeof kLogMagic);
    head[8] = kLogVersion;
    append_bytes(head, 0);
  }
}

LogFile::~LogFile() {
  if (fd_ >= 0) ::close(fd_);
}

std::uint64_t LogFile::size() const {
  std::lock_guard lock(io_);
  return size_;
}

std::vector<std::uint8_t> LogFile::read_all() const { return read_range(0, size()); }

std::vector<std::uint8_t> LogFile::read_range(std::uint64_t from, std::uint64_t to) const {
  std::vector<std::uint8_t> out(static_cast<std::size_t>(to - from));
  std::size_t done = 0;
  while (done < out.size()) {
    auto n = ::pread(fd_, out.data() + done, out.size() - done, static_cast<off_t>(from + done));
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) throw Error("short read from log " + path_.string());
    done += static_cast<std::size_t>(n);
  }
  return out;
}

void LogFile::append_bytes(std::span<const std::uint8_t> bytes, std::uint64_t expected_base) {
  std::lock_guard lock(io_);
  if (expected_base != size_)
    throw DurableAppendError("append expected at " + std::to_string(expected_base) + " but log ends at " +
                             std::to_string(size_));
  std::size_t done = 0;
  while (done < bytes.size()) {
    auto n = ::pwrite(fd_, bytes.data() + done, bytes.size() - done, static_cast<off_t>(size_ + done));
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) {
      int err = errno;
      [[maybe_unused]] int ignored = ::ftruncate(fd_, static_cast<off_t>(size_));
      throw DurableAppendError("write to " + path_.string() + " failed: " + std::strerror(err));
    }
    done += static_cast<std::size_t>(n);
  }
  if (sync_ && ::fdatasync(fd_) != 0) {
    int err = errno;
    [[maybe_unused]] int ignored = ::ftruncate(fd_, static_cast<off_t>(size_));
    throw DurableAppendError("fdatasync of " + path_.string() + " failed: " + std::strerror(err));
  }
  size_ += bytes.size();
}

std::uint64_t LogFile::append_transaction(const std::vector<Physical>& physicals, Uid user, Uid role,
                                          std::int64_t timestamp_us) {
  if (physicals.empty()) throw Error("empty commit");
  const std::uint64_t base = size();
  std::vector<std::uint8_t> bytes;
  encode_physical(Physical{Uid{static_cast<std::int64_t>(base)},
                           phys::TransactionHeader{user, role, timestamp_us, physicals.size()}},
                  bytes);
  for (const auto& p : physicals) {
    if (p.pos.value() != static_cast<std::int64_t>(base + bytes.size()))
      throw DurableAppendError("physical " + std::to_string(p.pos.value()) + " would land at " +
                               std::to_string(base + bytes.size()));
    encode_physical(p, bytes);
  }
  append_bytes(bytes, base);
  return base;
}

}  // namespace pyrlite
