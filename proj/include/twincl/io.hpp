#pragma once

#include <filesystem>
#include <fstream>

namespace twincl {

/// Writes to "<path>.tmp" and renames onto `path` on commit(). If the writer
/// is destroyed uncommitted the temporary file is removed, so a failed run
/// leaves no partial output behind.
class AtomicFile {
 public:
  explicit AtomicFile(std::filesystem::path path, bool binary = false);
  AtomicFile(const AtomicFile&) = delete;
  AtomicFile& operator=(const AtomicFile&) = delete;
  ~AtomicFile();

  std::ofstream& stream() { return out_; }
  void commit();

 private:
  std::filesystem::path path_;
  std::filesystem::path tmp_;
  std::ofstream out_;
  bool committed_ = false;
};

}  // namespace twincl
