#include "twincl/io.hpp"

#include <system_error>

#include "twincl/matrix.hpp"

namespace twincl {

AtomicFile::AtomicFile(std::filesystem::path path, bool binary)
    : path_(std::move(path)), tmp_(path_.string() + ".tmp") {
  out_.open(tmp_, binary ? std::ios::out | std::ios::binary : std::ios::out);
  if (!out_) throw Error("cannot write " + tmp_.string());
}

AtomicFile::~AtomicFile() {
  if (!committed_) {
    out_.close();
    std::error_code ec;
    std::filesystem::remove(tmp_, ec);
  }
}

void AtomicFile::commit() {
  out_.flush();
  if (!out_) throw Error("write failed: " + tmp_.string());
  out_.close();
  std::filesystem::rename(tmp_, path_);
  committed_ = true;
}

}  // namespace twincl
