#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string_view>

#include "twincl/embeddings.hpp"
#include "twincl/optim.hpp"

namespace twincl {

inline constexpr std::string_view kCheckpointMagic = "TWINCL-CKPT-1";

/// Layout: the magic line "TWINCL-CKPT-1\n" followed by little-endian
///   u64 num_users, u64 num_items, u64 dim, u64 iteration, f64 beta,
///   f64[rows*dim] theta, f64[rows*dim] phi,
///   u8 has_optimizer, then (when set) u64 step, f64 lr, beta1, beta2,
///   epsilon, f64[rows*dim] m, f64[rows*dim] v.
struct Checkpoint {
  TwinState twins;
  std::optional<AdamState> optimizer;
};

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace twincl
