#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "twincl/graph.hpp"

namespace twincl {

enum class InteractionFormat {
  Adjacency,  // "user item item ..." per line
  Pairs,      // "user item" per line
};

InteractionFormat parse_format(const std::string& tag);
std::string to_string(InteractionFormat f);

struct RawInteraction {
  std::string user;
  std::string item;

  bool operator==(const RawInteraction&) const = default;
};

std::vector<RawInteraction> parse_interactions(std::istream& in, InteractionFormat format,
                                               const std::string& source = "<input>");
std::vector<RawInteraction> load_interactions(const std::filesystem::path& path,
                                              InteractionFormat format);

/// Opaque external id <-> dense index, indices assigned in first-seen order.
class IdMap {
 public:
  Index intern(const std::string& external);
  std::optional<Index> find(const std::string& external) const;
  const std::string& external(Index dense) const { return ids_.at(dense); }
  Index size() const { return ids_.size(); }
  const std::vector<std::string>& externals() const { return ids_; }

  bool operator==(const IdMap& other) const { return ids_ == other.ids_; }

 private:
  std::unordered_map<std::string, Index> index_;
  std::vector<std::string> ids_;
};

struct DatasetSplits {
  Index num_users = 0;
  Index num_items = 0;
  std::vector<Edge> train;       // sorted, unique
  std::vector<Edge> validation;  // sorted, unique
  std::vector<Edge> test;        // sorted, unique
  IdMap users;
  IdMap items;
  Index excluded_test = 0;  // test pairs dropped: cold-start endpoint or seen in train
};

/// Remaps ids densely over train then test, then holds out
/// min(ceil(fraction * deg), deg - 1) training edges per user for validation.
DatasetSplits build_splits(const std::vector<RawInteraction>& train_raw,
                           const std::vector<RawInteraction>& test_raw,
                           double validation_fraction, std::uint64_t seed);

/// `external_id,dense_index` lines.
void write_id_map(std::ostream& out, const IdMap& map);
IdMap read_id_map(std::istream& in);

}  // namespace twincl
