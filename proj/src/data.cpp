#include "twincl/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

namespace twincl {

InteractionFormat parse_format(const std::string& tag) {
  if (tag == "adj") return InteractionFormat::Adjacency;
  if (tag == "pairs") return InteractionFormat::Pairs;
  throw Error("unknown interaction format '" + tag + "' (expected adj or pairs)");
}

std::string to_string(InteractionFormat f) {
  return f == InteractionFormat::Adjacency ? "adj" : "pairs";
}

namespace {

void check_token(const std::string& tok, const std::string& source, Index line) {
  for (unsigned char c : tok) {
    if (c == ',' || c < 0x21 || c == 0x7f)
      throw Error(source + ":" + std::to_string(line) + ": malformed token '" + tok + "'");
  }
}

}  // namespace

std::vector<RawInteraction> parse_interactions(std::istream& in, InteractionFormat format,
                                               const std::string& source) {
  std::vector<RawInteraction> out;
  std::string line;
  Index line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream tokens(line);
    std::vector<std::string> fields;
    for (std::string tok; tokens >> tok;) {
      check_token(tok, source, line_no);
      fields.push_back(std::move(tok));
    }
    if (fields.empty()) continue;
    if (format == InteractionFormat::Pairs) {
      if (fields.size() != 2)
        throw Error(source + ":" + std::to_string(line_no) + ": expected 'user item', got " +
                    std::to_string(fields.size()) + " tokens");
      out.push_back({fields[0], fields[1]});
    } else {
      for (Index k = 1; k < fields.size(); ++k) out.push_back({fields[0], fields[k]});
    }
  }
  return out;
}

std::vector<RawInteraction> load_interactions(const std::filesystem::path& path,
                                              InteractionFormat format) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return parse_interactions(in, format, path.string());
}

Index IdMap::intern(const std::string& external) {
  auto [it, inserted] = index_.try_emplace(external, ids_.size());
  if (inserted) ids_.push_back(external);
  return it->second;
}

std::optional<Index> IdMap::find(const std::string& external) const {
  auto it = index_.find(external);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

DatasetSplits build_splits(const std::vector<RawInteraction>& train_raw,
                           const std::vector<RawInteraction>& test_raw,
                           double validation_fraction, std::uint64_t seed) {
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0))
    throw Error("validation fraction must lie in [0, 1)");
  DatasetSplits s;
  std::vector<Edge> train;
  train.reserve(train_raw.size());
  for (const auto& r : train_raw) train.emplace_back(s.users.intern(r.user), s.items.intern(r.item));
  const Index train_users = s.users.size();
  const Index train_items = s.items.size();
  std::vector<Edge> test;
  test.reserve(test_raw.size());
  for (const auto& r : test_raw) test.emplace_back(s.users.intern(r.user), s.items.intern(r.item));
  s.num_users = s.users.size();
  s.num_items = s.items.size();

  std::sort(train.begin(), train.end());
  train.erase(std::unique(train.begin(), train.end()), train.end());

  // Per-user holdout; users are visited in index order so one RNG stream
  // determines the whole split.
  std::mt19937_64 rng(seed);
  for (auto begin = train.begin(); begin != train.end();) {
    auto end = std::find_if(begin, train.end(),
                            [u = begin->first](const Edge& e) { return e.first != u; });
    const auto deg = static_cast<Index>(end - begin);
    auto holdout = static_cast<Index>(
        std::ceil(validation_fraction * static_cast<double>(deg) - 1e-9));
    holdout = std::min(holdout, deg - 1);
    std::vector<Edge> user_edges(begin, end);
    if (holdout > 0) {
      std::shuffle(user_edges.begin(), user_edges.end(), rng);
      s.validation.insert(s.validation.end(), user_edges.begin(),
                          user_edges.begin() + static_cast<std::ptrdiff_t>(holdout));
    }
    s.train.insert(s.train.end(), user_edges.begin() + static_cast<std::ptrdiff_t>(holdout),
                   user_edges.end());
    begin = end;
  }
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.validation.begin(), s.validation.end());

  std::sort(test.begin(), test.end());
  test.erase(std::unique(test.begin(), test.end()), test.end());
  std::vector<Index> user_seen(s.num_users, 0), item_seen(s.num_items, 0);
  for (const auto& [u, i] : s.train) {
    user_seen[u] = 1;
    item_seen[i] = 1;
  }
  for (const auto& e : test) {
    const bool cold = e.first >= train_users || e.second >= train_items ||
                      !user_seen[e.first] || !item_seen[e.second];
    const bool known = std::binary_search(train.begin(), train.end(), e);
    if (cold || known) {
      ++s.excluded_test;
    } else {
      s.test.push_back(e);
    }
  }
  return s;
}

void write_id_map(std::ostream& out, const IdMap& map) {
  for (Index k = 0; k < map.size(); ++k) out << map.external(k) << ',' << k << '\n';
}

IdMap read_id_map(std::istream& in) {
  IdMap map;
  std::string line;
  Index line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto comma = line.rfind(',');
    if (comma == std::string::npos) throw Error("id map line " + std::to_string(line_no) + ": missing comma");
    const std::string ext = line.substr(0, comma);
    Index idx = 0;
    try {
      idx = static_cast<Index>(std::stoull(line.substr(comma + 1)));
    } catch (const std::exception&) {
      throw Error("id map line " + std::to_string(line_no) + ": bad index");
    }
    if (idx != map.size() || map.find(ext))
      throw Error("id map line " + std::to_string(line_no) + ": indices must be contiguous and unique");
    map.intern(ext);
  }
  return map;
}

}  // namespace twincl
