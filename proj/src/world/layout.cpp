#include "mif/world/layout.hpp"

#include "mif/errors.hpp"
#include "mif/world/types.hpp"

#include <array>
#include <fstream>
#include <queue>
#include <set>
#include <sstream>

namespace mif::world {

extern const std::string_view kBuiltinLayouts;

std::string_view name(Pool p) { return p == Pool::Seen ? "seen" : "unseen"; }

std::optional<Pool> parse_pool(std::string_view s) {
  if (s == "seen") return Pool::Seen;
  if (s == "unseen") return Pool::Unseen;
  return std::nullopt;
}

const Layout& LayoutPools::find(std::string_view id) const {
  for (const auto* pool : {&seen, &unseen})
    for (const auto& layout : *pool)
      if (layout.id == id) return layout;
  throw NotFoundError("unknown layout '" + std::string(id) + "'");
}

void validate_layout(const Layout& layout) {
  auto fail = [&](const std::string& msg) {
    throw DataError("layout '" + layout.id + "': " + msg);
  };
  const int h = layout.height();
  const int w = layout.width();
  if (h < 3 || w < 3) fail("grid must be at least 3x3");
  std::array<int, kNumReceptacleClasses> counts{};
  for (int r = 0; r < h; ++r) {
    if (int(layout.rows[r].size()) != w) fail("row " + std::to_string(r) + " has wrong width");
    for (int c = 0; c < w; ++c) {
      const char ch = layout.rows[r][c];
      const bool border = r == 0 || c == 0 || r == h - 1 || c == w - 1;
      if (border && ch != '#') fail("border cell (" + std::to_string(r) + "," + std::to_string(c) + ") is not a wall");
      if (ch == '#' || ch == '.') continue;
      auto cls = receptacle_from_symbol(ch);
      if (!cls) fail(std::string("unknown symbol '") + ch + "'");
      ++counts[std::size_t(*cls)];
    }
  }
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] != 1) {
      fail("expected exactly one " + std::string(name(ReceptacleClass(i))) + ", found " +
           std::to_string(counts[i]));
    }
  }

  auto at = [&](int r, int c) { return layout.rows[r][c]; };
  std::set<std::pair<int, int>> free;
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c)
      if (at(r, c) == '.') free.insert({r, c});
  if (free.empty()) fail("no free cells");

  std::set<std::pair<int, int>> seen{*free.begin()};
  std::queue<std::pair<int, int>> frontier;
  frontier.push(*free.begin());
  constexpr int dr[] = {-1, 0, 1, 0};
  constexpr int dc[] = {0, 1, 0, -1};
  while (!frontier.empty()) {
    auto [r, c] = frontier.front();
    frontier.pop();
    for (int k = 0; k < 4; ++k) {
      std::pair<int, int> n{r + dr[k], c + dc[k]};
      if (free.count(n) && seen.insert(n).second) frontier.push(n);
    }
  }
  if (seen.size() != free.size()) fail("free space is not connected");

  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const char ch = at(r, c);
      if (ch == '#' || ch == '.') continue;
      bool reachable = false;
      for (int k = 0; k < 4; ++k) reachable |= free.count({r + dr[k], c + dc[k]}) > 0;
      if (!reachable) fail(std::string("receptacle '") + ch + "' has no adjacent free cell");
    }
  }
}

LayoutPools parse_layouts(std::string_view text, const std::string& origin) {
  LayoutPools pools;
  std::set<std::string> ids;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  auto fail = [&](const std::string& msg) {
    throw DataError(origin + ":" + std::to_string(line_no) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.rfind("# ", 0) == 0 || line == "#") continue;
    std::istringstream words(line);
    std::string keyword, id, pool_name, extra;
    words >> keyword >> id >> pool_name;
    if (keyword != "layout" || id.empty() || pool_name.empty() || (words >> extra)) {
      fail("expected 'layout <id> <seen|unseen>', got '" + line + "'");
    }
    auto pool = parse_pool(pool_name);
    if (!pool) fail("unknown pool '" + pool_name + "'");
    if (!ids.insert(id).second) fail("duplicate layout id '" + id + "'");
    Layout layout{id, *pool, {}};
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) break;
      layout.rows.push_back(line);
    }
    validate_layout(layout);
    (*pool == Pool::Seen ? pools.seen : pools.unseen).push_back(std::move(layout));
  }
  if (pools.seen.empty() || pools.unseen.empty()) {
    throw DataError(origin + ": both the seen and unseen pools need at least one layout");
  }
  return pools;
}

LayoutPools load_layouts(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open layout file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_layouts(ss.str(), path.string());
}

const LayoutPools& builtin_layouts() {
  static const LayoutPools pools = parse_layouts(kBuiltinLayouts, "builtin layouts");
  return pools;
}

}  // namespace mif::world
