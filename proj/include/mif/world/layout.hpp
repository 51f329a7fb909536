#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mif::world {

enum class Pool : std::uint8_t { Seen, Unseen };

std::string_view name(Pool p);
std::optional<Pool> parse_pool(std::string_view s);

struct Layout {
  std::string id;
  Pool pool = Pool::Seen;
  std::vector<std::string> rows;
  int height() const { return int(rows.size()); }
  int width() const { return rows.empty() ? 0 : int(rows.front().size()); }
};

struct LayoutPools {
  std::vector<Layout> seen;
  std::vector<Layout> unseen;
  const std::vector<Layout>& pool(Pool p) const { return p == Pool::Seen ? seen : unseen; }
  const Layout& find(std::string_view id) const;
};

// Text format: "layout <id> <seen|unseen>" followed by the grid rows, blank
// line terminated. Lines starting with "# " outside a grid are comments.
LayoutPools parse_layouts(std::string_view text, const std::string& origin = "<layouts>");
LayoutPools load_layouts(const std::filesystem::path& path);
const LayoutPools& builtin_layouts();

// Checks legend, borders, one receptacle per class, receptacle access and
// connectivity. Throws DataError.
void validate_layout(const Layout& layout);

}  // namespace mif::world
