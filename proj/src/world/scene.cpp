#include "mif/world/scene.hpp"

#include "mif/errors.hpp"
#include "mif/numerics/random.hpp"

#include <algorithm>
#include <array>
#include <sstream>

namespace mif::world {

bool Scene::in_bounds(Cell c) const {
  return c.row >= 0 && c.col >= 0 && c.row < height && c.col < width;
}

bool Scene::is_wall(Cell c) const {
  return !in_bounds(c) || walls[std::size_t(c.row * width + c.col)] != 0;
}

const Receptacle* Scene::receptacle_at(Cell c) const {
  for (const auto& r : receptacles)
    if (r.cell == c) return &r;
  return nullptr;
}

bool Scene::is_free(Cell c) const { return !is_wall(c) && receptacle_at(c) == nullptr; }

bool Scene::is_receptacle(EntityId id) const { return id >= 0 && id < int(receptacles.size()); }

const Receptacle& Scene::receptacle(EntityId id) const {
  if (!is_receptacle(id)) throw IndexError("no receptacle with id " + std::to_string(id));
  return receptacles[std::size_t(id)];
}

Receptacle& Scene::receptacle(EntityId id) {
  if (!is_receptacle(id)) throw IndexError("no receptacle with id " + std::to_string(id));
  return receptacles[std::size_t(id)];
}

const Receptacle* Scene::find_receptacle(ReceptacleClass cls) const {
  for (const auto& r : receptacles)
    if (r.cls == cls) return &r;
  return nullptr;
}

const ObjectState* Scene::find_object(EntityId id) const {
  for (const auto& o : objects)
    if (o.id == id) return &o;
  return nullptr;
}

ObjectState* Scene::find_object(EntityId id) {
  for (auto& o : objects)
    if (o.id == id) return &o;
  return nullptr;
}

const ObjectState* Scene::held_object() const {
  for (const auto& o : objects)
    if (o.location.kind == LocationKind::Held) return &o;
  return nullptr;
}

std::optional<EntityId> Scene::resting_receptacle(const ObjectState& obj) const {
  const ObjectState* cur = &obj;
  for (std::size_t guard = 0; guard <= objects.size(); ++guard) {
    switch (cur->location.kind) {
      case LocationKind::Receptacle: return cur->location.holder;
      case LocationKind::Container:
        cur = find_object(cur->location.holder);
        if (!cur) return std::nullopt;
        break;
      default: return std::nullopt;
    }
  }
  return std::nullopt;
}

int Scene::occupancy(LocationKind kind, EntityId holder) const {
  int n = 0;
  for (const auto& o : objects)
    if (o.location.kind == kind && o.location.holder == holder) ++n;
  return n;
}

void validate(const Scene& s) {
  auto fail = [&](const std::string& msg) { throw ContractError("invalid scene: " + msg); };
  if (s.height <= 0 || s.width <= 0 || s.walls.size() != std::size_t(s.height * s.width)) {
    fail("grid dimensions do not match wall map");
  }
  for (std::size_t i = 0; i < s.receptacles.size(); ++i) {
    const auto& r = s.receptacles[i];
    if (r.id != int(i)) fail("receptacle ids must be 0..R-1 in order");
    if (s.is_wall(r.cell)) fail("receptacle " + std::to_string(r.id) + " sits on a wall");
    for (std::size_t j = 0; j < i; ++j)
      if (s.receptacles[j].cell == r.cell) fail("two receptacles share a cell");
    if (r.toggled_on && !is_toggleable(r.cls)) fail("non-device receptacle is switched on");
  }
  if (!s.is_free(s.agent)) fail("agent cell is not free");
  int held = 0;
  std::vector<EntityId> ids;
  for (const auto& o : s.objects) {
    if (o.id < int(s.receptacles.size()) || o.id >= s.next_id) fail("object id out of range");
    ids.push_back(o.id);
    switch (o.location.kind) {
      case LocationKind::Floor:
        if (!s.is_free(o.location.cell)) fail("object on a blocked cell");
        break;
      case LocationKind::Receptacle:
        if (!s.is_receptacle(o.location.holder) ||
            !accepts_objects(s.receptacles[std::size_t(o.location.holder)].cls)) {
          fail("object " + std::to_string(o.id) + " in an invalid receptacle");
        }
        break;
      case LocationKind::Container: {
        const ObjectState* c = s.find_object(o.location.holder);
        if (!c || !is_container(c->cls) || c->id == o.id || is_container(o.cls)) {
          fail("object " + std::to_string(o.id) + " in an invalid container");
        }
        if (c->location.kind == LocationKind::Container) fail("nested containers");
        break;
      }
      case LocationKind::Held: ++held; break;
    }
  }
  if (held > 1) fail("more than one object held");
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) fail("duplicate object id");
  for (const auto& r : s.receptacles) {
    if (s.occupancy(LocationKind::Receptacle, r.id) > kReceptacleCapacity) fail("receptacle over capacity");
  }
  for (const auto& o : s.objects) {
    if (is_container(o.cls) && s.occupancy(LocationKind::Container, o.id) > 1) {
      fail("container holds more than one object");
    }
  }
}

namespace {

constexpr std::array kPairClasses = {ObjectClass::Mug,   ObjectClass::Vase,   ObjectClass::Cd,
                                     ObjectClass::Book,  ObjectClass::Remote, ObjectClass::Apple,
                                     ObjectClass::Potato, ObjectClass::Tomato};
constexpr std::array kHeatableSliceables = {ObjectClass::Apple, ObjectClass::Potato, ObjectClass::Tomato,
                                            ObjectClass::Bread};
constexpr std::array kExaminables = {ObjectClass::Mug, ObjectClass::Vase, ObjectClass::Cd, ObjectClass::Book,
                                     ObjectClass::Remote};
constexpr std::array kExtras = {ObjectClass::Apple, ObjectClass::Potato, ObjectClass::Tomato,
                                ObjectClass::Lettuce, ObjectClass::Bread, ObjectClass::Mug,
                                ObjectClass::Vase,  ObjectClass::Cd,     ObjectClass::Book,
                                ObjectClass::Remote};
constexpr int kSurfaceLoad = 4;

}  // namespace

Scene generate_scene(std::uint64_t seed, Pool pool, const LayoutPools& layouts) {
  const auto& candidates = layouts.pool(pool);
  if (candidates.empty()) throw DataError("layout pool '" + std::string(name(pool)) + "' is empty");
  Rng rng(mix_seed(seed, pool == Pool::Seen ? 0x5eea : 0x05ee));
  const Layout& layout = choose(candidates, rng);

  Scene s;
  s.layout_id = layout.id;
  s.pool = pool;
  s.seed = seed;
  s.height = layout.height();
  s.width = layout.width();
  s.walls.assign(std::size_t(s.height * s.width), 0);
  for (int r = 0; r < s.height; ++r) {
    for (int c = 0; c < s.width; ++c) {
      const char ch = layout.rows[std::size_t(r)][std::size_t(c)];
      if (ch == '#') s.walls[std::size_t(r * s.width + c)] = 1;
      if (auto cls = receptacle_from_symbol(ch)) {
        s.receptacles.push_back({int(s.receptacles.size()), *cls, {r, c}, false});
      }
    }
  }
  s.next_id = int(s.receptacles.size());

  std::vector<EntityId> surfaces;
  for (const auto& r : s.receptacles)
    if (is_surface(r.cls)) surfaces.push_back(r.id);

  auto place = [&](ObjectClass cls, EntityId avoid) {
    std::vector<EntityId> open;
    for (EntityId id : surfaces)
      if (id != avoid && s.occupancy(LocationKind::Receptacle, id) < kSurfaceLoad) open.push_back(id);
    const EntityId where = choose(open, rng);
    ObjectState o;
    o.id = s.next_id++;
    o.cls = cls;
    o.location = Location::in_receptacle(where);
    s.objects.push_back(o);
    return where;
  };

  place(ObjectClass::Knife, -1);
  place(bernoulli(rng, 0.5) ? ObjectClass::Pan : ObjectClass::Bowl, -1);
  const ObjectClass pair = choose(kPairClasses, rng);
  const EntityId first = place(pair, -1);
  place(pair, first);
  auto other_than_pair = [&](auto classes) {
    std::vector<ObjectClass> out;
    for (ObjectClass c : classes)
      if (c != pair) out.push_back(c);
    return choose(out, rng);
  };
  place(other_than_pair(kHeatableSliceables), -1);
  place(other_than_pair(kExaminables), -1);
  const std::size_t extras = 1 + uniform_index(rng, 3);
  for (std::size_t i = 0; i < extras; ++i) place(other_than_pair(kExtras), -1);

  std::vector<Cell> free;
  for (int r = 0; r < s.height; ++r)
    for (int c = 0; c < s.width; ++c)
      if (s.is_free({r, c})) free.push_back({r, c});
  s.agent = choose(free, rng);
  s.facing = Facing(uniform_index(rng, 4));
  validate(s);
  return s;
}

std::string describe(const Scene& s) {
  std::vector<std::string> rows(std::size_t(s.height), std::string(std::size_t(s.width), '.'));
  for (int r = 0; r < s.height; ++r)
    for (int c = 0; c < s.width; ++c)
      if (s.is_wall({r, c})) rows[std::size_t(r)][std::size_t(c)] = '#';
  for (const auto& rec : s.receptacles) rows[std::size_t(rec.cell.row)][std::size_t(rec.cell.col)] = symbol(rec.cls);
  constexpr char arrows[] = {'^', '>', 'v', '<'};
  rows[std::size_t(s.agent.row)][std::size_t(s.agent.col)] = arrows[int(s.facing)];
  std::ostringstream out;
  out << s.layout_id << " (" << name(s.pool) << ", seed " << s.seed << ")\n";
  for (const auto& row : rows) out << row << '\n';
  for (const auto& o : s.objects) {
    out << "  #" << o.id << ' ' << name(o.cls);
    switch (o.location.kind) {
      case LocationKind::Floor: out << " on floor (" << o.location.cell.row << ',' << o.location.cell.col << ')'; break;
      case LocationKind::Receptacle: out << " in " << name(s.receptacle(o.location.holder).cls); break;
      case LocationKind::Container: out << " inside #" << o.location.holder; break;
      case LocationKind::Held: out << " held"; break;
    }
    if (o.clean) out << " clean";
    if (o.hot) out << " hot";
    if (o.cold) out << " cold";
    if (o.sliced) out << " sliced";
    if (o.examined) out << " examined";
    out << '\n';
  }
  return out.str();
}

}  // namespace mif::world
