#include "mif/world/serialize.hpp"

#include "mif/errors.hpp"

namespace mif::world {
namespace {

template <class T, class Parse>
T parse_enum(const Json& j, const char* what, Parse parse) {
  const auto text = j.get<std::string>();
  auto value = parse(text);
  if (!value) throw DataError(std::string("unknown ") + what + " '" + text + "'");
  return *value;
}

Json cell_json(Cell c) { return Json::array({c.row, c.col}); }
Cell cell_from(const Json& j) { return {j.at(0).get<int>(), j.at(1).get<int>()}; }

std::string_view name(LocationKind k) {
  switch (k) {
    case LocationKind::Floor: return "floor";
    case LocationKind::Receptacle: return "receptacle";
    case LocationKind::Container: return "container";
    case LocationKind::Held: return "held";
  }
  return "?";
}

LocationKind location_kind(const std::string& s) {
  for (auto k : {LocationKind::Floor, LocationKind::Receptacle, LocationKind::Container, LocationKind::Held})
    if (name(k) == s) return k;
  throw DataError("unknown location kind '" + s + "'");
}

}  // namespace

Json to_json(const Scene& s) {
  Json j;
  j["layout_id"] = s.layout_id;
  j["pool"] = std::string(name(s.pool));
  j["seed"] = s.seed;
  Json grid = Json::array();
  for (int r = 0; r < s.height; ++r) {
    std::string row;
    for (int c = 0; c < s.width; ++c) row += s.is_wall({r, c}) ? '#' : '.';
    grid.push_back(row);
  }
  j["grid"] = grid;
  Json recs = Json::array();
  for (const auto& r : s.receptacles) {
    recs.push_back({{"id", r.id}, {"class", std::string(name(r.cls))}, {"cell", cell_json(r.cell)},
                    {"toggled_on", r.toggled_on}});
  }
  j["receptacles"] = recs;
  Json objs = Json::array();
  for (const auto& o : s.objects) {
    Json loc = {{"kind", std::string(name(o.location.kind))}};
    if (o.location.kind == LocationKind::Floor) loc["cell"] = cell_json(o.location.cell);
    if (o.location.kind == LocationKind::Receptacle || o.location.kind == LocationKind::Container) {
      loc["holder"] = o.location.holder;
    }
    objs.push_back({{"id", o.id},
                    {"class", std::string(name(o.cls))},
                    {"location", loc},
                    {"clean", o.clean},
                    {"hot", o.hot},
                    {"cold", o.cold},
                    {"sliced", o.sliced},
                    {"toggled_on", o.toggled_on},
                    {"examined", o.examined}});
  }
  j["objects"] = objs;
  j["agent"] = {{"cell", cell_json(s.agent)}, {"facing", std::string(name(s.facing))}};
  j["next_id"] = s.next_id;
  return j;
}

Scene scene_from_json(const Json& j) {
  try {
    Scene s;
    s.layout_id = j.at("layout_id").get<std::string>();
    s.pool = parse_enum<Pool>(j.at("pool"), "pool", parse_pool);
    s.seed = j.at("seed").get<std::uint64_t>();
    const auto& grid = j.at("grid");
    s.height = int(grid.size());
    s.width = s.height ? int(grid.at(0).get<std::string>().size()) : 0;
    for (const auto& row : grid) {
      const auto text = row.get<std::string>();
      if (int(text.size()) != s.width) throw DataError("ragged grid");
      for (char ch : text) s.walls.push_back(ch == '#' ? 1 : 0);
    }
    for (const auto& r : j.at("receptacles")) {
      s.receptacles.push_back({r.at("id").get<int>(),
                               parse_enum<ReceptacleClass>(r.at("class"), "receptacle class", parse_receptacle_class),
                               cell_from(r.at("cell")), r.at("toggled_on").get<bool>()});
    }
    for (const auto& o : j.at("objects")) {
      ObjectState st;
      st.id = o.at("id").get<int>();
      st.cls = parse_enum<ObjectClass>(o.at("class"), "object class", parse_object_class);
      const auto& loc = o.at("location");
      st.location.kind = location_kind(loc.at("kind").get<std::string>());
      if (loc.contains("cell")) st.location.cell = cell_from(loc.at("cell"));
      if (loc.contains("holder")) st.location.holder = loc.at("holder").get<int>();
      st.clean = o.at("clean").get<bool>();
      st.hot = o.at("hot").get<bool>();
      st.cold = o.at("cold").get<bool>();
      st.sliced = o.at("sliced").get<bool>();
      st.toggled_on = o.at("toggled_on").get<bool>();
      st.examined = o.at("examined").get<bool>();
      s.objects.push_back(st);
    }
    s.agent = cell_from(j.at("agent").at("cell"));
    s.facing = parse_enum<Facing>(j.at("agent").at("facing"), "facing", parse_facing);
    s.next_id = j.at("next_id").get<int>();
    validate(s);
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed scene JSON: ") + e.what());
  }
}

Json to_json(const SubgoalSpec& spec) {
  Json j;
  j["type"] = std::string(name(spec.type));
  if (spec.object) j["object"] = std::string(name(*spec.object));
  if (spec.sliced) j["sliced"] = true;
  if (spec.receptacle >= 0) j["receptacle"] = spec.receptacle;
  if (spec.container) j["container"] = std::string(name(*spec.container));
  if (spec.type == SubgoalType::Toggle) j["toggle_on"] = spec.toggle_on;
  return j;
}

SubgoalSpec subgoal_from_json(const Json& j) {
  try {
    SubgoalSpec spec;
    spec.type = parse_enum<SubgoalType>(j.at("type"), "subgoal type", parse_subgoal_type);
    if (j.contains("object")) spec.object = parse_enum<ObjectClass>(j.at("object"), "object class", parse_object_class);
    spec.sliced = j.value("sliced", false);
    spec.receptacle = j.value("receptacle", -1);
    if (j.contains("container")) {
      spec.container = parse_enum<ObjectClass>(j.at("container"), "object class", parse_object_class);
    }
    spec.toggle_on = j.value("toggle_on", true);
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed subgoal JSON: ") + e.what());
  }
}

Json to_json(const Action& a) {
  if (needs_target(a.type)) return Json::array({std::string(name(a.type)), a.target_slot});
  return Json(std::string(name(a.type)));
}

Action action_from_json(const Json& j) {
  try {
    if (j.is_string()) {
      Action a{parse_enum<ActionType>(j, "action", parse_action_type), -1};
      if (needs_target(a.type)) throw DataError("action '" + j.get<std::string>() + "' needs a target slot");
      return a;
    }
    Action a{parse_enum<ActionType>(j.at(0), "action", parse_action_type), j.at(1).get<int>()};
    if (!needs_target(a.type)) throw DataError("action '" + std::string(name(a.type)) + "' takes no target");
    return a;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed action JSON: ") + e.what());
  }
}

}  // namespace mif::world
