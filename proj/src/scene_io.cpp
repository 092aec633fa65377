#include "eps2/scene_io.hpp"

#include <fstream>
#include <set>

#include "eps2/errors.hpp"

namespace eps2 {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& msg) { throw SceneError(path + ": " + msg); }

void only_keys(const json& j, const std::string& path, std::initializer_list<const char*> keys) {
  std::set<std::string> ok(keys.begin(), keys.end());
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!ok.count(it.key())) fail(path + "." + it.key(), "unknown key");
}

const json& need(const json& j, const std::string& path, const char* key) {
  if (!j.is_object() || !j.contains(key)) fail(path + "." + key, "missing");
  return j.at(key);
}

double num(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

Vec3 vec(const json& j, const std::string& path, int dim) {
  if (!j.is_array() || static_cast<int>(j.size()) != dim) fail(path, "expected an array of " + std::to_string(dim) + " numbers");
  Vec3 v;
  for (int i = 0; i < dim; ++i) v[i] = num(j[i], path + "[" + std::to_string(i) + "]");
  return v;
}

std::vector<double> nums(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array");
  std::vector<double> v;
  for (std::size_t i = 0; i < j.size(); ++i) v.push_back(num(j[i], path + "[" + std::to_string(i) + "]"));
  return v;
}

int count(const json& j, const std::string& path) {
  if (!j.is_number_integer() || j.get<long>() < 1) fail(path, "expected a positive integer");
  return j.get<int>();
}

Primitive parse_primitive(const json& j, const std::string& path, int dim) {
  only_keys(j, path, {"primitive", "params"});
  const json& nm = need(j, path, "primitive");
  if (!nm.is_string()) fail(path + ".primitive", "expected a string");
  std::string name = nm.get<std::string>();
  json params = j.contains("params") ? j.at("params") : json::object();
  std::string pp = path + ".params";
  if (!params.is_object()) fail(pp, "expected an object");
  try {
    if (name == "halfspace") {
      only_keys(params, pp, {"normal", "offset"});
      Vec3 n = vec(need(params, pp, "normal"), pp + ".normal", dim);
      if (norm(n) == 0) fail(pp + ".normal", "zero vector");
      return halfspace(dim, n, num(need(params, pp, "offset"), pp + ".offset"));
    }
    if (name == "ball") {
      only_keys(params, pp, {"center", "radius"});
      double r = num(need(params, pp, "radius"), pp + ".radius");
      if (!(r > 0)) fail(pp + ".radius", "expected a positive number");
      return ball(dim, vec(need(params, pp, "center"), pp + ".center", dim), r);
    }
    if (name == "box") {
      only_keys(params, pp, {"lo", "hi"});
      Vec3 lo = vec(need(params, pp, "lo"), pp + ".lo", dim), hi = vec(need(params, pp, "hi"), pp + ".hi", dim);
      for (int i = 0; i < dim; ++i)
        if (!(hi[i] > lo[i])) fail(pp + ".hi", "must exceed lo in every coordinate");
      return box(dim, lo, hi);
    }
    if (name == "polygon") {
      if (dim != 2) fail(path, "polygon needs dim 2 (use polytope in 3D)");
      only_keys(params, pp, {"vertices"});
      const json& vs = need(params, pp, "vertices");
      if (!vs.is_array()) fail(pp + ".vertices", "expected an array");
      std::vector<Vec3> v;
      for (std::size_t i = 0; i < vs.size(); ++i) v.push_back(vec(vs[i], pp + ".vertices[" + std::to_string(i) + "]", 2));
      return convex_polygon(v);
    }
    if (name == "polytope") {
      only_keys(params, pp, {"normals", "offsets"});
      const json& ns = need(params, pp, "normals");
      if (!ns.is_array()) fail(pp + ".normals", "expected an array");
      std::vector<Vec3> n;
      for (std::size_t i = 0; i < ns.size(); ++i) n.push_back(vec(ns[i], pp + ".normals[" + std::to_string(i) + "]", dim));
      return polytope(dim, n, nums(need(params, pp, "offsets"), pp + ".offsets"));
    }
    if (name == "graph") {
      only_keys(params, pp, {"knots", "values", "side", "origin", "spacing", "counts"});
      std::string side = params.value("side", "above");
      if (side != "above" && side != "below") fail(pp + ".side", "expected \"above\" or \"below\"");
      if (dim == 2) {
        return graph2(nums(need(params, pp, "knots"), pp + ".knots"), nums(need(params, pp, "values"), pp + ".values"),
                      side == "above");
      }
      Primitive p;
      p.kind = PrimKind::Graph3;
      p.dim = 3;
      p.above = side == "above";
      Vec3 o = vec(need(params, pp, "origin"), pp + ".origin", 2);
      Vec3 s = vec(need(params, pp, "spacing"), pp + ".spacing", 2);
      const json& c = need(params, pp, "counts");
      if (!c.is_array() || c.size() != 2) fail(pp + ".counts", "expected [nx, ny]");
      p.origin = o;
      p.spacing = s;
      p.nx = count(c[0], pp + ".counts[0]");
      p.ny = count(c[1], pp + ".counts[1]");
      if (p.nx < 2 || p.ny < 2) fail(pp + ".counts", "need at least 2 nodes per axis");
      if (!(s.x > 0 && s.y > 0)) fail(pp + ".spacing", "expected positive spacing");
      p.values = nums(need(params, pp, "values"), pp + ".values");
      if (p.values.size() != static_cast<std::size_t>(p.nx) * p.ny) fail(pp + ".values", "expected nx*ny values");
      return p;
    }
    if (name == "voxels") {
      only_keys(params, pp, {"origin", "spacing", "counts", "data"});
      Primitive p;
      p.kind = PrimKind::Voxels;
      p.dim = dim;
      p.origin = vec(need(params, pp, "origin"), pp + ".origin", dim);
      p.spacing = vec(need(params, pp, "spacing"), pp + ".spacing", dim);
      for (int i = 0; i < dim; ++i)
        if (!(p.spacing[i] > 0)) fail(pp + ".spacing", "expected positive spacing");
      const json& c = need(params, pp, "counts");
      if (!c.is_array() || static_cast<int>(c.size()) != dim) fail(pp + ".counts", "expected one count per axis");
      p.nx = count(c[0], pp + ".counts[0]");
      p.ny = count(c[1], pp + ".counts[1]");
      p.nz = dim == 3 ? count(c[2], pp + ".counts[2]") : 1;
      const json& d = need(params, pp, "data");
      std::size_t total = static_cast<std::size_t>(p.nx) * p.ny * p.nz;
      if (!d.is_array() || d.size() != total) fail(pp + ".data", "expected " + std::to_string(total) + " cells");
      for (std::size_t i = 0; i < total; ++i) {
        if (!d[i].is_number_integer()) fail(pp + ".data[" + std::to_string(i) + "]", "expected 0 or 1");
        p.occupancy.push_back(d[i].get<int>() != 0);
      }
      return p;
    }
    if (name == "empty") return empty_region(dim);
    if (name == "all") return whole_space(dim);
  } catch (const SceneError& e) {
    std::string m = e.what();
    if (m.rfind(path, 0) == 0) throw;
    fail(path, m);
  }
  fail(path + ".primitive", "unknown primitive '" + name + "'");
}

RegionNode parse_tree(const json& j, const std::string& path, int dim) {
  if (!j.is_object()) fail(path, "expected an object");
  if (j.contains("primitive")) return leaf(parse_primitive(j, path, dim));
  if (!j.contains("op")) fail(path, "expected 'op' or 'primitive'");
  only_keys(j, path, {"op", "children"});
  if (!j.at("op").is_string()) fail(path + ".op", "expected a string");
  std::string op = j.at("op").get<std::string>();
  const json& ch = need(j, path, "children");
  if (!ch.is_array()) fail(path + ".children", "expected an array");
  std::vector<RegionNode> kids;
  for (std::size_t i = 0; i < ch.size(); ++i) kids.push_back(parse_tree(ch[i], path + ".children[" + std::to_string(i) + "]", dim));
  if (op == "union") {
    if (kids.empty()) fail(path + ".children", "union needs at least one child");
    return union_of(std::move(kids));
  }
  if (op == "intersection") {
    if (kids.empty()) fail(path + ".children", "intersection needs at least one child");
    return intersection_of(std::move(kids));
  }
  if (op == "complement") {
    if (kids.size() != 1) fail(path + ".children", "complement takes exactly one child");
    return complement_of(std::move(kids.front()));
  }
  fail(path + ".op", "unknown op '" + op + "'");
}

json v2j(const Vec3& v, int dim) {
  json a = json::array();
  for (int i = 0; i < dim; ++i) a.push_back(v[i]);
  return a;
}

}  // namespace

RegionPair parse_scene(const json& doc) {
  if (!doc.is_object()) fail("$", "expected an object");
  only_keys(doc, "$", {"dim", "plus", "minus", "scale"});
  const json& d = need(doc, "$", "dim");
  if (!d.is_number_integer() || (d.get<int>() != 2 && d.get<int>() != 3)) fail("dim", "expected 2 or 3");
  int dim = d.get<int>();
  double scale = 0;
  if (doc.contains("scale")) {
    scale = num(doc.at("scale"), "scale");
    if (!(scale > 0)) fail("scale", "expected a positive number");
  }
  RegionNode plus = parse_tree(need(doc, "$", "plus"), "plus", dim);
  RegionNode minus = parse_tree(need(doc, "$", "minus"), "minus", dim);
  return RegionPair(dim, std::move(plus), std::move(minus), scale);
}

RegionPair load_scene(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SceneError(path + ": cannot open scene file");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw SceneError(path + ": " + e.what());
  }
  return parse_scene(doc);
}

json region_to_json(const RegionNode& n) {
  if (n.op != RegionNode::Op::Leaf) {
    json j;
    j["op"] = n.op == RegionNode::Op::Union ? "union" : n.op == RegionNode::Op::Intersection ? "intersection" : "complement";
    j["children"] = json::array();
    for (const auto& c : n.children) j["children"].push_back(region_to_json(c));
    return j;
  }
  const Primitive& p = n.prim;
  json j, q = json::object();
  int d = p.dim;
  switch (p.kind) {
    case PrimKind::HalfSpace:
      j["primitive"] = "halfspace";
      q["normal"] = v2j(p.normal, d);
      q["offset"] = p.offset;
      break;
    case PrimKind::Ball:
      j["primitive"] = "ball";
      q["center"] = v2j(p.center, d);
      q["radius"] = p.radius;
      break;
    case PrimKind::Box:
      j["primitive"] = "box";
      q["lo"] = v2j(p.lo, d);
      q["hi"] = v2j(p.hi, d);
      break;
    case PrimKind::Polytope: {
      j["primitive"] = "polytope";
      json ns = json::array();
      for (const auto& u : p.normals) ns.push_back(v2j(u, d));
      q["normals"] = ns;
      q["offsets"] = p.offsets;
      break;
    }
    case PrimKind::Graph:
      j["primitive"] = "graph";
      q["knots"] = p.knots;
      q["values"] = p.values;
      q["side"] = p.above ? "above" : "below";
      break;
    case PrimKind::Graph3:
      j["primitive"] = "graph";
      q["origin"] = v2j(p.origin, 2);
      q["spacing"] = v2j(p.spacing, 2);
      q["counts"] = {p.nx, p.ny};
      q["values"] = p.values;
      q["side"] = p.above ? "above" : "below";
      break;
    case PrimKind::Voxels: {
      j["primitive"] = "voxels";
      q["origin"] = v2j(p.origin, d);
      q["spacing"] = v2j(p.spacing, d);
      q["counts"] = d == 3 ? json{p.nx, p.ny, p.nz} : json{p.nx, p.ny};
      json data = json::array();
      for (auto c : p.occupancy) data.push_back(static_cast<int>(c));
      q["data"] = data;
      break;
    }
    case PrimKind::Empty: j["primitive"] = "empty"; break;
    case PrimKind::All: j["primitive"] = "all"; break;
  }
  j["params"] = q;
  return j;
}

json scene_to_json(const RegionPair& R) {
  json j;
  j["dim"] = R.dim();
  j["plus"] = region_to_json(R.plus());
  j["minus"] = region_to_json(R.minus());
  if (R.explicit_scale() > 0) j["scale"] = R.explicit_scale();
  return j;
}

}  // namespace eps2
