#include "icebot/planner.hpp"

#include <algorithm>
#include <limits>
#include <queue>

#include "icebot/error.hpp"
#include "json.hpp"

namespace icebot {

namespace {

struct OpenEntry {
  double f;
  double g;
  VertexId id;
};

// Min-heap on f, then vertex id.
struct OpenOrder {
  bool operator()(const OpenEntry& a, const OpenEntry& b) const {
    if (a.f != b.f) return a.f > b.f;
    return a.id > b.id;
  }
};

constexpr VertexId kNone = std::numeric_limits<VertexId>::max();

}  // namespace

RecoveryPath plan_between(const Roadmap& roadmap, VertexId start, VertexId goal) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto& verts = roadmap.vertices();
  const std::size_t n = verts.size();
  if (start >= n) throw Error(ErrorCode::InvalidStart, "start vertex does not exist");
  if (goal >= n) throw Error(ErrorCode::UnknownView, "goal vertex does not exist");

  const Configuration& goal_q = verts[goal];
  std::vector<double> g(n, std::numeric_limits<double>::infinity());
  std::vector<VertexId> parent(n, kNone);
  std::priority_queue<OpenEntry, std::vector<OpenEntry>, OpenOrder> open;

  g[start] = 0.0;
  open.push({distance(verts[start], goal_q), 0.0, start});

  bool found = false;
  while (!open.empty()) {
    const OpenEntry cur = open.top();
    open.pop();
    if (cur.g > g[cur.id]) continue;  // stale entry
    if (cur.id == goal) {
      found = true;
      break;
    }
    for (const Edge& e : roadmap.adjacent(cur.id)) {
      const double cand = cur.g + e.weight;
      // Strict improvement only; a vertex is re-opened whenever its cost
      // drops, so rounding in the heuristic cannot cost optimality.
      if (cand < g[e.to]) {
        g[e.to] = cand;
        parent[e.to] = cur.id;
        open.push({cand + distance(verts[e.to], goal_q), cand, e.to});
      }
    }
  }
  if (!found) throw Error(ErrorCode::Unreachable, "no roadmap path to the requested view");

  RecoveryPath path;
  for (VertexId v = goal; v != kNone; v = parent[v]) path.vertex_ids.push_back(v);
  std::reverse(path.vertex_ids.begin(), path.vertex_ids.end());
  path.waypoints.reserve(path.vertex_ids.size());
  for (VertexId v : path.vertex_ids) path.waypoints.push_back(verts[v]);
  path.total_cost = g[goal];
  path.search_time = std::chrono::steady_clock::now() - t0;
  return path;
}

RecoveryPath plan(const Roadmap& roadmap, VertexId start, const std::string& view) {
  const ViewBookmark* bookmark = roadmap.find_view(view);
  if (!bookmark) throw Error(ErrorCode::UnknownView, "unknown view: " + view);
  if (start >= roadmap.vertices().size()) throw Error(ErrorCode::InvalidStart, "start vertex does not exist");
  return plan_between(roadmap, start, bookmark->vertex_id);
}

double path_cost(const RecoveryPath& path) {
  double cost = 0.0;
  for (std::size_t i = 1; i < path.waypoints.size(); ++i) {
    cost += distance(path.waypoints[i - 1], path.waypoints[i]);
  }
  return cost;
}

VertexId snap_to_roadmap(const Roadmap& roadmap, const Configuration& q) {
  if (auto exact = roadmap.find_vertex(q)) return *exact;
  const auto near = roadmap.neighborhood(q);
  if (near.empty()) throw Error(ErrorCode::OffRoadmap, "current configuration is farther than epsilon from the roadmap");
  VertexId best = near.front();
  double best_d = distance(roadmap.vertex(best), q);
  for (VertexId v : near) {
    const double d = distance(roadmap.vertex(v), q);
    if (d < best_d) {
      best = v;
      best_d = d;
    }
  }
  return best;
}

std::string RecoveryPath::to_json() const {
  nlohmann::ordered_json doc;
  doc["format_version"] = kFormatVersion;
  auto wps = nlohmann::ordered_json::array();
  for (const auto& q : waypoints) wps.push_back(q.to_array());
  doc["waypoints"] = std::move(wps);
  doc["total_cost"] = total_cost;
  doc["search_time_ms"] = search_time.count() * 1e3;
  return doc.dump() + "\n";
}

RecoveryPath RecoveryPath::from_json(const std::string& text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    if (doc.at("format_version").get<int>() != kFormatVersion) {
      throw Error(ErrorCode::VersionMismatch, "path: unsupported format_version");
    }
    RecoveryPath p;
    for (const auto& w : doc.at("waypoints")) {
      p.waypoints.push_back(Configuration::from_array(w.get<std::array<double, kAxes>>()));
    }
    p.total_cost = doc.at("total_cost").get<double>();
    p.search_time = std::chrono::duration<double>(doc.at("search_time_ms").get<double>() / 1e3);
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Io, std::string("path: bad document: ") + e.what());
  }
}

}  // namespace icebot
