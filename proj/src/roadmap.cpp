#include "icebot/roadmap.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "icebot/error.hpp"
#include "json.hpp"

namespace icebot {

using ordered_json = nlohmann::ordered_json;

std::size_t Roadmap::KeyHash::operator()(const Key& k) const noexcept {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (auto v : k) {
    h ^= static_cast<std::uint64_t>(v);
    h *= 0x100000001b3ull;
    h ^= h >> 29;
  }
  return static_cast<std::size_t>(h);
}

Roadmap::Roadmap(double epsilon) : epsilon_(epsilon), grid_(epsilon > 0.0 ? epsilon : 1.0) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw Error(ErrorCode::InvalidArgument, "roadmap epsilon must be positive and finite");
  }
}

Roadmap::Key Roadmap::key_of(const Configuration& q) {
  Key k{};
  for (std::size_t i = 0; i < kAxes; ++i) k[i] = std::llround(q[i] / kQuantum);
  return k;
}

VertexId Roadmap::insert_vertex(const Configuration& q) {
  const VertexId id = vertices_.size();
  vertices_.push_back(q);
  adjacency_.emplace_back();
  index_.emplace(key_of(q), id);
  grid_.insert(id, q);
  return id;
}

void Roadmap::add_edge(VertexId a, VertexId b) {
  const double w = distance(vertices_[a], vertices_[b]);
  adjacency_[a].push_back({b, w});
  adjacency_[b].push_back({a, w});
  edges_.emplace_back(std::min(a, b), std::max(a, b));
}

VertexId Roadmap::observe(const Configuration& q) {
  if (!q.is_finite()) throw Error(ErrorCode::InvalidArgument, "observe: non-finite configuration");

  const Key key = key_of(q);
  if (last_key_ && *last_key_ == key) return *last_observed_;

  ++observation_count_;
  VertexId id;
  if (auto it = index_.find(key); it != index_.end()) {
    // Already a vertex: every eps-neighbour was joined when the later of the
    // two was inserted, so there is nothing to add.
    id = it->second;
  } else {
    const auto neighbours = grid_.query(q, epsilon_, vertices_);
    id = insert_vertex(q);
    for (VertexId n : neighbours) add_edge(n, id);
    if (last_observed_ && !std::binary_search(neighbours.begin(), neighbours.end(), *last_observed_)) {
      ++disconnected_insertions_;
    }
  }
  last_observed_ = id;
  last_key_ = key;
  return id;
}

std::vector<VertexId> Roadmap::neighborhood(const Configuration& q, double eps) const {
  if (!(eps > 0.0)) throw Error(ErrorCode::InvalidArgument, "neighborhood: eps must be positive");
  return grid_.query(q, eps, vertices_);
}

const ViewBookmark& Roadmap::save_view(const std::string& label, std::optional<double> saved_at) {
  if (!last_observed_) throw Error(ErrorCode::EmptyRoadmap, "empty roadmap");
  if (label.empty()) throw Error(ErrorCode::InvalidArgument, "view label must not be empty");
  if (find_view(label)) throw Error(ErrorCode::DuplicateLabel, "duplicate view label: " + label);
  views_.push_back({label, *last_observed_, saved_at.value_or(static_cast<double>(observation_count_))});
  return views_.back();
}

RoadmapStats Roadmap::stats() const noexcept {
  return {vertices_.size(), edges_.size(), views_.size()};
}

std::optional<VertexId> Roadmap::find_vertex(const Configuration& q) const {
  if (auto it = index_.find(key_of(q)); it != index_.end()) return it->second;
  return std::nullopt;
}

const ViewBookmark* Roadmap::find_view(const std::string& label) const {
  auto it = std::find_if(views_.begin(), views_.end(), [&](const ViewBookmark& v) { return v.label == label; });
  return it == views_.end() ? nullptr : &*it;
}

std::string Roadmap::to_json() const {
  ordered_json doc;
  doc["format_version"] = kFormatVersion;
  doc["epsilon"] = epsilon_;
  auto verts = ordered_json::array();
  for (const auto& q : vertices_) verts.push_back(q.to_array());
  doc["vertices"] = std::move(verts);
  auto edges = ordered_json::array();
  for (const auto& [a, b] : edges_) edges.push_back({a, b});
  doc["edges"] = std::move(edges);
  auto views = ordered_json::array();
  for (const auto& v : views_) {
    ordered_json jv;
    jv["label"] = v.label;
    jv["vertex_id"] = v.vertex_id;
    jv["saved_at"] = v.saved_at;
    views.push_back(std::move(jv));
  }
  doc["views"] = std::move(views);
  return doc.dump() + "\n";
}

Roadmap Roadmap::from_json(const std::string& text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Io, std::string("roadmap: malformed JSON: ") + e.what());
  }
  try {
    if (doc.at("format_version").get<int>() != kFormatVersion) {
      throw Error(ErrorCode::VersionMismatch, "roadmap: unsupported format_version");
    }
    Roadmap map(doc.at("epsilon").get<double>());
    for (const auto& jv : doc.at("vertices")) {
      const auto q = Configuration::from_array(jv.get<std::array<double, kAxes>>());
      if (!q.is_finite()) throw Error(ErrorCode::Io, "roadmap: non-finite vertex");
      if (map.index_.count(key_of(q))) throw Error(ErrorCode::Io, "roadmap: duplicate vertex");
      map.insert_vertex(q);
    }
    const std::size_t n = map.vertices_.size();
    std::set<std::pair<VertexId, VertexId>> seen;
    for (const auto& je : doc.at("edges")) {
      const auto a = je.at(0).get<VertexId>();
      const auto b = je.at(1).get<VertexId>();
      if (a >= n || b >= n || a == b) throw Error(ErrorCode::Io, "roadmap: invalid edge");
      if (!seen.emplace(std::min(a, b), std::max(a, b)).second) {
        throw Error(ErrorCode::Io, "roadmap: duplicate edge");
      }
      if (distance(map.vertices_[a], map.vertices_[b]) > map.epsilon_) {
        throw Error(ErrorCode::Io, "roadmap: edge longer than epsilon");
      }
      map.add_edge(a, b);
    }
    for (const auto& jv : doc.at("views")) {
      ViewBookmark v{jv.at("label").get<std::string>(), jv.at("vertex_id").get<VertexId>(),
                     jv.at("saved_at").get<double>()};
      if (v.vertex_id >= n) throw Error(ErrorCode::Io, "roadmap: view references unknown vertex");
      if (map.find_view(v.label)) throw Error(ErrorCode::Io, "roadmap: duplicate view label");
      map.views_.push_back(std::move(v));
    }
    return map;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Io, std::string("roadmap: bad document: ") + e.what());
  }
}

void Roadmap::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  out << to_json();
}

Roadmap Roadmap::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

}  // namespace icebot
