#include "bvtomo/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <set>

#include "bvtomo/error.hpp"
#include "text_util.hpp"

namespace bvtomo {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double polar_angle(const Point2& p) {
  double a = std::atan2(p.y, p.x);
  if (a < 0.0) a += kTwoPi;
  if (a >= kTwoPi) a = 0.0;
  return a;
}

double dist(const Point2& a, const Point2& b) { return std::hypot(a.x - b.x, a.y - b.y); }

double tri_area(const Point2& a, const Point2& b, const Point2& c) {
  return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

std::vector<NodeTag> compute_tags(const std::vector<Point2>& nodes,
                                  const std::vector<int>& boundary_slot, double radius,
                                  double delta) {
  std::vector<NodeTag> tags(nodes.size(), NodeTag::Interior);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (boundary_slot[i] >= 0) {
      tags[i] = NodeTag::Boundary;
    } else if (radius - std::hypot(nodes[i].x, nodes[i].y) < delta) {
      tags[i] = NodeTag::DeltaZone;
    }
  }
  return tags;
}

}  // namespace

std::string_view to_string(NodeTag tag) {
  switch (tag) {
    case NodeTag::Interior: return "INTERIOR";
    case NodeTag::Boundary: return "BOUNDARY";
    case NodeTag::DeltaZone: return "DELTA_ZONE";
  }
  return "INTERIOR";
}

NodeTag node_tag_from_string(std::string_view s) {
  s = detail::trim(s);
  if (s == "INTERIOR") return NodeTag::Interior;
  if (s == "BOUNDARY") return NodeTag::Boundary;
  if (s == "DELTA_ZONE") return NodeTag::DeltaZone;
  fail(ErrorCode::Parse, "unknown node tag '" + std::string(s) + "'");
}

TriMesh TriMesh::from_parts(std::vector<Point2> nodes, std::vector<Triangle> triangles,
                            double radius) {
  const int n = static_cast<int>(nodes.size());
  if (n < 3) fail(ErrorCode::InvalidArgument, "mesh needs at least 3 nodes");
  if (triangles.empty()) fail(ErrorCode::InvalidArgument, "mesh has no triangles");
  for (const auto& p : nodes) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y))
      fail(ErrorCode::InvalidArgument, "non-finite node coordinate");
  }

  std::vector<char> used(nodes.size(), 0);
  for (std::size_t t = 0; t < triangles.size(); ++t) {
    auto& tri = triangles[t];
    for (int v : tri) {
      if (v < 0 || v >= n)
        fail(ErrorCode::InvalidArgument, "triangle " + std::to_string(t) + " references node " +
                                             std::to_string(v) + " out of range");
      used[static_cast<std::size_t>(v)] = 1;
    }
    if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2])
      fail(ErrorCode::InvalidArgument, "triangle " + std::to_string(t) + " repeats a vertex");
    const double a = tri_area(nodes[tri[0]], nodes[tri[1]], nodes[tri[2]]);
    if (a == 0.0) fail(ErrorCode::InvalidArgument, "triangle " + std::to_string(t) + " is degenerate");
    if (a < 0.0) std::swap(tri[1], tri[2]);
  }
  for (int i = 0; i < n; ++i) {
    if (!used[static_cast<std::size_t>(i)])
      fail(ErrorCode::InvalidArgument, "node " + std::to_string(i) + " belongs to no triangle");
  }

  // Directed edges that appear once (without their reverse) are boundary edges.
  std::map<std::pair<int, int>, int> directed;
  for (const auto& tri : triangles) {
    for (int k = 0; k < 3; ++k) {
      const int a = tri[k], b = tri[(k + 1) % 3];
      if (++directed[{a, b}] > 1)
        fail(ErrorCode::InvalidArgument, "non-manifold or inconsistently oriented edge");
    }
  }
  std::vector<int> next(nodes.size(), -1);
  std::size_t boundary_count = 0;
  for (const auto& [e, cnt] : directed) {
    if (directed.count({e.second, e.first})) continue;
    if (next[static_cast<std::size_t>(e.first)] != -1)
      fail(ErrorCode::InvalidArgument, "boundary is not a simple cycle");
    next[static_cast<std::size_t>(e.first)] = e.second;
    ++boundary_count;
  }
  if (boundary_count < 3) fail(ErrorCode::InvalidArgument, "mesh has no boundary cycle");

  TriMesh m;
  int start = -1;
  double best = kTwoPi + 1.0;
  for (int i = 0; i < n; ++i) {
    if (next[static_cast<std::size_t>(i)] < 0) continue;
    const double a = polar_angle(nodes[static_cast<std::size_t>(i)]);
    if (a < best) { best = a; start = i; }
  }
  int cur = start;
  do {
    m.boundary_nodes_.push_back(cur);
    const int nx = next[static_cast<std::size_t>(cur)];
    if (nx < 0) fail(ErrorCode::InvalidArgument, "boundary is not closed");
    m.boundary_edges_.push_back({cur, nx});
    cur = nx;
    if (m.boundary_nodes_.size() > boundary_count)
      fail(ErrorCode::InvalidArgument, "boundary is not a simple cycle");
  } while (cur != start);
  if (m.boundary_nodes_.size() != boundary_count)
    fail(ErrorCode::InvalidArgument, "boundary has more than one component");

  m.boundary_slot_.assign(nodes.size(), -1);
  for (std::size_t k = 0; k < m.boundary_nodes_.size(); ++k)
    m.boundary_slot_[static_cast<std::size_t>(m.boundary_nodes_[k])] = static_cast<int>(k);

  if (radius <= 0.0) {
    double sum = 0.0;
    for (int b : m.boundary_nodes_) sum += std::hypot(nodes[b].x, nodes[b].y);
    radius = sum / static_cast<double>(m.boundary_nodes_.size());
  }
  m.radius_ = radius;

  double h = 0.0;
  for (const auto& tri : triangles) {
    for (int k = 0; k < 3; ++k) h = std::max(h, dist(nodes[tri[k]], nodes[tri[(k + 1) % 3]]));
  }
  m.h_ = h;
  m.nodes_ = std::move(nodes);
  m.triangles_ = std::move(triangles);
  m.tags_ = compute_tags(m.nodes_, m.boundary_slot_, m.radius_, 0.0);
  return m;
}

double TriMesh::signed_area(std::size_t t) const {
  const auto& tri = triangles_[t];
  return tri_area(nodes_[tri[0]], nodes_[tri[1]], nodes_[tri[2]]);
}

double TriMesh::total_area() const {
  double s = 0.0;
  for (std::size_t t = 0; t < triangles_.size(); ++t) s += signed_area(t);
  return s;
}

Point2 TriMesh::centroid(std::size_t t) const {
  const auto& tri = triangles_[t];
  return {(nodes_[tri[0]].x + nodes_[tri[1]].x + nodes_[tri[2]].x) / 3.0,
          (nodes_[tri[0]].y + nodes_[tri[1]].y + nodes_[tri[2]].y) / 3.0};
}

double TriMesh::angle(int i) const { return polar_angle(node(i)); }

TriMesh TriMesh::with_delta_zone(double delta) const {
  if (!(delta >= 0.0)) fail(ErrorCode::InvalidArgument, "delta must be non-negative");
  TriMesh m = *this;
  m.delta_ = delta;
  m.tags_ = compute_tags(nodes_, boundary_slot_, radius_, delta);
  return m;
}

TriMesh tag_delta_zone(const TriMesh& mesh, double delta) { return mesh.with_delta_zone(delta); }

std::string TriMesh::content_hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= p[i];
      h *= 1099511628211ULL;
    }
  };
  for (const auto& p : nodes_) {
    mix(&p.x, sizeof p.x);
    mix(&p.y, sizeof p.y);
  }
  for (const auto& t : triangles_) {
    for (int v : t) {
      const auto v32 = static_cast<std::int32_t>(v);
      mix(&v32, sizeof v32);
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

TriMesh generate_disc_mesh(double radius, double target_h, std::span<const double> conform_radii) {
  if (!(radius > 0.0) || !std::isfinite(radius))
    fail(ErrorCode::InvalidArgument, "radius must be positive");
  if (!(target_h > 0.0) || !std::isfinite(target_h))
    fail(ErrorCode::InvalidArgument, "target_h must be positive");
  if (target_h >= radius) fail(ErrorCode::InvalidArgument, "target_h must be smaller than the radius");

  const double s = target_h / 2.0;
  std::set<double> breaks{0.0, radius};
  for (double r : conform_radii) {
    if (!(r > 0.0 && r < radius))
      fail(ErrorCode::InvalidArgument, "conforming radius must lie strictly inside the disc");
    breaks.insert(r);
  }
  std::vector<double> bps(breaks.begin(), breaks.end());
  std::vector<double> radii;
  for (std::size_t k = 0; k + 1 < bps.size(); ++k) {
    const double a = bps[k], b = bps[k + 1];
    const int cnt = std::max(1, static_cast<int>(std::ceil((b - a) / s - 1e-9)));
    for (int j = 1; j <= cnt; ++j) radii.push_back(j == cnt ? b : a + (b - a) * j / cnt);
  }

  std::vector<Point2> nodes{{0.0, 0.0}};
  std::vector<std::vector<int>> rings{{0}};
  for (double r : radii) {
    const int cnt = std::max(6, static_cast<int>(std::lround(kTwoPi * r / s)));
    std::vector<int> idx;
    idx.reserve(static_cast<std::size_t>(cnt));
    for (int k = 0; k < cnt; ++k) {
      const double t = kTwoPi * k / cnt;
      idx.push_back(static_cast<int>(nodes.size()));
      nodes.push_back({k == 0 ? r : r * std::cos(t), k == 0 ? 0.0 : r * std::sin(t)});
    }
    rings.push_back(std::move(idx));
  }
  std::vector<Triangle> tris;
  for (std::size_t k = 0; k + 1 < rings.size(); ++k) {
    const auto& a = rings[k];
    const auto& b = rings[k + 1];
    const int na = static_cast<int>(a.size()), nb = static_cast<int>(b.size());
    if (na == 1) {
      for (int j = 0; j < nb; ++j) tris.push_back({a[0], b[j], b[(j + 1) % nb]});
      continue;
    }
    // Advance along whichever ring has the smaller next mid-angle.
    int i = 0, j = 0;
    while (i < na || j < nb) {
      const double ta = i < na ? (i + 0.5) / na : 9.0;
      const double tb = j < nb ? (j + 0.5) / nb : 9.0;
      if (tb <= ta) {
        tris.push_back({a[i % na], b[j % nb], b[(j + 1) % nb]});
        ++j;
      } else {
        tris.push_back({a[i % na], b[j % nb], a[(i + 1) % na]});
        ++i;
      }
    }
  }
  return TriMesh::from_parts(std::move(nodes), std::move(tris), radius);
}

TriMesh load_triangle_format(std::string_view node_text, std::string_view ele_text) {
  auto content = [](std::string_view text) {
    std::vector<std::pair<std::size_t, std::vector<std::string_view>>> rows;
    for (const auto& line : detail::split_lines(text)) {
      auto body = line.text.substr(0, line.text.find('#'));
      auto tok = detail::split_ws(body);
      if (!tok.empty()) rows.emplace_back(line.number, std::move(tok));
    }
    return rows;
  };

  const auto nrows = content(node_text);
  if (nrows.empty()) fail(ErrorCode::Parse, ".node: missing header");
  long nv = 0, dim = 0, nattr = 0, nmark = 0;
  {
    const auto& [ln, tok] = nrows.front();
    if (tok.size() < 2 || !detail::parse_long(tok[0], nv) || !detail::parse_long(tok[1], dim))
      detail::parse_fail(".node", ln, "malformed header");
    if (tok.size() > 2 && !detail::parse_long(tok[2], nattr)) detail::parse_fail(".node", ln, "bad attribute count");
    if (tok.size() > 3 && !detail::parse_long(tok[3], nmark)) detail::parse_fail(".node", ln, "bad marker count");
    if (dim != 2) detail::parse_fail(".node", ln, "only 2D meshes are supported");
    if (nv < 3) detail::parse_fail(".node", ln, "need at least 3 vertices");
  }
  if (static_cast<long>(nrows.size()) - 1 < nv)
    fail(ErrorCode::Parse, ".node: expected " + std::to_string(nv) + " vertices, found " +
                               std::to_string(nrows.size() - 1));
  long base = 0;
  std::vector<Point2> nodes(static_cast<std::size_t>(nv));
  std::vector<char> seen(static_cast<std::size_t>(nv), 0);
  for (long k = 0; k < nv; ++k) {
    const auto& [ln, tok] = nrows[static_cast<std::size_t>(k + 1)];
    long id = 0;
    double x = 0.0, y = 0.0;
    if (tok.size() < static_cast<std::size_t>(3 + nattr + nmark))
      detail::parse_fail(".node", ln, "too few fields");
    if (!detail::parse_long(tok[0], id)) detail::parse_fail(".node", ln, "bad vertex index");
    if (!detail::parse_double(tok[1], x) || !detail::parse_double(tok[2], y))
      detail::parse_fail(".node", ln, "bad coordinate");
    if (k == 0) {
      if (id != 0 && id != 1) detail::parse_fail(".node", ln, "first vertex index must be 0 or 1");
      base = id;
    }
    const long slot = id - base;
    if (slot < 0 || slot >= nv) detail::parse_fail(".node", ln, "vertex index out of range");
    if (seen[static_cast<std::size_t>(slot)]) detail::parse_fail(".node", ln, "duplicate vertex index");
    seen[static_cast<std::size_t>(slot)] = 1;
    nodes[static_cast<std::size_t>(slot)] = {x, y};
  }

  const auto erows = content(ele_text);
  if (erows.empty()) fail(ErrorCode::Parse, ".ele: missing header");
  long ne = 0, per = 0;
  {
    const auto& [ln, tok] = erows.front();
    if (tok.size() < 2 || !detail::parse_long(tok[0], ne) || !detail::parse_long(tok[1], per))
      detail::parse_fail(".ele", ln, "malformed header");
    if (per != 3 && per != 6) detail::parse_fail(".ele", ln, "nodes per triangle must be 3 or 6");
    if (ne < 1) detail::parse_fail(".ele", ln, "need at least one triangle");
  }
  if (static_cast<long>(erows.size()) - 1 < ne)
    fail(ErrorCode::Parse, ".ele: expected " + std::to_string(ne) + " triangles, found " +
                               std::to_string(erows.size() - 1));
  std::vector<Triangle> tris;
  tris.reserve(static_cast<std::size_t>(ne));
  for (long k = 0; k < ne; ++k) {
    const auto& [ln, tok] = erows[static_cast<std::size_t>(k + 1)];
    if (tok.size() < static_cast<std::size_t>(1 + per)) detail::parse_fail(".ele", ln, "too few fields");
    Triangle t{};
    for (int j = 0; j < 3; ++j) {
      long v = 0;
      if (!detail::parse_long(tok[static_cast<std::size_t>(1 + j)], v))
        detail::parse_fail(".ele", ln, "bad vertex index");
      v -= base;
      if (v < 0 || v >= nv) detail::parse_fail(".ele", ln, "vertex index out of range");
      t[static_cast<std::size_t>(j)] = static_cast<int>(v);
    }
    tris.push_back(t);
  }
  return TriMesh::from_parts(std::move(nodes), std::move(tris));
}

std::string nodes_csv(const TriMesh& mesh) {
  std::string out = "id,x,y,tag\n";
  for (std::size_t i = 0; i < mesh.node_count(); ++i) {
    const auto& p = mesh.nodes()[i];
    out += std::to_string(i);
    out += ',';
    out += detail::format_double(p.x);
    out += ',';
    out += detail::format_double(p.y);
    out += ',';
    out += to_string(mesh.tags()[i]);
    out += '\n';
  }
  return out;
}

std::string elements_csv(const TriMesh& mesh) {
  std::string out = "id,n0,n1,n2\n";
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tri = mesh.triangles()[t];
    out += std::to_string(t) + ',' + std::to_string(tri[0]) + ',' + std::to_string(tri[1]) + ',' +
           std::to_string(tri[2]) + '\n';
  }
  return out;
}

TriMesh mesh_from_csv(std::string_view nodes_text, std::string_view elements_text) {
  auto rows = [](std::string_view text, std::string_view what, std::string_view header) {
    std::vector<std::pair<std::size_t, std::vector<std::string_view>>> out;
    bool saw_header = false;
    for (const auto& line : detail::split_lines(text)) {
      if (detail::trim(line.text).empty()) continue;
      auto cells = detail::split_char(line.text, ',');
      if (!saw_header) {
        saw_header = true;
        std::string joined;
        for (std::size_t k = 0; k < cells.size(); ++k) {
          if (k) joined += ',';
          joined += cells[k];
        }
        if (joined != header)
          detail::parse_fail(what, line.number, "expected header '" + std::string(header) + "'");
        continue;
      }
      out.emplace_back(line.number, std::move(cells));
    }
    if (!saw_header) fail(ErrorCode::Parse, std::string(what) + ": empty file");
    return out;
  };

  const auto nrows = rows(nodes_text, "nodes.csv", "id,x,y,tag");
  std::vector<Point2> nodes(nrows.size());
  std::vector<NodeTag> tags(nrows.size());
  for (std::size_t k = 0; k < nrows.size(); ++k) {
    const auto& [ln, c] = nrows[k];
    long id = 0;
    if (c.size() != 4) detail::parse_fail("nodes.csv", ln, "expected 4 fields");
    if (!detail::parse_long(c[0], id) || id != static_cast<long>(k))
      detail::parse_fail("nodes.csv", ln, "ids must be 0..n-1 in order");
    if (!detail::parse_double(c[1], nodes[k].x) || !detail::parse_double(c[2], nodes[k].y))
      detail::parse_fail("nodes.csv", ln, "bad coordinate");
    try {
      tags[k] = node_tag_from_string(c[3]);
    } catch (const Error& e) {
      detail::parse_fail("nodes.csv", ln, e.what());
    }
  }
  const auto erows = rows(elements_text, "elements.csv", "id,n0,n1,n2");
  std::vector<Triangle> tris(erows.size());
  for (std::size_t k = 0; k < erows.size(); ++k) {
    const auto& [ln, c] = erows[k];
    long id = 0;
    if (c.size() != 4) detail::parse_fail("elements.csv", ln, "expected 4 fields");
    if (!detail::parse_long(c[0], id) || id != static_cast<long>(k))
      detail::parse_fail("elements.csv", ln, "ids must be 0..m-1 in order");
    for (int j = 0; j < 3; ++j) {
      long v = 0;
      if (!detail::parse_long(c[static_cast<std::size_t>(1 + j)], v))
        detail::parse_fail("elements.csv", ln, "bad node index");
      tris[k][static_cast<std::size_t>(j)] = static_cast<int>(v);
    }
  }

  TriMesh m = TriMesh::from_parts(std::move(nodes), std::move(tris));
  double delta = 0.0;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (tags[i] == NodeTag::DeltaZone)
      delta = std::max(delta, m.radius_ - std::hypot(m.nodes_[i].x, m.nodes_[i].y));
  }
  m.tags_ = std::move(tags);
  m.delta_ = delta;
  return m;
}

}  // namespace bvtomo
