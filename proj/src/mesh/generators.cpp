#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <set>

#include <Eigen/Geometry>

#include "mesh_builder.hpp"
#include "vemfeti/error.hpp"
#include "vemfeti/mesh.hpp"

namespace vemfeti::mesh {

namespace {

using I3 = std::array<long long, 3>;

/// Half-space n.x <= d with integer data.
struct IntPlane {
  I3 n;
  long long d;
};

long long dot(const I3& a, const I3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

long long det3(const I3& a, const I3& b, const I3& c) {
  return a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0]) +
         a[2] * (b[0] * c[1] - b[1] * c[0]);
}

/// Convex cell cut out by integer half-spaces. Vertices are returned as
/// integer keys in units of 1/key_denominator; every vertex of this lattice
/// family is representable, anything else is a logic error.
struct IntCell {
  std::vector<I3> vertices;
  std::vector<std::vector<int>> loops;  // outward, counter-clockwise
};

IntCell convex_cell(const std::vector<IntPlane>& planes, long long key_denominator) {
  IntCell cell;
  std::map<I3, int> index;
  const std::size_t m = planes.size();
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = a + 1; b < m; ++b)
      for (std::size_t c = b + 1; c < m; ++c) {
        const I3& na = planes[a].n;
        const I3& nb = planes[b].n;
        const I3& nc = planes[c].n;
        long long det = det3(na, nb, nc);
        if (det == 0) continue;
        const I3 d{planes[a].d, planes[b].d, planes[c].d};
        // Cramer's rule: x_i = det_i / det.
        I3 num{det3({d[0], na[1], na[2]}, {d[1], nb[1], nb[2]}, {d[2], nc[1], nc[2]}),
               det3({na[0], d[0], na[2]}, {nb[0], d[1], nb[2]}, {nc[0], d[2], nc[2]}),
               det3({na[0], na[1], d[0]}, {nb[0], nb[1], d[1]}, {nc[0], nc[1], d[2]})};
        if (det < 0) {
          det = -det;
          for (auto& x : num) x = -x;
        }
        bool feasible = true;
        for (const auto& p : planes)
          if (dot(p.n, num) > p.d * det) {
            feasible = false;
            break;
          }
        if (!feasible) continue;
        I3 key;
        for (int i = 0; i < 3; ++i) {
          if ((num[i] * key_denominator) % det != 0) throw std::logic_error("lattice vertex off the key grid");
          key[i] = num[i] * key_denominator / det;
        }
        if (index.emplace(key, static_cast<int>(cell.vertices.size())).second) cell.vertices.push_back(key);
      }

  for (const auto& p : planes) {
    std::vector<int> on;
    for (int v = 0; v < static_cast<int>(cell.vertices.size()); ++v)
      if (dot(p.n, cell.vertices[v]) == p.d * key_denominator) on.push_back(v);
    if (on.size() < 3) continue;
    // Order counter-clockwise about the outward normal p.n.
    const Vec3 n = Vec3(static_cast<double>(p.n[0]), static_cast<double>(p.n[1]), static_cast<double>(p.n[2])).normalized();
    Vec3 center = Vec3::Zero();
    auto as_vec = [&](int v) {
      return Vec3(static_cast<double>(cell.vertices[v][0]), static_cast<double>(cell.vertices[v][1]),
                  static_cast<double>(cell.vertices[v][2]));
    };
    for (int v : on) center += as_vec(v);
    center /= static_cast<double>(on.size());
    const Vec3 t1 = (as_vec(on[0]) - center).normalized();
    const Vec3 t2 = n.cross(t1);
    std::vector<std::pair<double, int>> angle;
    for (int v : on) {
      const Vec3 d = as_vec(v) - center;
      angle.emplace_back(std::atan2(d.dot(t2), d.dot(t1)), v);
    }
    std::sort(angle.begin(), angle.end());
    std::vector<int> loop;
    for (const auto& [t, v] : angle) loop.push_back(v);
    cell.loops.push_back(std::move(loop));
  }
  return cell;
}

/// Adds a cell to the builder, sharing vertices through their integer keys.
void add_int_cell(detail::MeshBuilder& builder, std::map<I3, int>& global, const IntCell& cell, double unit) {
  std::vector<int> ids(cell.vertices.size());
  for (std::size_t v = 0; v < cell.vertices.size(); ++v) {
    const I3& key = cell.vertices[v];
    auto it = global.find(key);
    if (it == global.end()) {
      const Vec3 p(static_cast<double>(key[0]) * unit, static_cast<double>(key[1]) * unit,
                   static_cast<double>(key[2]) * unit);
      it = global.emplace(key, builder.add_vertex(p)).first;
    }
    ids[v] = it->second;
  }
  std::vector<std::vector<int>> loops;
  for (const auto& loop : cell.loops) {
    std::vector<int> mapped;
    for (int v : loop) mapped.push_back(ids[v]);
    loops.push_back(std::move(mapped));
  }
  builder.add_cell(loops);
}

std::vector<IntPlane> box_planes(const I3& lo, const I3& hi) {
  std::vector<IntPlane> planes;
  for (int a = 0; a < 3; ++a) {
    I3 n{0, 0, 0};
    n[a] = -1;
    planes.push_back({n, -lo[a]});
    n[a] = 1;
    planes.push_back({n, hi[a]});
  }
  return planes;
}

}  // namespace

PolyMesh generate_cube_grid(int n) {
  if (n < 1) throw UsageError("cube grid needs n >= 1");
  detail::MeshBuilder builder;
  std::map<I3, int> global;
  for (long long k = 0; k < n; ++k)
    for (long long j = 0; j < n; ++j)
      for (long long i = 0; i < n; ++i)
        add_int_cell(builder, global, convex_cell(box_planes({i, j, k}, {i + 1, j + 1, k + 1}), 1),
                     1.0 / n);
  PolyMesh mesh = builder.finish(1e-12);
  validate(mesh);
  return mesh;
}

PolyMesh generate_truncated_octahedra(int n) {
  if (n < 1) throw UsageError("truncated octahedra need n >= 1");
  // Lattice in half-spacing units u = a/2 = 1/(4n): the cube is [0, 4n]^3,
  // lattice points sit at even coordinates and cube centres at odd ones.
  const long long side = 4LL * n;
  auto is_seed = [&](const I3& p) {
    for (long long x : p)
      if (x < 0 || x > side) return false;
    const bool odd = p[0] % 2 != 0;
    for (long long x : p)
      if ((x % 2 != 0) != odd) return false;
    if (odd) return true;
    for (long long x : p)
      if (x == 0 || x == side) return false;  // lattice points on the boundary are not seeds
    return true;
  };

  std::vector<I3> seeds;
  for (long long z = 0; z <= side; ++z)
    for (long long y = 0; y <= side; ++y)
      for (long long x = 0; x <= side; ++x)
        if (is_seed({x, y, z})) seeds.push_back({x, y, z});

  auto bisectors = [&](const I3& p, long long max_dist2) {
    std::vector<IntPlane> planes;
    const long long r = static_cast<long long>(std::floor(std::sqrt(static_cast<double>(max_dist2))));
    for (long long dz = -r; dz <= r; ++dz)
      for (long long dy = -r; dy <= r; ++dy)
        for (long long dx = -r; dx <= r; ++dx) {
          const long long d2 = dx * dx + dy * dy + dz * dz;
          if (d2 == 0 || d2 > max_dist2) continue;
          const I3 q{p[0] + dx, p[1] + dy, p[2] + dz};
          if (!is_seed(q)) continue;
          // |x-p|^2 <= |x-q|^2  <=>  2(q-p).x <= |q|^2 - |p|^2
          planes.push_back({{2 * dx, 2 * dy, 2 * dz}, dot(q, q) - dot(p, p)});
        }
    return planes;
  };

  detail::MeshBuilder builder;
  std::map<I3, int> global;
  const double unit = 1.0 / (2.0 * static_cast<double>(side));  // keys are in units of u/2
  for (const I3& p : seeds) {
    auto planes = box_planes({0, 0, 0}, {side, side, side});
    const auto near = bisectors(p, 8);
    planes.insert(planes.end(), near.begin(), near.end());
    const IntCell cell = convex_cell(planes, 2);
    // Seeds farther away must not cut the cell.
    for (const auto& far : bisectors(p, 16))
      for (const auto& v : cell.vertices)
        if (dot(far.n, v) > far.d * 2) throw std::logic_error("octahedra generator: neighbour shell too small");
    add_int_cell(builder, global, cell, unit);
  }
  PolyMesh mesh = builder.finish(1e-12);
  validate(mesh);
  return mesh;
}

}  // namespace vemfeti::mesh
