#pragma once

#include <array>
#include <string>
#include <vector>

#include "vemfeti/krylov.hpp"
#include "vemfeti/mesh.hpp"

namespace vemfeti::decomp {

using mesh::PolyMesh;

/// Primal constraint sets: vertices (cross points), edge averages, face averages.
enum class Variant { V, E, F, VE, VF, EF, VEF };

inline constexpr std::array<Variant, 7> kAllVariants = {Variant::V,  Variant::E,  Variant::F,  Variant::VE,
                                                        Variant::VF, Variant::EF, Variant::VEF};

std::string to_string(Variant v);
/// Throws UsageError for an unknown name.
Variant parse_variant(const std::string& name);
bool has_vertices(Variant v);
bool has_edges(Variant v);
bool has_faces(Variant v);

/// N^3 box subdomains of side 1/N, lexicographic index l = i + N (j + N k).
struct Partition {
  int N = 1;
  std::vector<int> cell_subdomain;
  std::vector<std::vector<int>> cells;
  /// Per subdomain: sorted global vertices that carry a dof (not on the Dirichlet boundary).
  std::vector<std::vector<int>> vertices;

  int num_subdomains() const { return N * N * N; }
  int index(int i, int j, int k) const { return i + N * (j + N * k); }
  std::array<int, 3> coords(int l) const { return {l % N, (l / N) % N, l / (N * N)}; }
};

/// Assigns cells by centroid; a cell not contained in its box raises MeshError.
Partition partition_box(const PolyMesh& mesh, int N);

enum class NodeKind : char { dirichlet, interior, face, edge, cross };

struct MacroFace {
  std::array<int, 2> subdomains{};
  int axis = 0;                 // normal direction
  std::vector<int> mesh_faces;  // faces f contained in F
  std::vector<int> nodes;       // open face nodes, ascending
};

struct MacroEdge {
  std::vector<int> subdomains;
  int axis = 0;              // direction of the edge
  std::vector<int> nodes;    // open edge nodes, ascending
  std::vector<int> closure;  // all vertices on the closed edge, ordered along it
};

struct InterfaceIndex {
  std::vector<NodeKind> kind;  // per vertex
  std::vector<int> entity;     // per vertex: macro face/edge id or cross-point ordinal, else -1
  std::vector<std::vector<int>> neighbours;  // N_i per vertex, empty off the interface
  std::vector<int> cross_points;
  std::vector<MacroEdge> edges;
  std::vector<MacroFace> faces;
};

/// Raises MeshError when a vertex's subdomain set disagrees with its position.
InterfaceIndex classify_interface(const PolyMesh& mesh, const Partition& partition);

struct PrimalConstraint {
  enum class Kind { vertex, edge, face };
  Kind kind = Kind::vertex;
  int entity = -1;  // cross-point ordinal, macro edge or macro face id
  std::vector<int> subdomains;
  /// Full functional over the closed entity (Dirichlet vertices included, carrying no dof).
  std::vector<int> nodes;
  std::vector<double> weights;
};

struct PrimalSpec {
  Variant variant = Variant::VE;
  std::vector<PrimalConstraint> constraints;
};

/// Throws UsageError when the variant yields no constraint (e.g. N = 1).
PrimalSpec primal_constraints(const PolyMesh& mesh, const InterfaceIndex& index, Variant variant);

/// d^{l,i} = rho_l^gamma / sum_{k in N_i} rho_k^gamma for each l in `neighbours`.
std::vector<double> scaling_coefficients(const std::vector<int>& neighbours, const std::vector<double>& rho,
                                         double gamma);

/// One copy of a dual node owned by a subdomain.
struct DualInstance {
  int subdomain = -1;
  int vertex = -1;
};

/// Fully redundant jump over dual instances, with its rho-scaled counterpart.
struct JumpOperator {
  krylov::CscMatrix B;   // multipliers x instances, entries +1 / -1
  krylov::CscMatrix BD;  // same pattern, +1 scaled by d of the other subdomain
  std::vector<double> d; // per instance
  int num_multipliers() const { return static_cast<int>(B.rows()); }
};

JumpOperator build_jump(const std::vector<DualInstance>& instances, const InterfaceIndex& index,
                        const std::vector<double>& rho, double gamma);

/// E_D over the instances: (E_D w)_{l,i} = sum_k d^{k,i} w_{k,i}.
krylov::CscMatrix averaging_operator(const std::vector<DualInstance>& instances, const std::vector<double>& d);

}  // namespace vemfeti::decomp
