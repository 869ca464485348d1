#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "vemfeti/error.hpp"
#include "vemfeti/mesh.hpp"

namespace vemfeti::mesh {

namespace {

/// Yields whitespace-separated tokens of significant lines, tracking line numbers.
class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  /// Next non-empty, non-comment line split into tokens; false at EOF.
  bool next(std::vector<std::string_view>& tokens) {
    while (std::getline(in_, buffer_)) {
      ++line_;
      if (const auto hash = buffer_.find('#'); hash != std::string::npos) buffer_.erase(hash);
      tokens.clear();
      std::string_view rest(buffer_);
      while (!rest.empty()) {
        const auto start = rest.find_first_not_of(" \t\r");
        if (start == std::string_view::npos) break;
        rest.remove_prefix(start);
        const auto stop = rest.find_first_of(" \t\r");
        tokens.push_back(rest.substr(0, stop));
        if (stop == std::string_view::npos) break;
        rest.remove_prefix(stop);
      }
      if (!tokens.empty()) return true;
    }
    return false;
  }

  int line() const { return line_; }

 private:
  std::istream& in_;
  std::string buffer_;
  int line_ = 0;
};

template <class T>
T parse_number(std::string_view token, int line) {
  T value{};
  const char* first = token.data();
  if (!token.empty() && token.front() == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size())
    throw ParseError(line, "invalid number '" + std::string(token) + "'");
  return value;
}

void expect_count(const std::vector<std::string_view>& tokens, std::size_t n, int line, const char* what) {
  if (tokens.size() != n)
    throw ParseError(line, std::string(what) + ": expected " + std::to_string(n) + " fields, got " +
                               std::to_string(tokens.size()));
}

}  // namespace

PolyMesh parse_polymesh(std::istream& in) {
  LineReader reader(in);
  std::vector<std::string_view> tok;
  auto require = [&](const char* what) {
    if (!reader.next(tok)) throw ParseError(reader.line() + 1, std::string("unexpected end of file, expected ") + what);
  };

  require("header");
  if (tok.size() != 2 || tok[0] != "poly3d" || tok[1] != "1") throw ParseError(reader.line(), "expected 'poly3d 1'");
  require("counts");
  expect_count(tok, 3, reader.line(), "counts");
  const long nv = parse_number<long>(tok[0], reader.line());
  const long nf = parse_number<long>(tok[1], reader.line());
  const long nc = parse_number<long>(tok[2], reader.line());
  if (nv < 0 || nf < 0 || nc < 0) throw ParseError(reader.line(), "negative count");

  PolyMesh mesh;
  mesh.vertices.reserve(nv);
  for (long v = 0; v < nv; ++v) {
    require("vertex");
    expect_count(tok, 3, reader.line(), "vertex");
    mesh.vertices.emplace_back(parse_number<double>(tok[0], reader.line()), parse_number<double>(tok[1], reader.line()),
                               parse_number<double>(tok[2], reader.line()));
  }
  for (long f = 0; f < nf; ++f) {
    require("face");
    const long k = parse_number<long>(tok[0], reader.line());
    if (k < 3) throw ParseError(reader.line(), "face needs at least 3 vertices");
    expect_count(tok, static_cast<std::size_t>(k) + 1, reader.line(), "face");
    std::vector<int> loop;
    for (long i = 1; i <= k; ++i) {
      const int v = parse_number<int>(tok[i], reader.line());
      if (v < 0 || v >= nv) throw ParseError(reader.line(), "vertex index " + std::to_string(v) + " out of range");
      loop.push_back(v);
    }
    mesh.faces.push_back(std::move(loop));
  }
  for (long c = 0; c < nc; ++c) {
    require("cell");
    const long m = parse_number<long>(tok[0], reader.line());
    if (m < 4) throw ParseError(reader.line(), "cell needs at least 4 faces");
    expect_count(tok, static_cast<std::size_t>(m) + 1, reader.line(), "cell");
    std::vector<CellFace> cell;
    for (long i = 1; i <= m; ++i) {
      const long s = parse_number<long>(tok[i], reader.line());
      const long f = s < 0 ? -s : s;
      if (f < 1 || f > nf) throw ParseError(reader.line(), "face index " + std::to_string(s) + " out of range");
      cell.push_back({static_cast<int>(f - 1), s > 0});
    }
    mesh.cells.push_back(std::move(cell));
  }
  if (reader.next(tok)) throw ParseError(reader.line(), "trailing content after last cell");

  const auto counts = mesh.face_cell_counts();
  mesh.on_boundary.assign(mesh.vertices.size(), 0);
  for (std::size_t f = 0; f < mesh.faces.size(); ++f)
    if (counts[f] == 1)
      for (int v : mesh.faces[f]) mesh.on_boundary[v] = 1;
  validate(mesh);
  return mesh;
}

PolyMesh read_polymesh(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MeshError("cannot open mesh file " + path.string());
  return parse_polymesh(in);
}

void write_polymesh(const PolyMesh& mesh, std::ostream& out) {
  auto num = [](double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
  };
  out << "poly3d 1\n" << mesh.num_vertices() << ' ' << mesh.num_faces() << ' ' << mesh.num_cells() << '\n';
  for (const auto& p : mesh.vertices) out << num(p.x()) << ' ' << num(p.y()) << ' ' << num(p.z()) << '\n';
  for (const auto& loop : mesh.faces) {
    out << loop.size();
    for (int v : loop) out << ' ' << v;
    out << '\n';
  }
  for (const auto& cell : mesh.cells) {
    out << cell.size();
    for (const auto& cf : cell) out << ' ' << (cf.outward ? "" : "-") << cf.face + 1;
    out << '\n';
  }
}

void write_polymesh(const PolyMesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write mesh file " + path.string());
  write_polymesh(mesh, out);
  if (!out) throw Error("write failed for " + path.string());
}

}  // namespace vemfeti::mesh
