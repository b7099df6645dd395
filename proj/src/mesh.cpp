#include "thermodamage/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace thermodamage {

// ==== helpers ===============================================================

Side side_from_string(const std::string& s) {
    if (s == "left") return Side::Left;
    if (s == "right") return Side::Right;
    if (s == "bottom") return Side::Bottom;
    if (s == "top") return Side::Top;
    throw ConfigError("unknown side '" + s + "' (expected left|right|bottom|top)");
}

std::string side_to_string(Side s) {
    switch (s) {
        case Side::Left: return "left";
        case Side::Right: return "right";
        case Side::Bottom: return "bottom";
        case Side::Top: return "top";
    }
    return "?";
}

static double signed_area(const Vec2& p0, const Vec2& p1, const Vec2& p2) {
    return 0.5 * ((p1.x() - p0.x()) * (p2.y() - p0.y()) -
                  (p2.x() - p0.x()) * (p1.y() - p0.y()));
}

double Mesh2D::total_area() const {
    double s = 0.0;
    for (double a : area) s += a;
    return s;
}

// ==== validation and derived data ===========================================

int Mesh2D::finalize(bool repair_orientation) {
    const int nn = n_nodes();
    const int nt = n_triangles();
    if (nn < 3) throw ValidationError("mesh has fewer than 3 nodes");
    if (nt < 1) throw ValidationError("mesh has no triangles");

    // duplicate nodes
    {
        std::vector<int> order(nn);
        for (int i = 0; i < nn; ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            if (nodes[a].x() != nodes[b].x()) return nodes[a].x() < nodes[b].x();
            return nodes[a].y() < nodes[b].y();
        });
        for (int i = 0; i + 1 < nn; ++i) {
            const Vec2& p = nodes[order[i]];
            const Vec2& q = nodes[order[i + 1]];
            if ((p - q).norm() < 1e-14)
                throw ValidationError("duplicate nodes " + std::to_string(order[i]) +
                                      " and " + std::to_string(order[i + 1]));
        }
    }

    int repairs = 0;
    area.assign(nt, 0.0);
    grad.assign(nt, {Vec2::Zero(), Vec2::Zero(), Vec2::Zero()});

    for (int t = 0; t < nt; ++t) {
        auto& tri = triangles[t];
        for (int v : tri)
            if (v < 0 || v >= nn)
                throw ValidationError("triangle " + std::to_string(t) +
                                      " references node " + std::to_string(v) +
                                      " out of range");
        if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2])
            throw ValidationError("triangle " + std::to_string(t) + " has repeated nodes");

        double a = signed_area(nodes[tri[0]], nodes[tri[1]], nodes[tri[2]]);
        if (a < 0.0) {
            if (repair_orientation) {
                std::swap(tri[1], tri[2]);
                a = -a;
                ++repairs;
            } else {
                throw ValidationError("triangle " + std::to_string(t) +
                                      " is clockwise (signed area " + std::to_string(a) + ")");
            }
        }
        if (!(a > 0.0))
            throw ValidationError("triangle " + std::to_string(t) + " is degenerate");
        area[t] = a;

        // hat gradients: grad lambda_i = perp(p_{i+2} - p_{i+1}) / (2A)
        for (int i = 0; i < 3; ++i) {
            const Vec2& pj = nodes[tri[(i + 1) % 3]];
            const Vec2& pk = nodes[tri[(i + 2) % 3]];
            grad[t][i] = Vec2(pj.y() - pk.y(), pk.x() - pj.x()) / (2.0 * a);
        }
    }

    // edge -> (count, owning triangle, opposite vertex)
    struct EdgeInfo { int count = 0; int tri = -1; int opp = -1; };
    std::map<std::pair<int, int>, EdgeInfo> edges;
    for (int t = 0; t < nt; ++t) {
        const auto& tri = triangles[t];
        for (int i = 0; i < 3; ++i) {
            int a = tri[i], b = tri[(i + 1) % 3], opp = tri[(i + 2) % 3];
            auto key = std::minmax(a, b);
            auto& e = edges[{key.first, key.second}];
            ++e.count;
            e.tri = t;
            e.opp = opp;
            if (e.count > 2)
                throw ValidationError("edge (" + std::to_string(a) + "," +
                                      std::to_string(b) + ") shared by more than two triangles");
        }
    }

    // declared boundary must match the topological boundary exactly
    std::map<std::pair<int, int>, int> declared;
    for (size_t i = 0; i < boundary.size(); ++i) {
        BoundaryEdge& be = boundary[i];
        if (be.a < 0 || be.a >= nn || be.b < 0 || be.b >= nn || be.a == be.b)
            throw ValidationError("boundary edge " + std::to_string(i) + " is malformed");
        auto key = std::minmax(be.a, be.b);
        auto it = edges.find({key.first, key.second});
        if (it == edges.end() || it->second.count != 1)
            throw ValidationError("boundary edge (" + std::to_string(be.a) + "," +
                                  std::to_string(be.b) + ") is not a boundary edge of the triangulation");
        if (declared.count({key.first, key.second}))
            throw ValidationError("boundary edge (" + std::to_string(be.a) + "," +
                                  std::to_string(be.b) + ") declared twice");
        declared[{key.first, key.second}] = static_cast<int>(i);

        // outward normal: perpendicular of the edge pointing away from the
        // opposite vertex of the unique owning triangle
        const Vec2& pa = nodes[be.a];
        const Vec2& pb = nodes[be.b];
        Vec2 tang = pb - pa;
        be.length = tang.norm();
        if (!(be.length > 0.0))
            throw ValidationError("boundary edge " + std::to_string(i) + " has zero length");
        Vec2 n(tang.y(), -tang.x());
        n /= be.length;
        const Vec2& opp = nodes[edges[{key.first, key.second}].opp];
        if (n.dot(opp - pa) > 0.0) n = -n;
        be.normal = n;
    }
    for (const auto& [key, info] : edges) {
        if (info.count == 1 && !declared.count(key))
            throw ValidationError("missing boundary declaration for edge (" +
                                  std::to_string(key.first) + "," +
                                  std::to_string(key.second) + ")");
    }

    return repairs;
}

// ==== generators ============================================================

Mesh2D generate_unit_square(int n, const std::set<Side>& dirichlet_sides) {
    if (n < 1) throw ConfigError("unit-square subdivision must be >= 1");
    Mesh2D m;
    const int np = n + 1;
    const double h = 1.0 / n;
    m.nodes.reserve(static_cast<size_t>(np) * np);
    for (int j = 0; j < np; ++j)
        for (int i = 0; i < np; ++i)
            m.nodes.emplace_back(i * h, j * h);

    auto id = [np](int i, int j) { return j * np + i; };
    m.triangles.reserve(static_cast<size_t>(2) * n * n);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            int v00 = id(i, j), v10 = id(i + 1, j);
            int v01 = id(i, j + 1), v11 = id(i + 1, j + 1);
            m.triangles.push_back({v00, v10, v11});
            m.triangles.push_back({v00, v11, v01});
        }
    }

    auto label = [&](Side s) {
        return dirichlet_sides.count(s) ? BoundaryLabel::Dirichlet : BoundaryLabel::Neumann;
    };
    for (int i = 0; i < n; ++i) {  // bottom, top
        BoundaryEdge b;
        b.a = id(i, 0); b.b = id(i + 1, 0);
        b.label = label(Side::Bottom); b.side = static_cast<int>(Side::Bottom);
        m.boundary.push_back(b);
        BoundaryEdge t;
        t.a = id(i, n); t.b = id(i + 1, n);
        t.label = label(Side::Top); t.side = static_cast<int>(Side::Top);
        m.boundary.push_back(t);
    }
    for (int j = 0; j < n; ++j) {  // left, right
        BoundaryEdge l;
        l.a = id(0, j); l.b = id(0, j + 1);
        l.label = label(Side::Left); l.side = static_cast<int>(Side::Left);
        m.boundary.push_back(l);
        BoundaryEdge r;
        r.a = id(n, j); r.b = id(n, j + 1);
        r.label = label(Side::Right); r.side = static_cast<int>(Side::Right);
        m.boundary.push_back(r);
    }

    m.finalize();
    return m;
}

// ==== text format ===========================================================

namespace {

// strips comments and skips blank lines; returns false at EOF
bool next_content_line(std::istream& in, std::string& line, int& lineno) {
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto not_ws = line.find_first_not_of(" \t\r\n");
        if (not_ws == std::string::npos) continue;
        return true;
    }
    return false;
}

[[noreturn]] void parse_fail(const std::string& path, int lineno, const std::string& what) {
    throw IoError(path + ":" + std::to_string(lineno) + ": " + what);
}

} // namespace

Mesh2D load_mesh(const std::string& path, bool repair_orientation, int* repairs_out) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open mesh file '" + path + "'");

    Mesh2D m;
    std::string line;
    int lineno = 0;

    auto expect_header = [&](const char* word) -> long {
        if (!next_content_line(in, line, lineno))
            parse_fail(path, lineno, std::string("expected '") + word + " <count>'");
        std::istringstream ss(line);
        std::string key;
        long count = -1;
        if (!(ss >> key >> count) || key != word || count < 0)
            parse_fail(path, lineno, std::string("expected '") + word + " <count>', got '" + line + "'");
        return count;
    };

    const long nn = expect_header("NODES");
    for (long i = 0; i < nn; ++i) {
        if (!next_content_line(in, line, lineno))
            parse_fail(path, lineno, "unexpected end of file in NODES section");
        std::istringstream ss(line);
        double x, y;
        if (!(ss >> x >> y))
            parse_fail(path, lineno, "malformed node line '" + line + "'");
        m.nodes.emplace_back(x, y);
    }

    const long nt = expect_header("TRIANGLES");
    for (long i = 0; i < nt; ++i) {
        if (!next_content_line(in, line, lineno))
            parse_fail(path, lineno, "unexpected end of file in TRIANGLES section");
        std::istringstream ss(line);
        long a, b, c;
        if (!(ss >> a >> b >> c))
            parse_fail(path, lineno, "malformed triangle line '" + line + "'");
        m.triangles.push_back({static_cast<int>(a), static_cast<int>(b), static_cast<int>(c)});
    }

    const long nb = expect_header("BOUNDARY");
    for (long i = 0; i < nb; ++i) {
        if (!next_content_line(in, line, lineno))
            parse_fail(path, lineno, "unexpected end of file in BOUNDARY section");
        std::istringstream ss(line);
        long a, b;
        std::string lab;
        if (!(ss >> a >> b >> lab))
            parse_fail(path, lineno, "malformed boundary line '" + line + "' (need 'a b LABEL')");
        BoundaryEdge be;
        be.a = static_cast<int>(a);
        be.b = static_cast<int>(b);
        if (lab == "DIRICHLET") be.label = BoundaryLabel::Dirichlet;
        else if (lab == "NEUMANN") be.label = BoundaryLabel::Neumann;
        else parse_fail(path, lineno, "unknown boundary label '" + lab + "'");
        m.boundary.push_back(be);
    }
    if (next_content_line(in, line, lineno))
        parse_fail(path, lineno, "trailing content '" + line + "'");

    int repairs = m.finalize(repair_orientation);
    if (repairs > 0)
        std::cerr << "warning: " << path << ": repaired orientation of " << repairs
                  << " clockwise triangle(s)\n";
    if (repairs_out) *repairs_out = repairs;
    return m;
}

void save_mesh(const Mesh2D& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write mesh file '" + path + "'");
    out.precision(17);
    out << "NODES " << m.n_nodes() << "\n";
    for (const auto& p : m.nodes) out << p.x() << " " << p.y() << "\n";
    out << "TRIANGLES " << m.n_triangles() << "\n";
    for (const auto& t : m.triangles) out << t[0] << " " << t[1] << " " << t[2] << "\n";
    out << "BOUNDARY " << m.boundary.size() << "\n";
    for (const auto& b : m.boundary)
        out << b.a << " " << b.b << " "
            << (b.label == BoundaryLabel::Dirichlet ? "DIRICHLET" : "NEUMANN") << "\n";
    if (!out) throw IoError("failed writing mesh file '" + path + "'");
}

// ==== dof map ===============================================================

DofMap::DofMap(const Mesh2D& mesh) {
    n_nodes = mesh.n_nodes();
    n_full = 2 * n_nodes;
    node_constrained.assign(n_nodes, false);
    for (const auto& be : mesh.boundary) {
        if (be.label == BoundaryLabel::Dirichlet) {
            node_constrained[be.a] = true;
            node_constrained[be.b] = true;
        }
    }
    full_to_free.assign(n_full, -1);
    free_to_full.clear();
    for (int i = 0; i < n_nodes; ++i) {
        if (node_constrained[i]) continue;
        for (int c = 0; c < 2; ++c) {
            full_to_free[2 * i + c] = static_cast<int>(free_to_full.size());
            free_to_full.push_back(2 * i + c);
        }
    }
    n_free = static_cast<int>(free_to_full.size());
}

Vec DofMap::expand(const Vec& free_vec) const {
    Vec full = Vec::Zero(n_full);
    for (int f = 0; f < n_free; ++f) full[free_to_full[f]] = free_vec[f];
    return full;
}

Vec DofMap::restrict_free(const Vec& full_vec) const {
    Vec free_vec(n_free);
    for (int f = 0; f < n_free; ++f) free_vec[f] = full_vec[free_to_full[f]];
    return free_vec;
}

} // namespace thermodamage
