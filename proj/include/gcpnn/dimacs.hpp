#pragma once

#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "gcpnn/error.hpp"
#include "gcpnn/graph.hpp"

namespace gcpnn {

/// Reads a DIMACS .col graph: `c` comments, one `p edge N M` line, then
/// `e u v` lines with 1-indexed endpoints. Repeated edges collapse into one.
inline Graph parse_dimacs(std::istream& in) {
    Graph g;
    bool have_problem = false;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag) || tag == "c" || tag[0] == 'c') continue;
        if (tag == "p") {
            if (have_problem) throw ParseError("duplicate problem line", lineno);
            std::string format;
            long long n = 0, m = 0;
            if (!(ls >> format >> n >> m) || (format != "edge" && format != "edges" && format != "col"))
                throw ParseError("malformed problem line, expected 'p edge N M': '" + line + "'", lineno);
            if (n < 1) throw ParseError("vertex count must be positive", lineno);
            g = Graph(static_cast<int>(n));
            have_problem = true;
        } else if (tag == "e") {
            if (!have_problem) throw ParseError("edge line before problem line", lineno);
            long long u = 0, v = 0;
            if (!(ls >> u >> v)) throw ParseError("malformed edge line: '" + line + "'", lineno);
            if (u < 1 || v < 1 || u > g.order() || v > g.order())
                throw ParseError("edge endpoint out of range 1.." + std::to_string(g.order()) + ": '" + line + "'",
                                 lineno);
            if (u == v) throw ParseError("self-loop on vertex " + std::to_string(u), lineno);
            g.add_edge(static_cast<Vertex>(u - 1), static_cast<Vertex>(v - 1));
        } else if (tag == "n" || tag == "x") {
            // vertex weights / extensions carry no colouring information
        } else {
            throw ParseError("unrecognised line type '" + tag + "'", lineno);
        }
    }
    if (!have_problem) throw ParseError("missing 'p edge N M' line", lineno);
    return g;
}

inline Graph parse_dimacs(const std::string& text) {
    std::istringstream in(text);
    return parse_dimacs(in);
}

inline void write_dimacs(std::ostream& out, const Graph& g, const std::string& comment = {}) {
    if (!comment.empty()) out << "c " << comment << '\n';
    out << "p edge " << g.order() << ' ' << g.size() << '\n';
    for (auto [u, v] : g.edges()) out << "e " << u + 1 << ' ' << v + 1 << '\n';
}

inline std::string write_dimacs(const Graph& g) {
    std::ostringstream out;
    write_dimacs(out, g);
    return out.str();
}

}  // namespace gcpnn
