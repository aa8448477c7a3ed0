#pragma once

#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace pathonet {

enum class CellClass : int { immunopositive = 0, immunonegative = 1, lymphocyte = 2 };

inline const char* to_string(CellClass c) {
    switch (c) {
        case CellClass::immunopositive: return "immunopositive";
        case CellClass::immunonegative: return "immunonegative";
        case CellClass::lymphocyte: return "lymphocyte";
    }
    throw std::invalid_argument("annotations: bad class value");
}

inline CellClass parse_cell_class(const std::string& s) {
    if (s == "immunopositive") return CellClass::immunopositive;
    if (s == "immunonegative") return CellClass::immunonegative;
    if (s == "lymphocyte") return CellClass::lymphocyte;
    throw std::runtime_error("annotations: unknown class \"" + s + "\"");
}

// One annotated or detected cell center. x is the column, y the row, origin
// top-left. score is present on detector output only.
struct CellAnnotation {
    int x = 0;
    int y = 0;
    CellClass cls = CellClass::immunopositive;
    std::optional<float> score;
};

// Text format: one record per line, "x y class" with an optional trailing
// score. Blank lines and #-comments are ignored.
inline std::vector<CellAnnotation> parse_annotations(std::istream& is, const std::string& origin) {
    std::vector<CellAnnotation> out;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream ls(line);
        CellAnnotation a;
        std::string cls;
        if (!(ls >> a.x >> a.y >> cls))
            throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": expected \"x y class\"");
        try {
            a.cls = parse_cell_class(cls);
        } catch (const std::runtime_error& e) {
            throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": " + e.what());
        }
        float score;
        if (ls >> score) a.score = score;
        std::string rest;
        if (ls >> rest)
            throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": trailing content \"" + rest + "\"");
        out.push_back(a);
    }
    return out;
}

inline std::vector<CellAnnotation> read_annotations(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("annotations: cannot open " + path);
    return parse_annotations(is, path);
}

inline void write_annotations(std::ostream& os, const std::vector<CellAnnotation>& anns) {
    for (const auto& a : anns) {
        os << a.x << " " << a.y << " " << to_string(a.cls);
        if (a.score) os << " " << *a.score;
        os << "\n";
    }
}

inline void write_annotations(const std::string& path, const std::vector<CellAnnotation>& anns) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("annotations: cannot write " + path);
    write_annotations(os, anns);
    os.flush();
    if (!os) throw std::runtime_error("annotations: write failed for " + path);
}

}  // namespace pathonet
