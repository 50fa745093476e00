#include "randfact/matrix_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

namespace randfact {

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::string extension_of(const std::string& path) {
    const auto dot = path.find_last_of('.');
    const auto sep = path.find_last_of('/');
    if (dot == std::string::npos || (sep != std::string::npos && dot < sep)) return "";
    return lower(path.substr(dot));
}

// Token cursor over a text file. Tracks the line number so every parse
// failure can say where it happened.
struct Cursor {
    std::istream& in;
    std::string path;
    std::string line;
    std::size_t pos = 0;
    long line_no = 0;
    bool skip_comments = false;

    explicit Cursor(std::istream& s, std::string p) : in(s), path(std::move(p)) {}

    [[noreturn]] void fail(const std::string& what) const {
        std::ostringstream os;
        os << path << ":" << line_no << ": " << what;
        throw ParseError(os.str());
    }

    bool next_line() {
        while (std::getline(in, line)) {
            ++line_no;
            pos = 0;
            if (skip_comments && !line.empty() && line[0] == '%') continue;
            if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
            return true;
        }
        return false;
    }

    // Next whitespace-separated token, crossing line boundaries.
    bool next_token(std::string& tok) {
        for (;;) {
            while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
            if (pos < line.size()) break;
            if (!next_line()) return false;
        }
        const std::size_t start = pos;
        while (pos < line.size() && !std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
        tok = line.substr(start, pos - start);
        return true;
    }

    double need_value(const char* what) {
        std::string tok;
        if (!next_token(tok)) fail(std::string("unexpected end of file, expected ") + what);
        const char* s = tok.c_str();
        char* end = nullptr;
        const double v = std::strtod(s, &end);
        if (end != s + tok.size()) fail("bad " + std::string(what) + " '" + tok + "'");
        if (!std::isfinite(v)) fail(std::string(what) + " '" + tok + "' is not finite");
        return v;
    }

    idx need_index(const char* what) {
        std::string tok;
        if (!next_token(tok)) fail(std::string("unexpected end of file, expected ") + what);
        const char* s = tok.c_str();
        char* end = nullptr;
        const long long v = std::strtoll(s, &end, 10);
        if (end != s + tok.size() || v < 0) fail("bad " + std::string(what) + " '" + tok + "'");
        return static_cast<idx>(v);
    }
};

DenseMatrix read_matrix_market(std::istream& in, const std::string& path) {
    Cursor cur(in, path);
    if (!cur.next_line()) cur.fail("empty file");
    std::istringstream header(cur.line);
    std::string banner, object, format, field, symmetry;
    header >> banner >> object >> format >> field >> symmetry;
    if (lower(banner) != "%%matrixmarket") cur.fail("missing %%MatrixMarket banner");
    if (lower(object) != "matrix") cur.fail("unsupported object '" + object + "'");
    format = lower(format);
    field = lower(field);
    symmetry = lower(symmetry);
    if (format != "array" && format != "coordinate") cur.fail("unsupported format '" + format + "'");
    if (field == "complex") cur.fail("complex matrices are not supported");
    if (field != "real" && field != "integer" && field != "pattern")
        cur.fail("unsupported field '" + field + "'");
    if (symmetry == "hermitian" || symmetry == "skew-symmetric")
        cur.fail("unsupported symmetry '" + symmetry + "'");
    if (symmetry != "general" && symmetry != "symmetric")
        cur.fail("unsupported symmetry '" + symmetry + "'");
    if (format == "array" && field == "pattern")
        cur.fail("array format cannot carry a pattern field");

    cur.pos = cur.line.size(); // header fully consumed
    cur.skip_comments = true;
    const bool symmetric = symmetry == "symmetric";

    const idx m = cur.need_index("row count");
    const idx n = cur.need_index("column count");
    if (m <= 0 || n <= 0) cur.fail("matrix dimensions must be positive");
    if (symmetric && m != n) cur.fail("symmetric storage requires a square matrix");
    DenseMatrix a(m, n);

    if (format == "array") {
        // Column-major; symmetric storage keeps only the lower triangle.
        for (idx j = 0; j < n; ++j) {
            for (idx i = symmetric ? j : 0; i < m; ++i) {
                const double v = cur.need_value("matrix entry");
                a(i, j) = v;
                if (symmetric && i != j) a(j, i) = v;
            }
        }
    } else {
        const idx nnz = cur.need_index("entry count");
        for (idx e = 0; e < nnz; ++e) {
            const idx i = cur.need_index("row index") - 1;
            const idx j = cur.need_index("column index") - 1;
            if (i < 0 || i >= m || j < 0 || j >= n) cur.fail("entry index out of range");
            const double v = field == "pattern" ? 1.0 : cur.need_value("matrix entry");
            a(i, j) += v;
            if (symmetric && i != j) a(j, i) += v;
        }
    }
    std::string extra;
    if (cur.next_token(extra)) cur.fail("trailing content '" + extra + "' after matrix data");
    return a;
}

DenseMatrix read_csv(std::istream& in, const std::string& path) {
    Cursor cur(in, path);
    std::vector<std::vector<double>> rows;
    while (cur.next_line()) {
        std::vector<double> row;
        std::size_t start = 0;
        const std::string& s = cur.line;
        for (;;) {
            std::size_t comma = s.find(',', start);
            std::string cell = s.substr(start, comma == std::string::npos ? comma : comma - start);
            const auto a = cell.find_first_not_of(" \t\r");
            if (a == std::string::npos) cur.fail("empty cell");
            const auto b = cell.find_last_not_of(" \t\r");
            cell = cell.substr(a, b - a + 1);
            const char* cs = cell.c_str();
            char* end = nullptr;
            const double v = std::strtod(cs, &end);
            if (end != cs + cell.size()) cur.fail("bad value '" + cell + "'");
            if (!std::isfinite(v)) cur.fail("value '" + cell + "' is not finite");
            row.push_back(v);
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (!rows.empty() && row.size() != rows.front().size())
            cur.fail("row has " + std::to_string(row.size()) + " cells, expected " +
                     std::to_string(rows.front().size()));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError(path + ": no data rows");
    DenseMatrix a(static_cast<idx>(rows.size()), static_cast<idx>(rows.front().size()));
    for (idx i = 0; i < a.rows; ++i)
        for (idx j = 0; j < a.cols; ++j) a(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    return a;
}

std::string format_value(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void require_finite(const DenseMatrix& a, const std::string& path) {
    for (idx j = 0; j < a.cols; ++j)
        for (idx i = 0; i < a.rows; ++i)
            if (!std::isfinite(a(i, j)))
                throw NumericalError("refusing to write non-finite entry at (" + std::to_string(i) +
                                     ", " + std::to_string(j) + ") to " + path);
}

// Writes land in a sibling temp file first; rename is atomic on POSIX, so a
// concurrent reader sees either the old file or the complete new one.
void commit_text(const std::string& path, const std::string& body) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ParseError("cannot open '" + tmp + "' for writing");
        out << body;
        out.flush();
        if (!out) throw ParseError("write to '" + tmp + "' failed");
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        std::remove(tmp.c_str());
        throw ParseError("cannot move '" + tmp + "' into place at '" + path + "'");
    }
}

} // namespace

DenseMatrix read_matrix(const std::string& path) {
    const std::string ext = extension_of(path);
    if (ext != ".mtx" && ext != ".mm" && ext != ".csv")
        throw ParameterError("unknown matrix file extension '" + ext + "' in '" + path + "'");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + path + "'");
    if (ext == ".csv") return read_csv(in, path);
    return read_matrix_market(in, path);
}

void write_matrix(const std::string& path, const DenseMatrix& a) {
    const std::string ext = extension_of(path);
    if (ext != ".mtx" && ext != ".mm" && ext != ".csv")
        throw ParameterError("unknown matrix file extension '" + ext + "' in '" + path + "'");
    if (a.rows <= 0 || a.cols <= 0) throw ParameterError("refusing to write an empty matrix");
    require_finite(a, path);
    std::ostringstream body;
    if (ext == ".csv") {
        for (idx i = 0; i < a.rows; ++i) {
            for (idx j = 0; j < a.cols; ++j) {
                if (j) body << ',';
                body << format_value(a(i, j));
            }
            body << '\n';
        }
    } else {
        body << "%%MatrixMarket matrix array real general\n";
        body << a.rows << ' ' << a.cols << '\n';
        for (idx j = 0; j < a.cols; ++j)
            for (idx i = 0; i < a.rows; ++i) body << format_value(a(i, j)) << '\n';
    }
    commit_text(path, body.str());
}

} // namespace randfact
