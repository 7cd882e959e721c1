#include "qsk/matrix_market.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "qsk/error.hpp"

namespace qsk {

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

bool blank_or_comment(const std::string& line) {
    for (char c : line) {
        if (c == '%') return true;
        if (!std::isspace(static_cast<unsigned char>(c))) return false;
    }
    return true;
}

double parse_value(const std::string& token, std::size_t line_no) {
    try {
        std::size_t used = 0;
        const double v = std::stod(token, &used);
        if (used != token.size()) throw std::invalid_argument(token);
        return v;
    } catch (const std::exception&) {
        throw Error(ErrorCode::ParseError, "bad numeric value '" + token + "'", line_no);
    }
}

std::size_t parse_index(const std::string& token, std::size_t line_no) {
    try {
        std::size_t used = 0;
        const long long v = std::stoll(token, &used);
        if (used != token.size() || v < 0) throw std::invalid_argument(token);
        return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
        throw Error(ErrorCode::ParseError, "bad integer '" + token + "'", line_no);
    }
}

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

DenseMatrix mm_parse(std::istream& in) {
    std::string line;
    std::size_t line_no = 1;
    if (!std::getline(in, line)) throw Error(ErrorCode::ParseError, "empty input", line_no);

    std::istringstream header(line);
    std::string banner, object, format, field, symmetry;
    header >> banner >> object >> format >> field >> symmetry;
    if (banner != "%%MatrixMarket" || lower(object) != "matrix" || symmetry.empty())
        throw Error(ErrorCode::ParseError, "malformed Matrix Market header", line_no);
    format = lower(format);
    field = lower(field);
    symmetry = lower(symmetry);
    if (format != "array" && format != "coordinate")
        throw Error(ErrorCode::ParseError, "unknown format '" + format + "'", line_no);
    if (field != "real" && field != "integer" && field != "double")
        throw Error(ErrorCode::UnsupportedField, "field '" + field + "'");
    if (symmetry != "general" && symmetry != "symmetric")
        throw Error(ErrorCode::UnsupportedField, "symmetry '" + symmetry + "'");
    const bool symmetric = symmetry == "symmetric";

    // size line
    do {
        ++line_no;
        if (!std::getline(in, line)) throw Error(ErrorCode::ParseError, "missing size line", line_no);
    } while (blank_or_comment(line));

    std::istringstream size_line(line);
    std::string t_rows, t_cols, t_nnz;
    size_line >> t_rows >> t_cols;
    if (t_cols.empty()) throw Error(ErrorCode::ParseError, "size line needs rows and cols", line_no);
    const std::size_t rows = parse_index(t_rows, line_no);
    const std::size_t cols = parse_index(t_cols, line_no);
    std::size_t nnz = 0;
    if (format == "coordinate") {
        size_line >> t_nnz;
        if (t_nnz.empty()) throw Error(ErrorCode::ParseError, "coordinate size line needs nnz", line_no);
        nnz = parse_index(t_nnz, line_no);
    }
    if (rows == 0 || cols == 0) throw Error(ErrorCode::ParseError, "empty matrix", line_no);
    if (symmetric && rows != cols)
        throw Error(ErrorCode::ParseError, "symmetric matrix must be square", line_no);

    Vector entries(rows * cols, 0.0);
    auto next_data_line = [&](std::string& out) {
        do {
            ++line_no;
            if (!std::getline(in, out)) return false;
        } while (blank_or_comment(out));
        return true;
    };

    if (format == "array") {
        // column-major; symmetric stores the lower triangle only
        for (std::size_t j = 0; j < cols; ++j) {
            for (std::size_t i = symmetric ? j : 0; i < rows; ++i) {
                if (!next_data_line(line))
                    throw Error(ErrorCode::ParseError, "too few array entries", line_no);
                std::istringstream ls(line);
                std::string tok;
                ls >> tok;
                const double v = parse_value(tok, line_no);
                entries[i * cols + j] = v;
                if (symmetric) entries[j * cols + i] = v;
            }
        }
    } else {
        for (std::size_t k = 0; k < nnz; ++k) {
            if (!next_data_line(line))
                throw Error(ErrorCode::ParseError, "too few coordinate entries", line_no);
            std::istringstream ls(line);
            std::string ti, tj, tv;
            ls >> ti >> tj >> tv;
            if (tv.empty()) throw Error(ErrorCode::ParseError, "coordinate entry needs i j v", line_no);
            const std::size_t i = parse_index(ti, line_no);
            const std::size_t j = parse_index(tj, line_no);
            if (i < 1 || i > rows || j < 1 || j > cols)
                throw Error(ErrorCode::ParseError, "coordinate index out of range", line_no);
            const double v = parse_value(tv, line_no);
            entries[(i - 1) * cols + (j - 1)] = v;
            if (symmetric) entries[(j - 1) * cols + (i - 1)] = v;
        }
    }
    try {
        return DenseMatrix(rows, cols, std::move(entries));
    } catch (const Error& e) {
        throw Error(ErrorCode::ParseError, e.what(), line_no);
    }
}

DenseMatrix mm_read(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    return mm_parse(in);
}

Vector mm_read_vector(const std::filesystem::path& path) {
    DenseMatrix m = mm_read(path);
    if (m.cols() != 1 && m.rows() != 1)
        throw Error(ErrorCode::DimensionMismatch, path.string() + " is not a vector");
    return Vector(m.data().begin(), m.data().end());
}

void mm_format(std::ostream& out, const DenseMatrix& a) {
    out << "%%MatrixMarket matrix array real general\n";
    out << a.rows() << ' ' << a.cols() << '\n';
    for (std::size_t j = 0; j < a.cols(); ++j)
        for (std::size_t i = 0; i < a.rows(); ++i) out << fmt17(a(i, j)) << '\n';
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
        out << contents;
        out.flush();
        if (!out) throw Error(ErrorCode::IoError, "write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw Error(ErrorCode::IoError, "cannot rename into " + path.string());
    }
}

void mm_write(const std::filesystem::path& path, const DenseMatrix& a) {
    std::ostringstream out;
    mm_format(out, a);
    write_file_atomic(path, out.str());
}

void mm_write(const std::filesystem::path& path, std::span<const double> v) {
    mm_write(path, DenseMatrix(v.size(), 1, Vector(v.begin(), v.end())));
}

} // namespace qsk
