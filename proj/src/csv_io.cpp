#include "sparsequad/csv_io.hpp"

#include "sparsequad/errors.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>

namespace sparsequad {

namespace {

double parse_double(std::string_view tok, Index line) {
    while (!tok.empty() && (tok.front() == ' ' || tok.front() == '\t')) tok.remove_prefix(1);
    while (!tok.empty() && (tok.back() == ' ' || tok.back() == '\t' || tok.back() == '\r'))
        tok.remove_suffix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) {
        std::ostringstream os;
        os << "csv: cannot parse '" << tok << "' on line " << line;
        throw ValidationError(os.str());
    }
    return v;
}

}  // namespace

void write_matrix_csv(std::ostream& os, const Eigen::Ref<const Matrix>& m) {
    os << m.rows() << ',' << m.cols() << '\n';
    char buf[32];
    for (Index r = 0; r < m.rows(); ++r) {
        for (Index c = 0; c < m.cols(); ++c) {
            const auto res = std::to_chars(buf, buf + sizeof buf, m(r, c), std::chars_format::general, 17);
            if (c) os << ',';
            os.write(buf, res.ptr - buf);
        }
        os << '\n';
    }
}

void write_matrix_csv(const std::filesystem::path& path, const Eigen::Ref<const Matrix>& m) {
    std::ofstream os(path);
    if (!os) throw ValidationError("csv: cannot open " + path.string() + " for writing");
    write_matrix_csv(os, m);
}

Matrix read_matrix_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw ValidationError("csv: missing 'rows,cols' header");
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ValidationError("csv: header must be 'rows,cols'");
    const double rows_d = parse_double(std::string_view(line).substr(0, comma), 1);
    const double cols_d = parse_double(std::string_view(line).substr(comma + 1), 1);
    if (rows_d < 0 || cols_d < 0 || rows_d != static_cast<Index>(rows_d) || cols_d != static_cast<Index>(cols_d))
        throw ValidationError("csv: header dimensions must be non-negative integers");
    const auto rows = static_cast<Index>(rows_d);
    const auto cols = static_cast<Index>(cols_d);
    Matrix m(rows, cols);
    for (Index r = 0; r < rows; ++r) {
        if (!std::getline(is, line)) {
            std::ostringstream os;
            os << "csv: expected " << rows << " data rows, found " << r;
            throw ValidationError(os.str());
        }
        std::string_view rest(line);
        for (Index c = 0; c < cols; ++c) {
            const auto pos = rest.find(',');
            if ((pos == std::string_view::npos) != (c == cols - 1)) {
                std::ostringstream os;
                os << "csv: line " << r + 2 << " does not have " << cols << " columns";
                throw ValidationError(os.str());
            }
            m(r, c) = parse_double(rest.substr(0, pos), r + 2);
            if (pos != std::string_view::npos) rest.remove_prefix(pos + 1);
        }
    }
    return m;
}

Matrix read_matrix_csv(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ValidationError("csv: cannot open " + path.string());
    return read_matrix_csv(is);
}

Vector read_vector_csv(const std::filesystem::path& path) {
    const Matrix m = read_matrix_csv(path);
    if (m.cols() == 1) return m.col(0);
    if (m.rows() == 1) return m.row(0).transpose();
    throw ValidationError("csv: " + path.string() + " is not a vector");
}

}  // namespace sparsequad
