#include "mcl/spectrum.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace mcl {

namespace {

constexpr const char* format_header = "# magnon-cavity-lab spectrum v1";
constexpr const char* column_header = "field_mT,freq_GHz,s21_db";

void append_g17(std::string& out, double v) {
    char buf[32];
    const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
    out.append(buf, static_cast<std::size_t>(n));
}

// The file stores mT / GHz cells while memory holds T / Hz; a plain scale
// followed by the reader's inverse scale can be off by one ulp. Pick the file
// value whose exact read-side conversion reproduces the in-memory double so
// round-trips are bit-lossless.
double inverse_of_divide(double x, double d) {  // v such that v / d == x
    const double v = x * d;
    if (v / d == x) return v;
    const double up = std::nextafter(v, std::numeric_limits<double>::infinity());
    if (up / d == x) return up;
    return std::nextafter(v, -std::numeric_limits<double>::infinity());
}

double inverse_of_multiply(double x, double m) {  // v such that v * m == x
    const double v = x / m;
    if (v * m == x) return v;
    const double up = std::nextafter(v, std::numeric_limits<double>::infinity());
    if (up * m == x) return up;
    return std::nextafter(v, -std::numeric_limits<double>::infinity());
}

double parse_double(std::string_view token, std::size_t line) {
    double v = 0.0;
    const char* first = token.data();
    const char* last = token.data() + token.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last)
        throw SpectrumParseError(line, "malformed number '" + std::string(token) + "'");
    return v;
}

}  // namespace

SpectrumParseError::SpectrumParseError(std::size_t line, const std::string& what)
    : std::runtime_error("spectrum parse error at line " + std::to_string(line) + ": " + what),
      line_(line) {}

void write_spectrum(const Spectrum2D& s, const std::filesystem::path& path) {
    if (s.power_db.size() != s.fields() * s.freqs())
        throw std::invalid_argument("spectrum matrix dimensions do not match its axes");
    for (double v : s.power_db)
        if (!std::isfinite(v)) throw std::invalid_argument("spectrum contains non-finite power");

    std::string out;
    out.reserve(64 * s.power_db.size() / 2 + 4096);
    out += format_header;
    out += '\n';
    for (const auto& [k, v] : s.meta) {
        out += "# ";
        out += k;
        out += '=';
        out += v;
        out += '\n';
    }
    out += column_header;
    out += '\n';
    for (std::size_t i = 0; i < s.fields(); ++i) {
        const double field_mt = inverse_of_divide(s.field_axis[i], 1e3);
        for (std::size_t j = 0; j < s.freqs(); ++j) {
            append_g17(out, field_mt);
            out += ',';
            append_g17(out, inverse_of_multiply(s.freq_axis[j], 1e9));
            out += ',';
            append_g17(out, s.at(i, j));
            out += '\n';
        }
    }

    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path.string());
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw std::runtime_error("write failed: " + path.string());
}

Spectrum2D read_spectrum(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for reading: " + path.string());
    std::stringstream buf;
    buf << f.rdbuf();
    const std::string text = buf.str();

    Spectrum2D s;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    bool saw_format = false, saw_columns = false;
    std::size_t row = 0;              // samples seen in the current field block
    bool first_block_done = false;

    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string::npos) eol = text.size();
        std::string_view line(text.data() + pos, eol - pos);
        pos = eol + 1;
        ++line_no;
        if (line.empty()) continue;

        if (!saw_format) {
            if (line != format_header)
                throw SpectrumParseError(line_no, "missing format header '" +
                                                      std::string(format_header) + "'");
            saw_format = true;
            continue;
        }
        if (line[0] == '#') {
            std::string_view body = line.substr(1);
            if (!body.empty() && body[0] == ' ') body.remove_prefix(1);
            const std::size_t eq = body.find('=');
            if (eq == std::string_view::npos)
                throw SpectrumParseError(line_no, "metadata line without '='");
            s.meta.emplace(std::string(body.substr(0, eq)), std::string(body.substr(eq + 1)));
            continue;
        }
        if (!saw_columns) {
            if (line != column_header)
                throw SpectrumParseError(line_no, "expected column header '" +
                                                      std::string(column_header) + "'");
            saw_columns = true;
            continue;
        }

        const std::size_t c1 = line.find(',');
        const std::size_t c2 = c1 == std::string_view::npos ? c1 : line.find(',', c1 + 1);
        if (c2 == std::string_view::npos)
            throw SpectrumParseError(line_no, "expected 3 comma-separated columns");
        const double field = parse_double(line.substr(0, c1), line_no) / 1e3;
        const double freq = parse_double(line.substr(c1 + 1, c2 - c1 - 1), line_no) * 1e9;
        const double db = parse_double(line.substr(c2 + 1), line_no);
        if (!std::isfinite(db))
            throw SpectrumParseError(line_no, "non-finite power value");

        if (s.field_axis.empty() || field != s.field_axis.back()) {
            if (!s.field_axis.empty()) {
                if (!first_block_done) first_block_done = true;
                if (row != s.freq_axis.size())
                    throw SpectrumParseError(line_no, "ragged field block");
            }
            s.field_axis.push_back(field);
            row = 0;
        }
        if (!first_block_done) {
            s.freq_axis.push_back(freq);
        } else {
            if (row >= s.freq_axis.size() || freq != s.freq_axis[row])
                throw SpectrumParseError(line_no, "frequency axis mismatch between field blocks");
        }
        s.power_db.push_back(db);
        ++row;
    }

    if (!saw_format) throw SpectrumParseError(line_no, "empty file");
    if (!saw_columns) throw SpectrumParseError(line_no, "missing column header");
    if (s.field_axis.empty()) throw SpectrumParseError(line_no, "no data rows");
    if (s.power_db.size() != s.fields() * s.freqs())
        throw SpectrumParseError(line_no, "incomplete final field block");
    return s;
}

}  // namespace mcl
