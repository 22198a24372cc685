#include "tedpeaks/signal_model.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace tedpeaks {

const char* const kTedCsvHeader = "row,layer,x_mm,y_mm,ted";
const char* const kPoreCsvHeader = "sample_id,pore_count";

MalformedRow::MalformedRow(std::size_t line, const std::string& what)
    : Error("malformed row at line " + std::to_string(line) + ": " + what), line_(line) {}

NonFiniteTed::NonFiniteTed(std::size_t line)
    : Error("non-finite TED value at line " + std::to_string(line)), line_(line) {}

NonMonotoneIndex::NonMonotoneIndex(std::size_t line)
    : Error("row index not strictly increasing at line " + std::to_string(line)), line_(line) {}

NonMonotoneLayer::NonMonotoneLayer(std::size_t line)
    : Error("layer number decreases at line " + std::to_string(line)), line_(line) {}

namespace {

// Splits a CSV line into exactly `n` fields; no quoting in this dialect.
bool split_fields(std::string_view line, std::span<std::string_view> out) {
    std::size_t field = 0;
    std::size_t pos = 0;
    while (field < out.size()) {
        const std::size_t comma = line.find(',', pos);
        if (comma == std::string_view::npos) {
            out[field++] = line.substr(pos);
            return field == out.size();
        }
        out[field++] = line.substr(pos, comma - pos);
        pos = comma + 1;
    }
    return false; // more fields than expected
}

template <typename Int>
bool parse_uint(std::string_view s, Int& out) {
    if (s.empty()) return false;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

bool parse_double(std::string_view s, double& out) {
    if (s.empty()) return false;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

void append_double(std::string& buf, double v) {
    std::array<char, 32> tmp;
    const auto [ptr, ec] = std::to_chars(tmp.data(), tmp.data() + tmp.size(), v);
    (void)ec;
    buf.append(tmp.data(), ptr);
}

// Strips one trailing '\r' so CRLF input parses.
std::string_view trim_cr(std::string_view s) {
    if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
    return s;
}

} // namespace

std::vector<TedSample> read_samples(std::istream& in) {
    std::vector<TedSample> samples;
    std::string line;
    std::size_t line_no = 0;

    if (!std::getline(in, line)) {
        if (in.bad()) throw IoFailure("read failed before header");
        throw MalformedRow(1, "missing header");
    }
    ++line_no;
    if (trim_cr(line) != kTedCsvHeader)
        throw MalformedRow(line_no, "expected header '" + std::string(kTedCsvHeader) + "'");

    bool first = true;
    std::uint64_t prev_index = 0;
    std::uint32_t prev_layer = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view row = trim_cr(line);
        std::array<std::string_view, 5> f;
        if (!split_fields(row, f))
            throw MalformedRow(line_no, "expected 5 fields");

        TedSample s;
        if (!parse_uint(f[0], s.index))
            throw MalformedRow(line_no, "bad row index '" + std::string(f[0]) + "'");
        if (!parse_uint(f[1], s.layer))
            throw MalformedRow(line_no, "bad layer '" + std::string(f[1]) + "'");
        if (!f[2].empty()) {
            double x;
            if (!parse_double(f[2], x))
                throw MalformedRow(line_no, "bad x_mm '" + std::string(f[2]) + "'");
            s.x_mm = x;
        }
        if (!f[3].empty()) {
            double y;
            if (!parse_double(f[3], y))
                throw MalformedRow(line_no, "bad y_mm '" + std::string(f[3]) + "'");
            s.y_mm = y;
        }
        if (!parse_double(f[4], s.ted))
            throw MalformedRow(line_no, "bad ted '" + std::string(f[4]) + "'");
        if (!std::isfinite(s.ted))
            throw NonFiniteTed(line_no);
        if (!first && s.index <= prev_index)
            throw NonMonotoneIndex(line_no);
        if (!first && s.layer < prev_layer)
            throw NonMonotoneLayer(line_no);

        prev_index = s.index;
        prev_layer = s.layer;
        first = false;
        samples.push_back(s);
    }
    if (in.bad()) throw IoFailure("read failed at line " + std::to_string(line_no));
    return samples;
}

std::vector<TedSample> read_samples(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure("cannot open " + path.string());
    return read_samples(in);
}

std::size_t write_samples(std::span<const TedSample> samples, std::ostream& out) {
    std::string buf;
    buf.reserve(64 * 1024);
    buf += kTedCsvHeader;
    buf += '\n';
    std::size_t bytes = 0;
    for (const TedSample& s : samples) {
        buf += std::to_string(s.index);
        buf += ',';
        buf += std::to_string(s.layer);
        buf += ',';
        if (s.x_mm) append_double(buf, *s.x_mm);
        buf += ',';
        if (s.y_mm) append_double(buf, *s.y_mm);
        buf += ',';
        append_double(buf, s.ted);
        buf += '\n';
        if (buf.size() >= 48 * 1024) {
            out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
            bytes += buf.size();
            buf.clear();
        }
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    bytes += buf.size();
    if (!out) throw IoFailure("write failed");
    return bytes;
}

std::size_t write_samples(std::span<const TedSample> samples, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoFailure("cannot open " + path.string() + " for writing");
    return write_samples(samples, out);
}

std::vector<PoreRecord> read_pores(std::istream& in) {
    std::vector<PoreRecord> pores;
    std::string line;
    std::size_t line_no = 0;

    if (!std::getline(in, line)) {
        if (in.bad()) throw IoFailure("read failed before header");
        throw MalformedRow(1, "missing header");
    }
    ++line_no;
    if (trim_cr(line) != kPoreCsvHeader)
        throw MalformedRow(line_no, "expected header '" + std::string(kPoreCsvHeader) + "'");

    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view row = trim_cr(line);
        std::array<std::string_view, 2> f;
        if (!split_fields(row, f))
            throw MalformedRow(line_no, "expected 2 fields");
        PoreRecord r;
        r.sample_id = std::string(f[0]);
        if (r.sample_id.empty())
            throw MalformedRow(line_no, "empty sample_id");
        if (!parse_uint(f[1], r.pore_count))
            throw MalformedRow(line_no, "bad pore_count '" + std::string(f[1]) + "'");
        pores.push_back(std::move(r));
    }
    if (in.bad()) throw IoFailure("read failed at line " + std::to_string(line_no));
    return pores;
}

std::vector<PoreRecord> read_pores(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure("cannot open " + path.string());
    return read_pores(in);
}

std::size_t write_pores(std::span<const PoreRecord> pores, std::ostream& out) {
    std::ostringstream buf;
    buf << kPoreCsvHeader << '\n';
    for (const PoreRecord& r : pores)
        buf << r.sample_id << ',' << r.pore_count << '\n';
    const std::string s = buf.str();
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
    if (!out) throw IoFailure("write failed");
    return s.size();
}

} // namespace tedpeaks
