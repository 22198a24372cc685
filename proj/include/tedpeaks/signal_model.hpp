#ifndef TEDPEAKS_SIGNAL_MODEL_HPP
#define TEDPEAKS_SIGNAL_MODEL_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tedpeaks/errors.hpp"

namespace tedpeaks {

/// One sensor row. Positions are optional; no numeric consumer in this
/// toolkit reads them, they are carried through for spatial tooling.
struct TedSample {
    std::uint64_t index = 0;          // row number, strictly increasing per stream
    std::uint32_t layer = 0;          // printed layer, non-decreasing per stream
    std::optional<double> x_mm;
    std::optional<double> y_mm;
    double ted = 0.0;                 // TED magnitude, sensor arbitrary units
};

/// Stream-level metadata. Time is always derived from the row index and the
/// sample rate; it is never stored per row.
struct StreamMeta {
    double sample_rate = 200000.0;    // samples per second
    std::string sample_id;
    std::uint64_t total_rows = 0;

    double time_of(std::uint64_t row) const { return static_cast<double>(row) / sample_rate; }
};

/// Reference pore count for one printed sample, as measured externally.
struct PoreRecord {
    std::string sample_id;
    std::uint64_t pore_count = 0;
};

class MalformedRow : public Error {
public:
    MalformedRow(std::size_t line, const std::string& what);
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

class NonFiniteTed : public Error {
public:
    explicit NonFiniteTed(std::size_t line);
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

class NonMonotoneIndex : public Error {
public:
    explicit NonMonotoneIndex(std::size_t line);

private:
    std::size_t line_;
};

class NonMonotoneLayer : public Error {
public:
    explicit NonMonotoneLayer(std::size_t line);

private:
    std::size_t line_;
};

/// Canonical TED stream header: `row,layer,x_mm,y_mm,ted`.
extern const char* const kTedCsvHeader;
/// Pore count header: `sample_id,pore_count`.
extern const char* const kPoreCsvHeader;

/// Parses a TED stream in the canonical CSV dialect. Every row is either
/// ingested or reported with its 1-based line number; nothing is dropped.
std::vector<TedSample> read_samples(std::istream& in);
std::vector<TedSample> read_samples(const std::filesystem::path& path);

/// Emits the exact dialect accepted by read_samples. TED values are written
/// with shortest round-trip formatting, so read(write(S)) == S bit for bit.
/// Returns the number of bytes written.
std::size_t write_samples(std::span<const TedSample> samples, std::ostream& out);
std::size_t write_samples(std::span<const TedSample> samples, const std::filesystem::path& path);

std::vector<PoreRecord> read_pores(std::istream& in);
std::vector<PoreRecord> read_pores(const std::filesystem::path& path);
std::size_t write_pores(std::span<const PoreRecord> pores, std::ostream& out);

} // namespace tedpeaks

#endif
