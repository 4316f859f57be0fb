#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace mcl {

// Rectangular |S21|^2 map over (field, frequency), power in dB, row-major
// with the field index outermost. Axes are SI (tesla, Hz); the file format
// uses mT and GHz.
struct Spectrum2D {
    std::vector<double> field_axis;              // T
    std::vector<double> freq_axis;               // Hz
    std::vector<double> power_db;                // field-major, size fields*freqs
    std::map<std::string, std::string> meta;     // provenance key=value block

    std::size_t fields() const { return field_axis.size(); }
    std::size_t freqs() const { return freq_axis.size(); }

    double& at(std::size_t i, std::size_t j) { return power_db[i * freq_axis.size() + j]; }
    double at(std::size_t i, std::size_t j) const { return power_db[i * freq_axis.size() + j]; }
};

class SpectrumParseError : public std::runtime_error {
  public:
    SpectrumParseError(std::size_t line, const std::string& what);
    std::size_t line() const { return line_; }

  private:
    std::size_t line_;
};

// UTF-8 CSV, `# magnon-cavity-lab spectrum v1` header, `# key=value`
// metadata lines, a `field_mT,freq_GHz,s21_db` column header, then one row
// per sample in field-then-frequency order. 17 significant digits.
void write_spectrum(const Spectrum2D& s, const std::filesystem::path& path);

// Throws SpectrumParseError on malformed content (with the offending line)
// and std::runtime_error on I/O failure.
Spectrum2D read_spectrum(const std::filesystem::path& path);

}  // namespace mcl
