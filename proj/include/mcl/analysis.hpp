#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mcl/fits.hpp"
#include "mcl/spectrum.hpp"

namespace mcl {

struct AnalyzeOptions {
    bool slices = true;
    bool anticrossing = true;
    bool full = true;
    OptimizerSettings slice_settings = default_slice_settings();
    OptimizerSettings fit_settings;            // anticrossing (FD jacobian)
    OptimizerSettings full_settings = default_full_settings();
    double noise_sigma_db = 0.0;               // for the reduced chi-square
};

struct AnalysisResult {
    std::vector<TracePoint> trace;
    std::vector<BranchPoint> branch_points;
    std::optional<AnticrossingFit> anticrossing;
    std::optional<FullModelFit> full;
    bool anticrossing_detected = false;
    std::string note;
};

// The full analysis chain: per-field slice fits, branch-point extraction,
// dispersion fit, and (seeded by those results) the 2D transmission-model
// fit. When no slice resolves two peaks the spectrum has no anticrossing and
// the dispersion/full fits are skipped with an explanatory note.
AnalysisResult analyze_spectrum(const Spectrum2D& s, const AnalyzeOptions& options = {});

// Initial dispersion-fit guess from the slice scans; empty when the map
// shows no resolvable anticrossing.
std::optional<AnticrossingFit> anticrossing_guess(const Spectrum2D& s,
                                                  const std::vector<TracePoint>& trace);

// fit-report v1 JSON documents.
std::string anticrossing_report_json(const AnticrossingFit& fit);
std::string full_report_json(const FullModelFit& fit);

// `field_mT,center_GHz,fwhm_MHz,flag` rows.
void write_trace_csv(const std::vector<TracePoint>& trace, const std::filesystem::path& path);
// `field_mT,freq_GHz` rows.
void write_branch_csv(const std::vector<BranchPoint>& points, const std::filesystem::path& path);

}  // namespace mcl
