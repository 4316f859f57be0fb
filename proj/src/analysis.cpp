#include "mcl/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "json.hpp"
#include "mcl/constants.hpp"
#include "mcl/units.hpp"

namespace mcl {

using nlohmann::json;

namespace {

double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    return *mid;
}

}  // namespace

std::optional<AnticrossingFit> anticrossing_guess(const Spectrum2D& s,
                                                  const std::vector<TracePoint>& trace) {
    // Guess geometry from the slice fits: the anticrossing sits where the
    // two-peak separation is smallest.
    double min_sep = std::numeric_limits<double>::infinity();
    double b_at_min = 0.0;
    std::size_t two_peak_slices = 0;
    std::vector<double> single_centers;

    for (std::size_t i = 0; i < s.fields(); ++i) {
        const LorentzianFit f = fit_slice(s, i);
        if (f.flag == SliceFlag::two_peak && std::isfinite(f.second_center_hz)) {
            ++two_peak_slices;
            const double sep = std::abs(f.center_hz - f.second_center_hz);
            if (sep < min_sep) {
                min_sep = sep;
                b_at_min = s.field_axis[i];
            }
        } else if (f.flag == SliceFlag::ok) {
            single_centers.push_back(f.center_hz);
        }
    }
    (void)trace;
    if (two_peak_slices < 3) return std::nullopt;

    AnticrossingFit guess;
    guess.g_eff_hz = 0.5 * min_sep;
    guess.b_fmr_t = b_at_min;
    guess.g_s = 2.0;
    guess.f_r_hz = single_centers.empty()
                       ? 0.5 * (s.freq_axis.front() + s.freq_axis.back())
                       : median_of(std::move(single_centers));
    return guess;
}

AnalysisResult analyze_spectrum(const Spectrum2D& s, const AnalyzeOptions& options) {
    AnalysisResult out;
    out.trace = linewidth_trace(s, options.slice_settings);
    if (!options.anticrossing && !options.full) return out;

    out.branch_points = extract_branch_points(s, options.slice_settings);
    const auto guess = anticrossing_guess(s, out.trace);
    if (!guess) {
        out.note = "no anticrossing detected";
        return out;
    }
    out.anticrossing_detected = true;
    out.anticrossing = fit_anticrossing(out.branch_points, *guess, options.fit_settings);

    if (!options.full) return out;
    const AnticrossingFit& ac = *out.anticrossing;

    // Rate guesses from the linewidth trace: far detuned the FWHM reads
    // kappa/pi, at the crossing it reads kappa_hz + gamma_hz/2.
    const PhysicalConstants& c = codata2018;
    const double field_per_hz = c.h / (ac.g_s * c.mu_B);  // T per Hz of detuning
    const double far_field = 4.0 * ac.g_eff_hz * field_per_hz;
    std::vector<double> far_fwhm;
    double fwhm_max = 0.0;
    for (const TracePoint& t : out.trace) {
        if (t.flag == SliceFlag::failed || t.flag == SliceFlag::no_peak) continue;
        if (std::abs(t.field_t - ac.b_fmr_t) > far_field) far_fwhm.push_back(t.fwhm_hz);
        fwhm_max = std::max(fwhm_max, t.fwhm_hz);
    }
    const double kappa_hz = far_fwhm.empty() ? 0.5 * fwhm_max : 0.5 * median_of(far_fwhm);
    const double gamma_hz = std::max(2.0 * (fwhm_max - kappa_hz), 0.2 * kappa_hz);

    double scale_db = -20.0;
    for (std::size_t j = 0; j < s.freqs(); ++j)
        scale_db = std::max(scale_db, s.at(0, j));

    FullModelFit initial;
    initial.f_r_hz = ac.f_r_hz;
    initial.kappa_hz = kappa_hz;
    initial.g_eff_hz = ac.g_eff_hz;
    initial.gamma_hz = gamma_hz;
    initial.g_s = ac.g_s;
    initial.b_fmr_t = ac.b_fmr_t;
    initial.scale_db = scale_db;
    out.full = fit_full(s, initial, options.full_settings, options.noise_sigma_db);
    return out;
}

namespace {

json diagnostics_json(const FitDiagnostics& d) {
    return {{"converged", d.converged},
            {"rank_deficient", d.rank_deficient},
            {"iterations", d.iterations},
            {"residual_norm", d.residual_norm},
            {"message", d.message}};
}

json param_json(double value, double sigma) {
    return {{"value", value}, {"sigma", sigma}};
}

}  // namespace

std::string anticrossing_report_json(const AnticrossingFit& fit) {
    json j;
    j["schema"] = "fit-report v1";
    j["model"] = "anticrossing";
    j["parameters"] = {
        {"g_eff_MHz", param_json(fit.g_eff_hz / 1e6, fit.err_g_eff_hz / 1e6)},
        {"B_FMR_mT", param_json(units::tesla_to_mt(fit.b_fmr_t), units::tesla_to_mt(fit.err_b_fmr_t))},
        {"g_s", param_json(fit.g_s, fit.err_g_s)},
        {"f_r_GHz", param_json(fit.f_r_hz / 1e9, fit.err_f_r_hz / 1e9)},
    };
    j["residual_rms_MHz"] = fit.residual_rms_hz / 1e6;
    j["diagnostics"] = diagnostics_json(fit.diagnostics);
    return j.dump(2);
}

std::string full_report_json(const FullModelFit& fit) {
    json j;
    j["schema"] = "fit-report v1";
    j["model"] = "full";
    j["parameters"] = {
        {"f_r_GHz", param_json(fit.f_r_hz / 1e9, fit.err_f_r_hz / 1e9)},
        {"kappa_MHz", param_json(fit.kappa_hz / 1e6, fit.err_kappa_hz / 1e6)},
        {"g_eff_MHz", param_json(fit.g_eff_hz / 1e6, fit.err_g_eff_hz / 1e6)},
        {"gamma_MHz", param_json(fit.gamma_hz / 1e6, fit.err_gamma_hz / 1e6)},
        {"g_s", param_json(fit.g_s, fit.err_g_s)},
        {"B_FMR_mT", param_json(units::tesla_to_mt(fit.b_fmr_t), units::tesla_to_mt(fit.err_b_fmr_t))},
        {"scale_db", param_json(fit.scale_db, fit.err_scale_db)},
    };
    j["covariance"] = {{"order",
                        {"omega_r_rad_s", "kappa_rad_s", "g_eff_rad_s", "gamma_rad_s", "g_s",
                         "B_FMR_T", "scale_db"}},
                       {"matrix", json::array()}};
    if (fit.covariance.size() == 49) {
        for (std::size_t i = 0; i < 7; ++i) {
            json row = json::array();
            for (std::size_t k = 0; k < 7; ++k) row.push_back(fit.covariance[i * 7 + k]);
            j["covariance"]["matrix"].push_back(row);
        }
    }
    j["cooperativity"] = fit.cooperativity();
    j["residual_rms_db"] = fit.residual_rms_db;
    if (std::isfinite(fit.reduced_chi_square)) j["reduced_chi_square"] = fit.reduced_chi_square;
    j["diagnostics"] = diagnostics_json(fit.diagnostics);
    return j.dump(2);
}

namespace {

void append_g17(std::string& out, double v) {
    char buf[32];
    const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
    out.append(buf, static_cast<std::size_t>(n));
}

void write_text(const std::string& text, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path.string());
    f.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!f) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace

void write_trace_csv(const std::vector<TracePoint>& trace, const std::filesystem::path& path) {
    std::string out = "field_mT,center_GHz,fwhm_MHz,flag\n";
    for (const TracePoint& t : trace) {
        append_g17(out, units::tesla_to_mt(t.field_t));
        out += ',';
        append_g17(out, t.center_hz / 1e9);
        out += ',';
        append_g17(out, t.fwhm_hz / 1e6);
        out += ',';
        out += to_string(t.flag);
        out += '\n';
    }
    write_text(out, path);
}

void write_branch_csv(const std::vector<BranchPoint>& points,
                      const std::filesystem::path& path) {
    std::string out = "field_mT,freq_GHz\n";
    for (const BranchPoint& p : points) {
        append_g17(out, units::tesla_to_mt(p.field_t));
        out += ',';
        append_g17(out, p.freq_hz / 1e9);
        out += '\n';
    }
    write_text(out, path);
}

}  // namespace mcl
