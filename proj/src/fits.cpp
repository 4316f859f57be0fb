#include "mcl/fits.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>

#include "mcl/constants.hpp"
#include "mcl/units.hpp"

namespace mcl {

namespace {

constexpr double db_ln = 10.0 / 2.302585092994045684;  // 10 / ln(10)
constexpr double tiny_power = 1e-300;

double median_of(std::vector<double> v) {
    const std::size_t n = v.size();
    auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
    std::nth_element(v.begin(), mid, v.end());
    if (n % 2 == 1) return *mid;
    const double hi = *mid;
    const double lo = *std::max_element(v.begin(), mid);
    return 0.5 * (lo + hi);
}

}  // namespace

const char* to_string(SliceFlag f) {
    switch (f) {
        case SliceFlag::ok: return "ok";
        case SliceFlag::no_peak: return "no_peak";
        case SliceFlag::two_peak: return "two_peak";
        case SliceFlag::broadened: return "broadened";
        case SliceFlag::failed: return "failed";
    }
    return "unknown";
}

double LorentzianModel::eval(const double* p, double f) {
    const double d = f - p[0];
    const double h = 0.5 * std::abs(p[1]);
    const double den = d * d + h * h;
    return p[2] * h * h / den + p[3];
}

void LorentzianModel::jacobian_row(const double* p, double f, double* out) {
    const double d = f - p[0];
    const double h = 0.5 * std::abs(p[1]);
    const double den = d * d + h * h;
    const double den2 = den * den;
    out[0] = p[2] * h * h * 2.0 * d / den2;
    out[1] = p[2] * 2.0 * h * d * d / den2 * 0.5 * (p[1] < 0.0 ? -1.0 : 1.0);
    out[2] = h * h / den;
    out[3] = 1.0;
}

namespace {

std::complex<double> s21_model_amp(const double* p, double field, double omega,
                                   std::complex<double>* q_out) {
    using namespace std::complex_literals;
    const PhysicalConstants& c = codata2018;
    const double kappa = std::abs(p[1]);
    const double g = std::abs(p[2]);
    const double gamma = std::abs(p[3]);
    const double omega_fmr = p[0] + p[4] * c.mu_B / c.hbar * (field - p[5]);
    const std::complex<double> q = 1i * (omega - omega_fmr) - 0.5 * gamma;
    std::complex<double> den = 1i * (omega - p[0]) - kappa;
    if (g != 0.0) den += g * g / q;
    if (q_out) *q_out = q;
    return kappa / den;
}

}  // namespace

double S21DbModel::eval(const double* p, double field, double omega) {
    const std::complex<double> a = s21_model_amp(p, field, omega, nullptr);
    return 10.0 * std::log10(std::max(std::norm(a), tiny_power)) + p[6];
}

void S21DbModel::jacobian_row(const double* p, double field, double omega, double* out) {
    using namespace std::complex_literals;
    const PhysicalConstants& c = codata2018;
    std::complex<double> q;
    const std::complex<double> a = s21_model_amp(p, field, omega, &q);
    const double kappa = std::abs(p[1]);
    const double g = std::abs(p[2]);
    const double gamma = std::abs(p[3]);
    const std::complex<double> den = kappa / a;  // the model denominator
    const std::complex<double> q2 = q * q;
    const double slope = c.mu_B / c.hbar;  // d(omega_fmr)/d(g_s * (B - B_FMR))

    // dA/dp = (d kappa/dp)/den - kappa/den^2 * dden/dp
    const std::complex<double> pref = -kappa / (den * den);
    const double g2 = g * g;

    const std::complex<double> d_den_omega_r = -1i + 1i * g2 / q2;
    const std::complex<double> d_den_kappa = -1.0;
    const std::complex<double> d_den_g = g != 0.0 ? 2.0 * g / q : 0.0;
    const std::complex<double> d_den_gamma = g2 / (2.0 * q2);
    const std::complex<double> d_den_gs = 1i * g2 * slope * (field - p[5]) / q2;
    const std::complex<double> d_den_bfmr = -1i * g2 * slope * p[4] / q2;

    const double inv_norm = 1.0 / std::max(std::norm(a), tiny_power);
    auto dm = [&](const std::complex<double>& da) {
        return 2.0 * db_ln * (std::conj(a) * da).real() * inv_norm;
    };

    const double sgn_k = p[1] < 0.0 ? -1.0 : 1.0;
    const double sgn_g = p[2] < 0.0 ? -1.0 : 1.0;
    const double sgn_gam = p[3] < 0.0 ? -1.0 : 1.0;

    out[0] = dm(pref * d_den_omega_r);
    out[1] = dm(1.0 / den + pref * d_den_kappa) * sgn_k;
    out[2] = dm(pref * d_den_g) * sgn_g;
    out[3] = dm(pref * d_den_gamma) * sgn_gam;
    out[4] = dm(pref * d_den_gs);
    out[5] = dm(pref * d_den_bfmr);
    out[6] = 1.0;
}

OptimizerSettings default_slice_settings() {
    OptimizerSettings s;
    s.jacobian = OptimizerSettings::Jacobian::analytic;
    s.max_iterations = 100;
    return s;
}

OptimizerSettings default_full_settings() {
    OptimizerSettings s;
    s.jacobian = OptimizerSettings::Jacobian::analytic;
    s.max_iterations = 100;
    return s;
}

namespace {

struct Peak {
    std::size_t idx = 0;
    double height = 0.0;    // above baseline, linear
    double fwhm_est = 0.0;  // Hz
};

struct SliceScan {
    double baseline = 0.0;
    double sigma = 0.0;
    std::vector<Peak> peaks;  // by descending height, merged, at most 2
    bool crowded = false;     // a second maximum was absorbed into the first
};

double half_max_width(std::span<const double> freq, std::span<const double> p,
                      std::size_t idx, double baseline) {
    const double half = baseline + 0.5 * (p[idx] - baseline);
    std::size_t lo = idx, hi = idx;
    while (lo > 0 && p[lo] > half) --lo;
    while (hi + 1 < p.size() && p[hi] > half) ++hi;
    const double bin = freq.size() > 1 ? freq[1] - freq[0] : 1.0;
    return std::max(freq[hi] - freq[lo], bin);
}

SliceScan scan_slice(std::span<const double> freq, std::span<const double> p) {
    SliceScan scan;
    scan.baseline = median_of({p.begin(), p.end()});
    std::vector<double> dev(p.size());
    for (std::size_t j = 0; j < p.size(); ++j) dev[j] = std::abs(p[j] - scan.baseline);
    const double peak_max = *std::max_element(p.begin(), p.end());
    scan.sigma = std::max(1.4826 * median_of(dev), 1e-12 * std::max(peak_max, tiny_power));
    const double threshold = scan.baseline + 3.0 * scan.sigma;
    if (peak_max <= threshold) return scan;

    std::vector<Peak> candidates;
    for (std::size_t j = 1; j + 1 < p.size(); ++j) {
        if (p[j] >= p[j - 1] && p[j] > p[j + 1] && p[j] > threshold)
            candidates.push_back({j, p[j] - scan.baseline,
                                  half_max_width(freq, p, j, scan.baseline)});
    }
    std::sort(candidates.begin(), candidates.end(),
              [](const Peak& a, const Peak& b) { return a.height > b.height; });

    for (const Peak& cand : candidates) {
        bool merged = false;
        for (const Peak& kept : scan.peaks) {
            const double sep = std::abs(freq[cand.idx] - freq[kept.idx]);
            if (sep <= 0.5 * (cand.fwhm_est + kept.fwhm_est)) {
                merged = true;
                break;
            }
        }
        if (merged) {
            scan.crowded = true;
            continue;
        }
        scan.peaks.push_back(cand);
        if (scan.peaks.size() == 2) break;
    }
    return scan;
}

// Windowed Lorentzian LM fit of one detected peak; center/width in Hz,
// amplitude/baseline linear.
LeastSquaresResult fit_peak_window(std::span<const double> freq, std::span<const double> p,
                                   const Peak& peak, double baseline,
                                   const OptimizerSettings& settings) {
    const double bin = freq.size() > 1 ? freq[1] - freq[0] : 1.0;
    const double half_window = std::max(5.0 * peak.fwhm_est, 10.0 * bin);
    const double f_peak = freq[peak.idx];
    std::size_t lo = peak.idx, hi = peak.idx;
    while (lo > 0 && freq[lo - 1] >= f_peak - half_window) --lo;
    while (hi + 1 < freq.size() && freq[hi + 1] <= f_peak + half_window) ++hi;

    std::vector<double> fw(freq.begin() + lo, freq.begin() + hi + 1);
    std::vector<double> yw(p.begin() + lo, p.begin() + hi + 1);

    ResidualFn residual = [&fw, &yw](std::span<const double> q, std::vector<double>& r) {
        r.resize(fw.size());
        for (std::size_t i = 0; i < fw.size(); ++i)
            r[i] = LorentzianModel::eval(q.data(), fw[i]) - yw[i];
    };
    JacobianFn jac = [&fw](std::span<const double> q, std::vector<double>& j) {
        j.resize(fw.size() * 4);
        for (std::size_t i = 0; i < fw.size(); ++i)
            LorentzianModel::jacobian_row(q.data(), fw[i], &j[i * 4]);
    };

    std::vector<double> initial = {f_peak, peak.fwhm_est, peak.height, baseline};
    return least_squares(residual, &jac, std::move(initial), settings);
}

LorentzianFit result_from(const LeastSquaresResult& r) {
    LorentzianFit fit;
    fit.center_hz = r.params[0];
    fit.fwhm_hz = std::abs(r.params[1]);
    fit.amplitude_db = 10.0 * std::log10(std::max(r.params[2], tiny_power));
    fit.baseline_db = 10.0 * std::log10(std::max(r.params[3], tiny_power));
    if (r.covariance.size() == 16)
        std::copy(r.covariance.begin(), r.covariance.end(), fit.covariance.begin());
    fit.converged = r.diagnostics.converged;
    fit.iterations = r.diagnostics.iterations;
    return fit;
}

}  // namespace

LorentzianFit fit_slice(const Spectrum2D& s, std::size_t field_index,
                        const OptimizerSettings& settings) {
    if (field_index >= s.fields()) throw std::out_of_range("field index out of range");
    if (s.freqs() < 8)
        throw std::invalid_argument("slice needs at least 8 samples spanning the peak");

    std::vector<double> plin(s.freqs());
    for (std::size_t j = 0; j < s.freqs(); ++j)
        plin[j] = std::pow(10.0, s.at(field_index, j) / 10.0);

    const SliceScan scan = scan_slice(s.freq_axis, plin);
    LorentzianFit fit;
    if (scan.peaks.empty()) {
        fit.flag = SliceFlag::no_peak;
        return fit;
    }

    fit = result_from(fit_peak_window(s.freq_axis, plin, scan.peaks[0], scan.baseline, settings));
    if (scan.peaks.size() >= 2) {
        fit.flag = SliceFlag::two_peak;
        const auto second =
            fit_peak_window(s.freq_axis, plin, scan.peaks[1], scan.baseline, settings);
        fit.second_center_hz = second.diagnostics.converged
                                   ? second.params[0]
                                   : s.freq_axis[scan.peaks[1].idx];
    } else {
        fit.flag = scan.crowded ? SliceFlag::broadened
                                : (fit.converged ? SliceFlag::ok : SliceFlag::failed);
    }
    return fit;
}

std::vector<TracePoint> linewidth_trace(const Spectrum2D& s, const OptimizerSettings& settings) {
    std::vector<TracePoint> trace;
    trace.reserve(s.fields());
    for (std::size_t i = 0; i < s.fields(); ++i) {
        TracePoint t;
        t.field_t = s.field_axis[i];
        try {
            const LorentzianFit f = fit_slice(s, i, settings);
            t.center_hz = f.center_hz;
            t.fwhm_hz = f.fwhm_hz;
            t.flag = f.flag;
        } catch (const std::exception&) {
            t.flag = SliceFlag::failed;
        }
        trace.push_back(t);
    }
    return trace;
}

std::vector<BranchPoint> extract_branch_points(const Spectrum2D& s,
                                               const OptimizerSettings& settings) {
    std::vector<BranchPoint> points;
    std::vector<double> plin(s.freqs());
    for (std::size_t i = 0; i < s.fields(); ++i) {
        for (std::size_t j = 0; j < s.freqs(); ++j)
            plin[j] = std::pow(10.0, s.at(i, j) / 10.0);
        const SliceScan scan = scan_slice(s.freq_axis, plin);
        for (const Peak& peak : scan.peaks) {
            double center = s.freq_axis[peak.idx];
            try {
                const auto r = fit_peak_window(s.freq_axis, plin, peak, scan.baseline, settings);
                if (r.diagnostics.converged) center = r.params[0];
            } catch (const std::exception&) {
                // keep the grid argmax
            }
            points.push_back({s.field_axis[i], center});
        }
    }
    return points;
}

AnticrossingFit fit_anticrossing(std::span<const BranchPoint> points,
                                 const AnticrossingFit& initial,
                                 const OptimizerSettings& settings) {
    if (points.size() < 6)
        throw std::invalid_argument("anticrossing fit needs at least 6 branch points");

    const PhysicalConstants& c = codata2018;
    std::vector<double> p0 = {units::hz_to_rad(initial.g_eff_hz), initial.b_fmr_t, initial.g_s,
                              units::hz_to_rad(initial.f_r_hz)};

    // Branch labels from the initial guess: a point above the branch average
    // omega_r + Delta/2 belongs to the upper branch.
    std::vector<int> branch(points.size());
    std::size_t n_upper = 0;
    for (std::size_t k = 0; k < points.size(); ++k) {
        const double delta = p0[2] * c.mu_B / c.hbar * (points[k].field_t - p0[1]);
        const double mid = p0[3] + 0.5 * delta;
        branch[k] = units::hz_to_rad(points[k].freq_hz) >= mid ? 1 : -1;
        if (branch[k] > 0) ++n_upper;
    }

    ResidualFn residual = [&points, &branch, &c](std::span<const double> q,
                                                 std::vector<double>& r) {
        r.resize(points.size());
        const double g = std::abs(q[0]);
        for (std::size_t k = 0; k < points.size(); ++k) {
            const double delta = q[2] * c.mu_B / c.hbar * (points[k].field_t - q[1]);
            const double half = 0.5 * std::sqrt(delta * delta + 4.0 * g * g);
            const double model = q[3] + 0.5 * delta + branch[k] * half;
            r[k] = model - units::hz_to_rad(points[k].freq_hz);
        }
    };

    const LeastSquaresResult lsq = least_squares(residual, nullptr, p0, settings);

    AnticrossingFit fit;
    fit.g_eff_hz = units::rad_to_hz(std::abs(lsq.params[0]));
    fit.b_fmr_t = lsq.params[1];
    fit.g_s = lsq.params[2];
    fit.f_r_hz = units::rad_to_hz(lsq.params[3]);
    if (lsq.covariance.size() == 16) {
        fit.err_g_eff_hz = units::rad_to_hz(std::sqrt(std::max(lsq.covariance[0], 0.0)));
        fit.err_b_fmr_t = std::sqrt(std::max(lsq.covariance[5], 0.0));
        fit.err_g_s = std::sqrt(std::max(lsq.covariance[10], 0.0));
        fit.err_f_r_hz = units::rad_to_hz(std::sqrt(std::max(lsq.covariance[15], 0.0)));
    }
    fit.residual_rms_hz = units::rad_to_hz(
        lsq.diagnostics.residual_norm / std::sqrt(static_cast<double>(points.size())));
    fit.diagnostics = lsq.diagnostics;
    if (n_upper == 0 || n_upper == points.size()) {
        fit.diagnostics.rank_deficient = true;
        fit.diagnostics.message = "all points assigned to one branch; fit underdetermined";
    }
    return fit;
}

double FullModelFit::cooperativity() const {
    if (!(kappa_hz > 0.0 && gamma_hz > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    return g_eff_hz * g_eff_hz / (kappa_hz * gamma_hz);
}

FullModelFit fit_full(const Spectrum2D& s, const FullModelFit& initial,
                      const OptimizerSettings& settings, double noise_sigma_db) {
    const std::size_t nb = s.fields();
    const std::size_t nf = s.freqs();
    const std::size_t m = nb * nf;
    if (m == 0) throw std::invalid_argument("empty spectrum");

    std::vector<double> omega(nf);
    for (std::size_t j = 0; j < nf; ++j) omega[j] = units::hz_to_rad(s.freq_axis[j]);

    std::vector<double> p0 = {units::hz_to_rad(initial.f_r_hz),
                              units::hz_to_rad(initial.kappa_hz),
                              units::hz_to_rad(initial.g_eff_hz),
                              units::hz_to_rad(initial.gamma_hz),
                              initial.g_s,
                              initial.b_fmr_t,
                              initial.scale_db};

    ResidualFn residual = [&](std::span<const double> q, std::vector<double>& r) {
        r.resize(m);
        for (std::size_t i = 0; i < nb; ++i) {
            const double field = s.field_axis[i];
            for (std::size_t j = 0; j < nf; ++j)
                r[i * nf + j] = S21DbModel::eval(q.data(), field, omega[j]) - s.at(i, j);
        }
    };
    JacobianFn jac = [&](std::span<const double> q, std::vector<double>& jm) {
        jm.resize(m * S21DbModel::n_params);
        for (std::size_t i = 0; i < nb; ++i) {
            const double field = s.field_axis[i];
            for (std::size_t j = 0; j < nf; ++j)
                S21DbModel::jacobian_row(q.data(), field, omega[j],
                                         &jm[(i * nf + j) * S21DbModel::n_params]);
        }
    };

    const LeastSquaresResult lsq = least_squares(residual, &jac, p0, settings);

    FullModelFit fit;
    fit.f_r_hz = units::rad_to_hz(lsq.params[0]);
    fit.kappa_hz = units::rad_to_hz(std::abs(lsq.params[1]));
    fit.g_eff_hz = units::rad_to_hz(std::abs(lsq.params[2]));
    fit.gamma_hz = units::rad_to_hz(std::abs(lsq.params[3]));
    fit.g_s = lsq.params[4];
    fit.b_fmr_t = lsq.params[5];
    fit.scale_db = lsq.params[6];
    fit.covariance = lsq.covariance;
    if (lsq.covariance.size() == 49) {
        auto sig = [&](std::size_t k) { return std::sqrt(std::max(lsq.covariance[k * 8], 0.0)); };
        fit.err_f_r_hz = units::rad_to_hz(sig(0));
        fit.err_kappa_hz = units::rad_to_hz(sig(1));
        fit.err_g_eff_hz = units::rad_to_hz(sig(2));
        fit.err_gamma_hz = units::rad_to_hz(sig(3));
        fit.err_g_s = sig(4);
        fit.err_b_fmr_t = sig(5);
        fit.err_scale_db = sig(6);
    }
    fit.residual_rms_db =
        lsq.diagnostics.residual_norm / std::sqrt(static_cast<double>(m));
    if (noise_sigma_db > 0.0 && m > S21DbModel::n_params) {
        const double ss = lsq.diagnostics.residual_norm * lsq.diagnostics.residual_norm;
        fit.reduced_chi_square = ss / (noise_sigma_db * noise_sigma_db *
                                       static_cast<double>(m - S21DbModel::n_params));
    }
    fit.diagnostics = lsq.diagnostics;
    return fit;
}

}  // namespace mcl
