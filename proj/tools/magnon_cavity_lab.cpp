#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mcl/analysis.hpp"
#include "mcl/estimate.hpp"
#include "mcl/ladder.hpp"
#include "mcl/physics.hpp"
#include "mcl/scene.hpp"
#include "mcl/spectrum.hpp"
#include "mcl/units.hpp"

#ifndef MCL_VERSION_STRING
#define MCL_VERSION_STRING "0.0.0"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_config = 1;
constexpr int exit_io = 2;
constexpr int exit_nonconverged = 3;

struct GlobalOptions {
    std::optional<std::uint64_t> seed;
    int threads = 1;
    std::string output_dir = ".";
    std::string format = "csv";
};

std::string utc_timestamp() {
    const std::time_t now = std::time(nullptr);
    char buf[32];
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

class ManifestWriter {
  public:
    ManifestWriter(const GlobalOptions& g, const std::string& subcommand) {
        start_ = std::chrono::steady_clock::now();
        j_["schema"] = "run-manifest v1";
        j_["tool_version"] = MCL_VERSION_STRING;
        j_["subcommand"] = subcommand;
        j_["started_utc"] = utc_timestamp();
        if (g.seed) j_["seed"] = *g.seed;
    }

    void set(const std::string& key, const json& value) { j_[key] = value; }
    void add_input(const std::string& path) { j_["inputs"].push_back(path); }
    void add_output(const std::string& path) { j_["outputs"].push_back(path); }

    void write(const fs::path& path) {
        const auto elapsed = std::chrono::steady_clock::now() - start_;
        j_["duration_s"] = std::chrono::duration<double>(elapsed).count();
        std::ofstream f(path, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write manifest: " + path.string());
        f << j_.dump(2) << '\n';
    }

  private:
    json j_;
    std::chrono::steady_clock::time_point start_;
};

void write_text_file(const std::string& text, const fs::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path.string());
    f << text;
    if (!f) throw std::runtime_error("write failed: " + path.string());
}

// --- minimal SVG plot emission (documentation aid, csv stays the product) ---

void write_heatmap_svg(const mcl::Spectrum2D& s, const fs::path& path) {
    const std::size_t max_cells = 220;
    const std::size_t si = (s.fields() + max_cells - 1) / max_cells;
    const std::size_t sj = (s.freqs() + max_cells - 1) / max_cells;
    const std::size_t nb = (s.fields() + si - 1) / si;
    const std::size_t nf = (s.freqs() + sj - 1) / sj;

    double lo = s.power_db[0], hi = s.power_db[0];
    for (double v : s.power_db) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double span = hi > lo ? hi - lo : 1.0;

    const double w = 640.0, h = 480.0;
    std::string out;
    out += "<svg xmlns='http://www.w3.org/2000/svg' width='640' height='480' "
           "viewBox='0 0 640 480'>\n";
    char buf[256];
    for (std::size_t bi = 0; bi < nb; ++bi) {
        for (std::size_t bj = 0; bj < nf; ++bj) {
            double vmax = -1e300;
            for (std::size_t i = bi * si; i < std::min((bi + 1) * si, s.fields()); ++i)
                for (std::size_t j = bj * sj; j < std::min((bj + 1) * sj, s.freqs()); ++j)
                    vmax = std::max(vmax, s.at(i, j));
            const double t = (vmax - lo) / span;
            const int r = static_cast<int>(255 * std::min(1.0, 2.0 * t));
            const int g = static_cast<int>(255 * std::max(0.0, 2.0 * t - 1.0));
            const int b = static_cast<int>(255 * (1.0 - t));
            std::snprintf(buf, sizeof buf,
                          "<rect x='%.2f' y='%.2f' width='%.2f' height='%.2f' "
                          "fill='rgb(%d,%d,%d)'/>\n",
                          w * bi / nb, h - h * (bj + 1) / nf, w / nb + 0.5, h / nf + 0.5, r, g, b);
            out += buf;
        }
    }
    out += "</svg>\n";
    write_text_file(out, path);
}

void write_trace_svg(const std::vector<mcl::TracePoint>& trace, const fs::path& path) {
    double bmin = 1e300, bmax = -1e300, fmax = 0.0;
    for (const auto& t : trace) {
        bmin = std::min(bmin, t.field_t);
        bmax = std::max(bmax, t.field_t);
        fmax = std::max(fmax, t.fwhm_hz);
    }
    if (!(bmax > bmin) || !(fmax > 0.0)) fmax = 1.0;
    std::string out;
    out += "<svg xmlns='http://www.w3.org/2000/svg' width='640' height='480' "
           "viewBox='0 0 640 480'>\n"
           "<rect width='640' height='480' fill='white'/>\n"
           "<polyline fill='none' stroke='black' points='";
    char buf[64];
    for (const auto& t : trace) {
        if (t.flag == mcl::SliceFlag::failed || t.flag == mcl::SliceFlag::no_peak) continue;
        const double x = 40.0 + 560.0 * (t.field_t - bmin) / (bmax - bmin);
        const double y = 440.0 - 400.0 * t.fwhm_hz / fmax;
        std::snprintf(buf, sizeof buf, "%.1f,%.1f ", x, y);
        out += buf;
    }
    out += "'/>\n</svg>\n";
    write_text_file(out, path);
}

// --- subcommands -----------------------------------------------------------

int cmd_simulate(const GlobalOptions& g, const std::string& config_path,
                 const std::string& out_path, bool plot) {
    ManifestWriter manifest(g, "simulate");
    mcl::SceneConfig scene = mcl::load_scene(config_path);
    if (g.seed) scene.noise.seed = *g.seed;

    std::vector<std::string> warnings;
    mcl::validate(scene, &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';

    const fs::path out = out_path.empty() ? fs::path(g.output_dir) / "spectrum.csv"
                                          : fs::path(out_path);
    const mcl::Spectrum2D s = mcl::synthesize(scene);
    mcl::write_spectrum(s, out);
    std::cout << "wrote " << out.string() << " (" << s.fields() << " x " << s.freqs()
              << " samples)\n";

    manifest.add_input(config_path);
    manifest.add_output(out.string());
    manifest.set("config", json::parse(mcl::scene_to_json(scene)));
    manifest.set("seed", scene.noise.seed);
    if (plot) {
        const fs::path svg = out.parent_path() / (out.stem().string() + ".svg");
        write_heatmap_svg(s, svg);
        manifest.add_output(svg.string());
    }
    manifest.write(out.parent_path() / (out.stem().string() + ".manifest.json"));
    return exit_ok;
}

int cmd_analyze(const GlobalOptions& g, const std::string& spectrum_path, bool slices,
                bool anticrossing, bool full, double noise_sigma_db, bool plot) {
    ManifestWriter manifest(g, "analyze");
    manifest.add_input(spectrum_path);

    mcl::Spectrum2D s;
    try {
        s = mcl::read_spectrum(spectrum_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_io;
    }

    // no flags means the whole chain
    if (!slices && !anticrossing && !full) slices = anticrossing = full = true;
    mcl::AnalyzeOptions options;
    options.slices = slices;
    options.anticrossing = anticrossing;
    options.full = full;
    options.noise_sigma_db = noise_sigma_db;

    const mcl::AnalysisResult res = mcl::analyze_spectrum(s, options);
    const fs::path dir(g.output_dir);
    fs::create_directories(dir);

    mcl::write_trace_csv(res.trace, dir / "linewidth_trace.csv");
    manifest.add_output((dir / "linewidth_trace.csv").string());
    if (plot) {
        write_trace_svg(res.trace, dir / "linewidth_trace.svg");
        manifest.add_output((dir / "linewidth_trace.svg").string());
    }
    if (anticrossing || full) {
        mcl::write_branch_csv(res.branch_points, dir / "branch_points.csv");
        manifest.add_output((dir / "branch_points.csv").string());
    }

    bool nonconverged = false;
    if (!res.note.empty()) std::cout << res.note << '\n';
    if (res.anticrossing) {
        write_text_file(mcl::anticrossing_report_json(*res.anticrossing) + "\n",
                        dir / "anticrossing_fit.json");
        manifest.add_output((dir / "anticrossing_fit.json").string());
        nonconverged |= !res.anticrossing->diagnostics.converged;
    }
    if (res.full) {
        write_text_file(mcl::full_report_json(*res.full) + "\n", dir / "full_fit.json");
        manifest.add_output((dir / "full_fit.json").string());
        nonconverged |= !res.full->diagnostics.converged;

        const mcl::FullModelFit& f = *res.full;
        std::printf("%-12s %14s %14s\n", "parameter", "value", "1-sigma");
        std::printf("%-12s %14.6g %14.2g\n", "g_eff_MHz", f.g_eff_hz / 1e6, f.err_g_eff_hz / 1e6);
        std::printf("%-12s %14.6g %14.2g\n", "gamma_MHz", f.gamma_hz / 1e6, f.err_gamma_hz / 1e6);
        std::printf("%-12s %14.6g %14.2g\n", "kappa_MHz", f.kappa_hz / 1e6, f.err_kappa_hz / 1e6);
        std::printf("%-12s %14.6g %14.2g\n", "g_s", f.g_s, f.err_g_s);
        std::printf("%-12s %14.6g %14.2g\n", "B_FMR_mT", mcl::units::tesla_to_mt(f.b_fmr_t),
                    mcl::units::tesla_to_mt(f.err_b_fmr_t));
        std::printf("%-12s %14.6g %14s\n", "C", f.cooperativity(), "");
    } else if (res.anticrossing) {
        const mcl::AnticrossingFit& f = *res.anticrossing;
        std::printf("%-12s %14s %14s\n", "parameter", "value", "1-sigma");
        std::printf("%-12s %14.6g %14.2g\n", "g_eff_MHz", f.g_eff_hz / 1e6, f.err_g_eff_hz / 1e6);
        std::printf("%-12s %14.6g %14.2g\n", "g_s", f.g_s, f.err_g_s);
        std::printf("%-12s %14.6g %14.2g\n", "B_FMR_mT", mcl::units::tesla_to_mt(f.b_fmr_t),
                    mcl::units::tesla_to_mt(f.err_b_fmr_t));
    }

    manifest.write(dir / "analyze.manifest.json");
    return nonconverged ? exit_nonconverged : exit_ok;
}

int cmd_estimate(const GlobalOptions& g, const std::string& config_path) {
    ManifestWriter manifest(g, "estimate");
    manifest.add_input(config_path);
    const mcl::EstimateConfig cfg = mcl::load_estimate_config(config_path);
    const mcl::EstimateReport rep = mcl::run_estimate(cfg);

    std::printf("%-22s %.4g cm^-3\n", "spin density", rep.rho * 1e-6);
    std::printf("%-22s %.4g\n", "spin count N", rep.spin_count);
    if (rep.vacuum_field_t > 0.0)
        std::printf("%-22s %.4g T\n", "vacuum field B_10", rep.vacuum_field_t);
    std::printf("%-22s %.4g Hz\n", "single-spin g/2pi", rep.single_spin_g_hz);
    std::printf("%-22s %.4g MHz\n", "collective g_eff/2pi", rep.g_eff_hz / 1e6);
    if (std::isfinite(rep.thermal_photons))
        std::printf("%-22s %.4g\n", "thermal photons", rep.thermal_photons);
    if (!rep.note.empty()) std::printf("%s\n", rep.note.c_str());

    const fs::path dir(g.output_dir);
    fs::create_directories(dir);
    write_text_file(mcl::estimate_report_json(rep) + "\n", dir / "estimate_report.json");
    manifest.add_output((dir / "estimate_report.json").string());
    manifest.write(dir / "estimate.manifest.json");
    return exit_ok;
}

int cmd_ladder(const GlobalOptions& g, double n_spins, long long e_max, double g_hz,
               double f_r_ghz, double span_mhz, std::size_t points) {
    ManifestWriter manifest(g, "ladder");
    const fs::path dir(g.output_dir);
    fs::create_directories(dir);

    const double omega_r = mcl::units::ghz_to_rad(f_r_ghz);
    const double g_ang = mcl::units::hz_to_rad(g_hz);

    // single-excitation branches vs detuning, with the two-oscillator
    // dispersion alongside for comparison
    std::string csv = "detuning_MHz,ladder_upper_GHz,ladder_lower_GHz,"
                      "oscillator_upper_GHz,oscillator_lower_GHz\n";
    char buf[256];
    for (std::size_t k = 0; k < points; ++k) {
        const double frac = points > 1 ? static_cast<double>(k) / (points - 1) : 0.5;
        const double delta = mcl::units::mhz_to_rad(span_mhz) * (2.0 * frac - 1.0);
        const auto h = mcl::build_hamiltonian(n_spins, 1, omega_r, omega_r + delta, g_ang);
        const auto ev = mcl::eigenvalues(h);
        const double g_eff = g_ang * std::sqrt(n_spins);
        const double half = 0.5 * std::sqrt(delta * delta + 4.0 * g_eff * g_eff);
        const double mid = omega_r + 0.5 * delta;
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n",
                      mcl::units::rad_to_mhz(delta), mcl::units::rad_to_ghz(ev[1]),
                      mcl::units::rad_to_ghz(ev[0]), mcl::units::rad_to_ghz(mid + half),
                      mcl::units::rad_to_ghz(mid - half));
        csv += buf;
    }
    write_text_file(csv, dir / "ladder_branches.csv");
    manifest.add_output((dir / "ladder_branches.csv").string());

    if (g_hz > 0.0 && e_max >= 1) {
        std::string split_csv = "excitations,normalized_gap\n";
        for (const auto& [e, gap] : mcl::splitting_vs_excitation(n_spins, g_ang, e_max)) {
            std::snprintf(buf, sizeof buf, "%lld,%.17g\n", static_cast<long long>(e), gap);
            split_csv += buf;
        }
        write_text_file(split_csv, dir / "ladder_splitting.csv");
        manifest.add_output((dir / "ladder_splitting.csv").string());
    }

    manifest.write(dir / "ladder.manifest.json");
    return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"magnon-cavity-lab: simulate and analyze magnon-resonator transmission "
                 "spectra.\nBoundary units: GHz (frequencies), mT (fields), MHz (rates), "
                 "Hz (single-spin coupling)."};
    app.set_version_flag("--version", MCL_VERSION_STRING);
    app.require_subcommand(1);

    GlobalOptions g;
    std::uint64_t seed_value = 0;
    auto* seed_opt = app.add_option("--seed", seed_value, "override the noise RNG seed");
    app.add_option("--threads", g.threads, "worker thread cap (advisory)");
    app.add_option("--output-dir", g.output_dir, "directory for outputs")->capture_default_str();
    app.add_option("--format", g.format, "trace/spectrum format")
        ->check(CLI::IsMember({"csv"}))
        ->capture_default_str();

    auto* sim = app.add_subcommand("simulate", "synthesize a 2D spectrum from a scene config");
    std::string sim_config, sim_out;
    bool sim_plot = false;
    sim->add_option("config", sim_config, "scene config JSON")->required();
    sim->add_option("-o,--out", sim_out, "output spectrum CSV path");
    sim->add_flag("--plot", sim_plot, "also emit an SVG heatmap");

    auto* ana = app.add_subcommand("analyze", "run the analysis chain on a spectrum");
    std::string ana_spectrum;
    bool ana_slices = false, ana_anticrossing = false, ana_full = false, ana_plot = false;
    double ana_sigma_db = 0.0;
    ana->add_option("spectrum", ana_spectrum, "spectrum CSV")->required();
    ana->add_flag("--slices", ana_slices, "per-field Lorentzian slice fits");
    ana->add_flag("--anticrossing", ana_anticrossing, "two-branch dispersion fit");
    ana->add_flag("--full", ana_full, "full 2D transmission-model fit");
    ana->add_option("--noise-sigma-db", ana_sigma_db, "dB noise sigma for reduced chi-square");
    ana->add_flag("--plot", ana_plot, "also emit an SVG linewidth plot");

    auto* est = app.add_subcommand("estimate", "coupling estimators from geometry and density");
    std::string est_config;
    est->add_option("config", est_config, "estimate config JSON")->required();

    auto* lad = app.add_subcommand("ladder", "excitation-ladder eigenvalues and splittings");
    double lad_n = 10.0, lad_g_hz = 5.0, lad_f_r = 5.90, lad_span = 2000.0;
    long long lad_e_max = 10;
    std::size_t lad_points = 101;
    lad->add_option("--N", lad_n, "spin count")->capture_default_str();
    lad->add_option("--e-max", lad_e_max, "largest excitation number")->capture_default_str();
    lad->add_option("--g-hz", lad_g_hz, "single-spin coupling g/2pi in Hz")->capture_default_str();
    lad->add_option("--f-r-ghz", lad_f_r, "resonator frequency in GHz")->capture_default_str();
    lad->add_option("--span-mhz", lad_span, "detuning half-span in MHz")->capture_default_str();
    lad->add_option("--points", lad_points, "detuning grid points")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_config;
    }
    if (seed_opt->count() > 0) g.seed = seed_value;

    try {
        if (sim->parsed()) return cmd_simulate(g, sim_config, sim_out, sim_plot);
        if (ana->parsed())
            return cmd_analyze(g, ana_spectrum, ana_slices, ana_anticrossing, ana_full,
                               ana_sigma_db, ana_plot);
        if (est->parsed()) return cmd_estimate(g, est_config);
        if (lad->parsed())
            return cmd_ladder(g, lad_n, lad_e_max, lad_g_hz, lad_f_r, lad_span, lad_points);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_config;
    } catch (const mcl::SpectrumParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_io;
    } catch (const std::runtime_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_io;
    }
    return exit_config;
}
