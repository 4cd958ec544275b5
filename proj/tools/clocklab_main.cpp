// clocklab CLI: synthesizes measurement datasets, runs the estimator
// sweeps and reproduces the compensation evaluation tables as CSV files.
// Every command writes a manifest.json from which `clocklab rerun` can
// reproduce its outputs byte for byte.

#include <cmath>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "clocklab/dataset.hpp"
#include "clocklab/eval.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace clocklab;

namespace {

constexpr const char* kVersion = "clocklab-0.1.0";

struct GenDataArgs {
    std::string out_dir = "out";
    std::uint64_t seed = 42;
    double duration_h = 70.0;
    double temp_mean_c = 12.0;
    double temp_amplitude_c = 8.0;
    double temp_trend_c_per_day = 4.0;
    double temp_trend_start_h = 24.0;
    double temp_ar_phi = 0.95;
    double temp_ar_sigma_c = 0.25;
    double profile_c0 = OscillatorProfile{}.c0;
    double profile_c1 = OscillatorProfile{}.c1;
    double profile_c2 = OscillatorProfile{}.c2;
    double tone_noise_ppm = 0.4e-3;
    double lte_noise_ppm = 16.6e-3;
};

struct SweepArgs {
    std::string out_dir = "out";
    std::uint64_t seed = 1;
    std::string estimator = "tone";
    std::string snr_db = "none";  // "none" or a number in dB
    double grid_lo = -0.5;
    double grid_hi = 0.5;
    double grid_step = 0.025;
    int reps = 10;
    double capture_s = 0.0;  // 0 = per-estimator default (tone 0.25, lte 0.6)
    bool include_carrier_offset = false;
};

struct EvaluateArgs {
    std::string dataset;
    std::string out_dir = "out";
    std::uint64_t seed = 7;
    int dt_online_min = 25;
    int n_online = 6;
    int n_initial = 25;
    double lr = 1e-3;
    double threshold_us = 10.0;
    double prob = 0.9;
    int cap_min = 120;
    int n_online_lo = 2;
    int n_online_hi = 10;
    bool with_oracle = false;
    bool with_pacf = false;
};

void write_csv(const fs::path& path, const std::string& text) {
    atomic_write_text(path, text);
}

int run_gen_data(const GenDataArgs& a) {
    OscillatorProfile profile;
    profile.c0 = a.profile_c0;
    profile.c1 = a.profile_c1;
    profile.c2 = a.profile_c2;
    profile.tone_noise_ppm = a.tone_noise_ppm;
    profile.lte_noise_ppm = a.lte_noise_ppm;
    TempModel temp;
    temp.mean_c = a.temp_mean_c;
    temp.amplitude_c = a.temp_amplitude_c;
    temp.trend_c_per_day = a.temp_trend_c_per_day;
    temp.trend_start_h = a.temp_trend_start_h;
    temp.ar_phi = a.temp_ar_phi;
    temp.ar_sigma_c = a.temp_ar_sigma_c;

    const auto records = gen_synthetic_dataset(profile, temp, a.duration_h, a.seed);
    fs::create_directories(a.out_dir);
    write_dataset(records, fs::path(a.out_dir) / "dataset.csv");

    json manifest;
    manifest["command"] = "gen-data";
    manifest["version"] = kVersion;
    manifest["seeds"] = {{"dataset", a.seed}};
    manifest["config"] = {
        {"duration_h", a.duration_h},
        {"temp_mean_c", a.temp_mean_c},
        {"temp_amplitude_c", a.temp_amplitude_c},
        {"temp_trend_c_per_day", a.temp_trend_c_per_day},
        {"temp_trend_start_h", a.temp_trend_start_h},
        {"temp_ar_phi", a.temp_ar_phi},
        {"temp_ar_sigma_c", a.temp_ar_sigma_c},
        {"profile_c0", a.profile_c0},
        {"profile_c1", a.profile_c1},
        {"profile_c2", a.profile_c2},
        {"tone_noise_ppm", a.tone_noise_ppm},
        {"lte_noise_ppm", a.lte_noise_ppm},
    };
    write_manifest(manifest, fs::path(a.out_dir) / "manifest.json");
    std::cout << "wrote " << records.size() << " rows to "
              << (fs::path(a.out_dir) / "dataset.csv").string() << "\n";
    return 0;
}

int run_sweep_cmd(const SweepArgs& a) {
    SweepConfig cfg;
    cfg.grid_lo = a.grid_lo;
    cfg.grid_hi = a.grid_hi;
    cfg.grid_step = a.grid_step;
    cfg.reps = a.reps;
    cfg.seed = a.seed;
    cfg.estimator.include_carrier_offset = a.include_carrier_offset;
    const Method est = (a.estimator == "tone") ? Method::SingleTone
                     : (a.estimator == "lte")  ? Method::LtePss
                     : throw CLI::ValidationError("--estimator must be tone or lte");
    if (a.snr_db != "none") cfg.snr_db = std::stod(a.snr_db);
    cfg.capture_s = a.capture_s > 0.0 ? a.capture_s
                                      : (est == Method::SingleTone ? 0.25 : 0.6);

    const SweepResult result = run_sweep(est, cfg);

    std::string csv = "delta_ppm,mean_error_ppm,std_error_ppm,failures\n";
    for (const auto& row : result.rows) {
        csv += format_double(row.delta_ppm) + "," + format_double(row.mean_error) + "," +
               format_double(row.std_error) + "," + std::to_string(row.failures) + "\n";
    }
    fs::create_directories(a.out_dir);
    write_csv(fs::path(a.out_dir) / "sweep.csv", csv);

    std::string pooled = "pooled_bias_ppm,pooled_std_ppm,total_failures\n";
    pooled += format_double(result.pooled_bias) + "," + format_double(result.pooled_std) +
              "," + std::to_string(result.total_failures) + "\n";
    write_csv(fs::path(a.out_dir) / "sweep_pooled.csv", pooled);

    json manifest;
    manifest["command"] = "sweep-ppm";
    manifest["version"] = kVersion;
    manifest["seeds"] = {{"sweep", a.seed}};
    manifest["config"] = {
        {"estimator", a.estimator},
        {"snr_db", a.snr_db},
        {"grid_lo", a.grid_lo},
        {"grid_hi", a.grid_hi},
        {"grid_step", a.grid_step},
        {"reps", a.reps},
        {"capture_s", cfg.capture_s},
        {"include_carrier_offset", a.include_carrier_offset},
    };
    write_manifest(manifest, fs::path(a.out_dir) / "manifest.json");
    std::cout << "sweep: " << result.rows.size() << " grid points, pooled bias "
              << result.pooled_bias << " ppm, pooled std " << result.pooled_std
              << " ppm, failures " << result.total_failures << "\n";
    return 0;
}

int run_evaluate(const EvaluateArgs& a) {
    if (!fs::exists(a.dataset)) {
        throw std::runtime_error("evaluate: dataset file not found: " + a.dataset);
    }
    const ReadResult data = read_dataset(a.dataset);
    const auto& records = data.records;

    TrainPolicy policy;
    policy.lr = a.lr;
    policy.n_initial = a.n_initial;
    policy.n_online = a.n_online;
    policy.dt_online_min = a.dt_online_min;
    policy.seed = a.seed;

    std::vector<CompMethod> methods = {CompMethod::None, CompMethod::ConstantTone,
                                       CompMethod::ConstantLte, CompMethod::OnlineLstm};
    if (a.with_oracle) methods.push_back(CompMethod::Oracle);

    fs::create_directories(a.out_dir);

    // CDFs at the operating dt.
    std::string cdf_csv = "method,abs_offset_us,prob\n";
    for (CompMethod m : methods) {
        const CompensationRun run = run_compensation(records, m, policy);
        const CdfSummary cdf = cdf_of(run);
        const std::size_t n = cdf.sorted_abs_us.size();
        for (std::size_t i = 0; i < n; ++i) {
            cdf_csv += std::string(comp_method_name(m)) + "," +
                       format_double(cdf.sorted_abs_us[i]) + "," +
                       format_double(double(i + 1) / double(n)) + "\n";
        }
    }
    write_csv(fs::path(a.out_dir) / "cdf.csv", cdf_csv);

    // Resync-interval table.
    std::string interval_csv = "method,dt_online_min\n";
    for (CompMethod m : methods) {
        const int minutes = resync_interval_for(records, m, policy, a.threshold_us,
                                                a.prob, a.cap_min);
        interval_csv += std::string(comp_method_name(m)) + "," + std::to_string(minutes) + "\n";
        std::cout << "interval " << comp_method_name(m) << ": " << minutes << " min\n";
    }
    write_csv(fs::path(a.out_dir) / "resync_intervals.csv", interval_csv);

    // n_online sweep at the operating dt.
    std::string n_csv = "n_online,mean_abs_offset_us\n";
    for (const auto& [n, mean_abs] : sweep_n_online(records, policy, a.n_online_lo, a.n_online_hi)) {
        n_csv += std::to_string(n) + "," + format_double(mean_abs) + "\n";
    }
    write_csv(fs::path(a.out_dir) / "n_online_sweep.csv", n_csv);

    if (a.with_pacf) {
        // PACF of the accumulated uncompensated clock offset, the series the
        // lag choice is based on.
        std::vector<double> offset;
        offset.reserve(records.size());
        double acc = 0.0;
        for (const auto& r : records) {
            if (r.lte_ppm) acc += 60.0 * *r.lte_ppm;
            offset.push_back(acc);
        }
        const PacfResult p = pacf(offset, 25);
        std::string pacf_csv = "lag,pacf,confidence\n";
        for (std::size_t lag = 0; lag < p.values.size(); ++lag) {
            pacf_csv += std::to_string(lag) + "," + format_double(p.values[lag]) + "," +
                        format_double(p.confidence) + "\n";
        }
        write_csv(fs::path(a.out_dir) / "pacf.csv", pacf_csv);
    }

    json manifest;
    manifest["command"] = "evaluate";
    manifest["version"] = kVersion;
    manifest["seeds"] = {{"policy", a.seed}};
    manifest["config"] = {
        {"dataset", fs::absolute(a.dataset).string()},
        {"dt_online_min", a.dt_online_min},
        {"n_online", a.n_online},
        {"n_initial", a.n_initial},
        {"lr", a.lr},
        {"threshold_us", a.threshold_us},
        {"prob", a.prob},
        {"cap_min", a.cap_min},
        {"n_online_lo", a.n_online_lo},
        {"n_online_hi", a.n_online_hi},
        {"with_oracle", a.with_oracle},
        {"with_pacf", a.with_pacf},
    };
    write_manifest(manifest, fs::path(a.out_dir) / "manifest.json");
    return 0;
}

int run_rerun(const std::string& manifest_path, const std::string& out_dir_override) {
    const json manifest = read_manifest(manifest_path);
    const std::string command = manifest.at("command").get<std::string>();
    const json& cfg = manifest.at("config");
    const json& seeds = manifest.at("seeds");

    if (command == "gen-data") {
        GenDataArgs a;
        a.out_dir = out_dir_override;
        a.seed = seeds.at("dataset").get<std::uint64_t>();
        a.duration_h = cfg.at("duration_h").get<double>();
        a.temp_mean_c = cfg.at("temp_mean_c").get<double>();
        a.temp_amplitude_c = cfg.at("temp_amplitude_c").get<double>();
        a.temp_trend_c_per_day = cfg.at("temp_trend_c_per_day").get<double>();
        a.temp_trend_start_h = cfg.at("temp_trend_start_h").get<double>();
        a.temp_ar_phi = cfg.at("temp_ar_phi").get<double>();
        a.temp_ar_sigma_c = cfg.at("temp_ar_sigma_c").get<double>();
        a.profile_c0 = cfg.at("profile_c0").get<double>();
        a.profile_c1 = cfg.at("profile_c1").get<double>();
        a.profile_c2 = cfg.at("profile_c2").get<double>();
        a.tone_noise_ppm = cfg.at("tone_noise_ppm").get<double>();
        a.lte_noise_ppm = cfg.at("lte_noise_ppm").get<double>();
        return run_gen_data(a);
    }
    if (command == "sweep-ppm") {
        SweepArgs a;
        a.out_dir = out_dir_override;
        a.seed = seeds.at("sweep").get<std::uint64_t>();
        a.estimator = cfg.at("estimator").get<std::string>();
        a.snr_db = cfg.at("snr_db").get<std::string>();
        a.grid_lo = cfg.at("grid_lo").get<double>();
        a.grid_hi = cfg.at("grid_hi").get<double>();
        a.grid_step = cfg.at("grid_step").get<double>();
        a.reps = cfg.at("reps").get<int>();
        a.capture_s = cfg.at("capture_s").get<double>();
        a.include_carrier_offset = cfg.at("include_carrier_offset").get<bool>();
        return run_sweep_cmd(a);
    }
    if (command == "evaluate") {
        EvaluateArgs a;
        a.out_dir = out_dir_override;
        a.seed = seeds.at("policy").get<std::uint64_t>();
        a.dataset = cfg.at("dataset").get<std::string>();
        a.dt_online_min = cfg.at("dt_online_min").get<int>();
        a.n_online = cfg.at("n_online").get<int>();
        a.n_initial = cfg.at("n_initial").get<int>();
        a.lr = cfg.at("lr").get<double>();
        a.threshold_us = cfg.at("threshold_us").get<double>();
        a.prob = cfg.at("prob").get<double>();
        a.cap_min = cfg.at("cap_min").get<int>();
        a.n_online_lo = cfg.at("n_online_lo").get<int>();
        a.n_online_hi = cfg.at("n_online_hi").get<int>();
        a.with_oracle = cfg.at("with_oracle").get<bool>();
        a.with_pacf = cfg.at("with_pacf").get<bool>();
        return run_evaluate(a);
    }
    throw std::runtime_error("rerun: unknown command in manifest: " + command);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"clocklab: oscillator skew measurement and online clock-drift compensation lab"};
    app.require_subcommand(1);

    GenDataArgs gen;
    auto* cmd_gen = app.add_subcommand("gen-data", "synthesize a measurement dataset CSV");
    cmd_gen->add_option("--out-dir", gen.out_dir, "output directory")->capture_default_str()->envname("CLOCKLAB_OUT_DIR");
    cmd_gen->add_option("--seed", gen.seed, "dataset RNG seed")->capture_default_str()->envname("CLOCKLAB_SEED");
    cmd_gen->add_option("--duration-h", gen.duration_h, "dataset length in hours")->capture_default_str();
    cmd_gen->add_option("--temp-mean", gen.temp_mean_c, "mean temperature, deg C")->capture_default_str();
    cmd_gen->add_option("--temp-amplitude", gen.temp_amplitude_c, "diurnal amplitude, deg C")->capture_default_str();
    cmd_gen->add_option("--temp-trend", gen.temp_trend_c_per_day, "warm-front slope, deg C per day")->capture_default_str();
    cmd_gen->add_option("--temp-trend-start-h", gen.temp_trend_start_h, "hour the warm front starts")->capture_default_str();
    cmd_gen->add_option("--temp-ar-phi", gen.temp_ar_phi, "AR(1) weather-noise coefficient")->capture_default_str();
    cmd_gen->add_option("--temp-ar-sigma", gen.temp_ar_sigma_c, "AR(1) innovation std, deg C")->capture_default_str();
    cmd_gen->add_option("--profile-c0", gen.profile_c0, "ppm(T) constant term")->capture_default_str();
    cmd_gen->add_option("--profile-c1", gen.profile_c1, "ppm(T) linear term")->capture_default_str();
    cmd_gen->add_option("--profile-c2", gen.profile_c2, "ppm(T) quadratic term")->capture_default_str();
    cmd_gen->add_option("--tone-noise", gen.tone_noise_ppm, "tone measurement noise std, ppm")->capture_default_str();
    cmd_gen->add_option("--lte-noise", gen.lte_noise_ppm, "LTE measurement noise std, ppm")->capture_default_str();

    SweepArgs sweep;
    auto* cmd_swp = app.add_subcommand("sweep-ppm", "estimator accuracy sweep over -0.5..0.5 ppm");
    cmd_swp->add_option("--out-dir", sweep.out_dir, "output directory")->capture_default_str()->envname("CLOCKLAB_OUT_DIR");
    cmd_swp->add_option("--seed", sweep.seed, "sweep RNG seed")->capture_default_str()->envname("CLOCKLAB_SEED");
    cmd_swp->add_option("--estimator", sweep.estimator, "tone or lte")->capture_default_str()
        ->check(CLI::IsMember({"tone", "lte"}));
    cmd_swp->add_option("--snr-db", sweep.snr_db, "capture SNR in dB, or 'none'")->capture_default_str();
    cmd_swp->add_option("--grid-lo", sweep.grid_lo, "sweep start, ppm")->capture_default_str();
    cmd_swp->add_option("--grid-hi", sweep.grid_hi, "sweep end, ppm")->capture_default_str();
    cmd_swp->add_option("--grid-step", sweep.grid_step, "sweep step, ppm")->capture_default_str();
    cmd_swp->add_option("--reps", sweep.reps, "captures per grid point")->capture_default_str();
    cmd_swp->add_option("--capture-s", sweep.capture_s, "capture length in seconds (0 = estimator default)")->capture_default_str();
    cmd_swp->add_flag("--include-carrier-offset", sweep.include_carrier_offset,
                      "model the shared-LO carrier shift");

    EvaluateArgs ev;
    auto* cmd_ev = app.add_subcommand("evaluate", "compensation methods: CDFs, resync intervals, n_online sweep");
    cmd_ev->add_option("--dataset", ev.dataset, "dataset CSV path")->required();
    cmd_ev->add_option("--out-dir", ev.out_dir, "output directory")->capture_default_str()->envname("CLOCKLAB_OUT_DIR");
    cmd_ev->add_option("--seed", ev.seed, "policy RNG seed")->capture_default_str()->envname("CLOCKLAB_SEED");
    cmd_ev->add_option("--dt-online-min", ev.dt_online_min, "minutes between resyncs/updates")->capture_default_str();
    cmd_ev->add_option("--n-online", ev.n_online, "epochs per online update")->capture_default_str();
    cmd_ev->add_option("--n-initial", ev.n_initial, "initial training epochs")->capture_default_str();
    cmd_ev->add_option("--lr", ev.lr, "Adam learning rate")->capture_default_str();
    cmd_ev->add_option("--threshold-us", ev.threshold_us, "clock-offset budget, microseconds")->capture_default_str();
    cmd_ev->add_option("--prob", ev.prob, "required fraction of minutes within budget")->capture_default_str();
    cmd_ev->add_option("--cap-min", ev.cap_min, "largest resync period scanned")->capture_default_str();
    cmd_ev->add_option("--n-online-lo", ev.n_online_lo, "n_online sweep start")->capture_default_str();
    cmd_ev->add_option("--n-online-hi", ev.n_online_hi, "n_online sweep end")->capture_default_str();
    cmd_ev->add_flag("--oracle", ev.with_oracle, "include the perfect-predictor reference");
    cmd_ev->add_flag("--pacf", ev.with_pacf, "emit the PACF table of the measured clock offset");

    std::string rerun_manifest, rerun_out = "out";
    auto* cmd_rr = app.add_subcommand("rerun", "reproduce a command from its manifest");
    cmd_rr->add_option("manifest", rerun_manifest, "manifest.json path")->required();
    cmd_rr->add_option("--out-dir", rerun_out, "output directory")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (*cmd_gen) return run_gen_data(gen);
        if (*cmd_swp) return run_sweep_cmd(sweep);
        if (*cmd_ev) return run_evaluate(ev);
        if (*cmd_rr) return run_rerun(rerun_manifest, rerun_out);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::runtime_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    }
    return 1;
}
