#include "ximpact/cli.hpp"

#include "ximpact/csv.hpp"
#include "ximpact/ingest.hpp"
#include "ximpact/log.hpp"
#include "ximpact/metrics.hpp"
#include "ximpact/models.hpp"
#include "ximpact/moments.hpp"
#include "ximpact/ratecurve.hpp"
#include "ximpact/simulator.hpp"
#include "ximpact/stats.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <thread>

namespace ximpact::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr const char* kSchemaVersion = "1";

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

Matrix json_matrix(const json& j) {
    const auto rows = static_cast<Index>(j.size());
    if (rows == 0) return {};
    const auto cols = static_cast<Index>(j.at(0).size());
    Matrix m(rows, cols);
    for (Index r = 0; r < rows; ++r)
        for (Index c = 0; c < cols; ++c)
            m(r, c) = j.at(static_cast<std::size_t>(r)).at(static_cast<std::size_t>(c)).get<double>();
    return m;
}

json matrix_json(const Matrix& m) {
    json out = json::array();
    for (Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        out.push_back(std::move(row));
    }
    return out;
}

json vector_json(const Vector& v) {
    json out = json::array();
    for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

std::vector<double> json_doubles(const json& j) {
    std::vector<double> out;
    for (const auto& v : j) out.push_back(v.get<double>());
    return out;
}

struct Context {
    json config;
    fs::path out_dir;
    std::uint64_t seed = 1;
    int workers = 1;
    std::vector<std::string> outputs;

    template <class T>
    T get(const std::string& key, T fallback) const {
        if (config.contains(key)) return config.at(key).get<T>();
        return fallback;
    }

    fs::path path(const std::string& name) const { return out_dir / name; }

    std::ofstream open(const std::string& name) {
        const fs::path p = path(name);
        std::ofstream out(p);
        if (!out) throw std::runtime_error("cannot write " + p.string());
        outputs.push_back(name);
        return out;
    }
};

void write_manifest(Context& ctx, const std::string& command) {
    json manifest;
    manifest["command"] = command;
    manifest["schema_version"] = kSchemaVersion;
    manifest["seed"] = ctx.seed;
    char hash[32];
    std::snprintf(hash, sizeof(hash), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(ctx.config.dump())));
    manifest["config_hash"] = hash;
    manifest["outputs"] = ctx.outputs;
    std::ofstream out(ctx.path("manifest.json"));
    if (!out) throw std::runtime_error("cannot write manifest.json");
    out << manifest.dump(2) << '\n';
}

std::vector<std::string> universe_of(const Context& ctx) {
    if (!ctx.config.contains("universe"))
        throw std::invalid_argument("config: missing 'universe'");
    return ctx.config.at("universe").get<std::vector<std::string>>();
}

struct Inputs {
    std::vector<TickRecord> ticks;
    TradingCalendar calendar;
    std::vector<std::string> assets;
};

Inputs load_inputs(const Context& ctx) {
    if (!ctx.config.contains("inputs"))
        throw std::invalid_argument("config: missing 'inputs' section");
    const json& in = ctx.config.at("inputs");
    Inputs loaded;
    loaded.assets = universe_of(ctx);
    if (!in.contains("ticks") || !in.contains("calendar"))
        throw std::invalid_argument("config: inputs.ticks and inputs.calendar are required");
    auto result = load_ticks(in.at("ticks").get<std::string>(), loaded.assets);
    for (const auto& issue : result.issues)
        log::warn("line " + std::to_string(issue.line) + ": " + issue.message);
    loaded.ticks = std::move(result.ticks);
    loaded.calendar = load_calendar(in.at("calendar").get<std::string>());
    return loaded;
}

std::vector<ModelKind> models_of(const Context& ctx) {
    std::vector<ModelKind> kinds;
    for (const auto& name :
         ctx.get<std::vector<std::string>>("models", {"diagonal", "ml", "kyle"}))
        kinds.push_back(model_kind_from_string(name));
    return kinds;
}

WeightSpec weight_of(const Context& ctx) {
    return WeightSpec::parse(ctx.get<std::string>("weight", "basket"));
}

VolMode vol_mode_of(const Context& ctx) {
    const std::string mode = ctx.get<std::string>("vol_mode", "same_day");
    if (mode == "same_day") return VolMode::SameDay;
    if (mode == "lagged") return VolMode::Lagged;
    throw std::invalid_argument("config: vol_mode must be same_day or lagged");
}

DaySplit split_of(const Context& ctx, int n_days) {
    if (ctx.config.contains("split")) {
        const json& s = ctx.config.at("split");
        if (s.contains("train_days")) {
            DaySplit split;
            split.train_days = s.at("train_days").get<std::vector<int>>();
            split.test_days = s.at("test_days").get<std::vector<int>>();
            return split;
        }
        return chronological_split(n_days, s.at("train_fraction").get<double>());
    }
    return chronological_split(n_days, 0.5);
}

std::vector<double> tau_grid_of(const Context& ctx) {
    if (ctx.config.contains("tau_grid")) return json_doubles(ctx.config.at("tau_grid"));
    return default_tau_grid();
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

int cmd_simulate(Context& ctx) {
    if (!ctx.config.contains("simulate"))
        throw std::invalid_argument("config: missing 'simulate' section");
    const json& sim = ctx.config.at("simulate");
    const std::string kind = sim.at("kind").get<std::string>();

    json truth;
    std::vector<TickRecord> ticks;
    TradingCalendar calendar;
    std::vector<std::string> assets;

    if (kind == "bin") {
        BinSimConfig cfg;
        cfg.n_assets = sim.at("n_assets").get<int>();
        cfg.lambda_true = json_matrix(sim.at("lambda"));
        cfg.omega_true = json_matrix(sim.at("omega"));
        cfg.sigma_eta_true = json_matrix(sim.at("sigma_eta"));
        cfg.n_bins = sim.at("n_bins").get<long>();
        cfg.bins_per_day = sim.value("bins_per_day", 500);
        cfg.tau_seconds = sim.value("tau", 60.0);
        cfg.seed = ctx.seed;
        const BinSimResult result = simulate_bin_level(cfg);
        const TickStream stream = materialize_ticks(result.panel);
        ticks = stream.ticks;
        calendar = stream.calendar;
        assets = result.panel.assets;
        truth["kind"] = "bin";
        truth["tau"] = cfg.tau_seconds;
        truth["lambda"] = matrix_json(result.truth.lambda);
        truth["omega"] = matrix_json(result.truth.omega);
        truth["sigma"] = matrix_json(result.truth.sigma);
    } else if (kind == "tick") {
        TickSimConfig cfg;
        cfg.n_assets = sim.value("n_assets", 1);
        cfg.days = sim.value("days", 5);
        cfg.session_seconds = sim.value("session_seconds", 23400.0);
        if (sim.contains("trade_rate")) cfg.trade_rate = json_doubles(sim.at("trade_rate"));
        if (sim.contains("sign_persistence"))
            cfg.sign_persistence = json_doubles(sim.at("sign_persistence"));
        if (sim.contains("volume_scale")) cfg.volume_scale = json_doubles(sim.at("volume_scale"));
        if (sim.contains("impact_coef")) cfg.impact_coef = json_doubles(sim.at("impact_coef"));
        cfg.rho_star = sim.value("rho_star", 0.0);
        if (sim.value("kernel", "exponential") == "powerlaw") cfg.kernel = KernelKind::PowerLaw;
        cfg.kernel_half_life = sim.value("kernel_half_life", 60.0);
        cfg.powerlaw_beta = sim.value("powerlaw_beta", 0.7);
        cfg.powerlaw_t0 = sim.value("powerlaw_t0", 1.0);
        cfg.powerlaw_cutoff = sim.value("powerlaw_cutoff", 1000);
        cfg.saturation = sim.value("saturation", false);
        if (sim.contains("saturation_scale"))
            cfg.saturation_scale = json_doubles(sim.at("saturation_scale"));
        cfg.noise_sigma = sim.value("noise_sigma", 0.02);
        cfg.quote_noise = sim.value("quote_noise", 0.0);
        cfg.half_spread = sim.value("half_spread", 0.005);
        cfg.seed = ctx.seed;
        TickSimResult result = simulate_ticks(cfg);
        ticks = std::move(result.ticks);
        calendar = std::move(result.calendar);
        assets = result.assets;
        truth["kind"] = "tick";
        truth["rho_star"] = result.rho_star;
        truth["trade_rate"] = cfg.trade_rate;
        truth["sign_persistence"] = cfg.sign_persistence;
        truth["saturation"] = cfg.saturation;
    } else {
        throw std::invalid_argument("simulate.kind must be 'bin' or 'tick'");
    }

    write_ticks(ticks, assets, ctx.path("ticks.csv").string());
    ctx.outputs.push_back("ticks.csv");
    write_calendar(calendar, ctx.path("calendar.csv").string());
    ctx.outputs.push_back("calendar.csv");
    truth["seed"] = ctx.seed;
    truth["assets"] = assets;
    ctx.open("truth.json") << truth.dump(2) << '\n';
    write_manifest(ctx, "simulate");
    return 0;
}

// ---------------------------------------------------------------------------
// bin
// ---------------------------------------------------------------------------

int cmd_bin(Context& ctx) {
    const Inputs in = load_inputs(ctx);
    const double tau = ctx.get<double>("tau", 60.0);
    const BinnedPanel panel = bin_ticks(in.ticks, tau, in.calendar, in.assets);
    write_panel_csv(panel, ctx.path("panel.csv").string());
    ctx.outputs.push_back("panel.csv");
    write_manifest(ctx, "bin");
    return 0;
}

// ---------------------------------------------------------------------------
// estimate
// ---------------------------------------------------------------------------

void write_matrix_csv(Context& ctx, const std::string& name, const Matrix& m,
                      const std::vector<std::string>& labels) {
    auto out = ctx.open(name);
    out << "asset";
    for (const auto& l : labels) out << ',' << l;
    out << '\n';
    for (Index i = 0; i < m.rows(); ++i) {
        out << labels[static_cast<std::size_t>(i)];
        for (Index j = 0; j < m.cols(); ++j) out << ',' << csv::format_double(m(i, j));
        out << '\n';
    }
}

int cmd_estimate(Context& ctx) {
    const Inputs in = load_inputs(ctx);
    const double tau = ctx.get<double>("tau", 60.0);
    const BinnedPanel panel = bin_ticks(in.ticks, tau, in.calendar, in.assets);
    const DailyVols vols = daily_vols(panel);
    const StationaryCorrelations corr = stationary_correlations(panel, vols);

    auto out = ctx.open("moments.json");
    json days = json::array();
    for (std::size_t k = 0; k < vols.days.size(); ++k) {
        const MomentSet ms = reconstruct_moments(vols, corr, static_cast<int>(k));
        json d;
        d["day"] = vols.days[k];
        d["sigma_hat"] = vector_json(vols.sigma.row(static_cast<Index>(k)).transpose());
        d["omega_hat"] = vector_json(vols.omega.row(static_cast<Index>(k)).transpose());
        d["Sigma"] = matrix_json(ms.Sigma);
        d["Omega"] = matrix_json(ms.Omega);
        d["R"] = matrix_json(ms.R);
        days.push_back(std::move(d));
    }
    json root;
    root["tau"] = tau;
    root["assets"] = in.assets;
    root["sigma_bar"] = vector_json(vols.sigma_bar);
    root["omega_bar"] = vector_json(vols.omega_bar);
    root["days"] = days;
    out << root.dump(2) << '\n';

    write_matrix_csv(ctx, "rho_dp.csv", corr.rho_dp, in.assets);
    write_matrix_csv(ctx, "rho_q.csv", corr.rho_q, in.assets);
    write_matrix_csv(ctx, "rho_dpq.csv", corr.rho_dpq, in.assets);
    write_manifest(ctx, "estimate");
    return 0;
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

// Covariates at reference settings: f over the full sample, correlation and
// liquidity at the 300 s bin. Degenerate reference panels fall back to
// zeros with a warning instead of failing the command.
struct Covariates {
    Vector freq;
    Matrix rho;
    Vector liq;
};

Covariates reference_covariates(const Inputs& in) {
    const int n = static_cast<int>(in.assets.size());
    Covariates cov;
    cov.freq = trading_frequency(in.ticks, in.calendar, n);
    cov.rho = Matrix::Identity(n, n);
    cov.liq = Vector::Zero(n);
    constexpr double kRefTau = 300.0;
    try {
        const BinnedPanel ref = bin_ticks(in.ticks, kRefTau, in.calendar, in.assets);
        const DailyVols vols = daily_vols(ref);
        cov.rho = stationary_correlations(ref, vols).rho_dp;
        cov.liq = liquidity(vols, kRefTau);
    } catch (const std::invalid_argument& e) {
        log::warn(std::string("reference covariates unavailable: ") + e.what());
    }
    return cov;
}

int cmd_fit(Context& ctx) {
    const Inputs in = load_inputs(ctx);
    const double tau = ctx.get<double>("tau", 60.0);
    const BinnedPanel panel = bin_ticks(in.ticks, tau, in.calendar, in.assets);
    const DaySplit split = split_of(ctx, panel.n_days());
    const WeightSpec weight = weight_of(ctx);
    const VolMode vol_mode = vol_mode_of(ctx);
    const Covariates cov = reference_covariates(in);

    const BinnedPanel train = panel_subset(panel, split.train_days);
    const DailyVols train_vols = daily_vols(train);
    const StationaryCorrelations corr = stationary_correlations(train, train_vols);
    const DailyVols vols_all = daily_vols(panel);

    const Vector mean_sigma_sq =
        train_vols.sigma.array().square().colwise().mean().transpose().matrix();
    Matrix mean_sigma_mat = Matrix::Zero(panel.n_assets(), panel.n_assets());
    for (std::size_t k = 0; k < train_vols.days.size(); ++k)
        mean_sigma_mat += reconstruct_moments(train_vols, corr, static_cast<int>(k)).Sigma;
    mean_sigma_mat /= static_cast<double>(train_vols.days.size());
    const Matrix M = realize_weight(weight, mean_sigma_sq, mean_sigma_mat);

    auto out = ctx.open("fit_reports.jsonl");
    const MomentSet train_ms = sample_moments(train);
    for (const ModelKind kind : models_of(ctx)) {
        const double y = calibrate_y_daily(panel, train_vols, corr, split.train_days, kind, M);
        const double y_diag =
            calibrate_y_daily(panel, train_vols, corr, split.train_days, ModelKind::Diagonal, M);

        // Fitted impact matrix at the pooled training moments.
        json impact;
        impact["kind"] = to_string(kind);
        impact["y"] = y;
        impact["tau_seconds"] = tau;
        impact["lambda"] = matrix_json(build_lambda(kind, train_ms, y));
        ctx.open("impact_" + to_string(kind) + ".json") << impact.dump(2) << '\n';
        for (const Segment segment : {Segment::InSample, Segment::OutOfSample}) {
            const auto& days =
                segment == Segment::InSample ? split.train_days : split.test_days;
            const SegmentEval model =
                evaluate_segment(panel, vols_all, corr, days, kind, y, M, vol_mode);
            const SegmentEval diag = evaluate_segment(panel, vols_all, corr, days,
                                                      ModelKind::Diagonal, y_diag, M, vol_mode);
            json rec;
            rec["model"] = to_string(kind);
            rec["weight"] = weight.tag();
            rec["segment"] = to_string(segment);
            rec["tau"] = tau;
            rec["r2"] = model.r2;
            rec["r2_diag"] = diag.r2;
            rec["delta_r2"] = model.r2 - diag.r2;
            rec["y"] = y;
            rec["n_bins"] = model.n_bins;
            rec["f"] = vector_json(cov.freq);
            rec["liq"] = vector_json(cov.liq);
            rec["rho"] = matrix_json(cov.rho);
            out << rec.dump() << '\n';
        }
    }
    write_manifest(ctx, "fit");
    return 0;
}

// ---------------------------------------------------------------------------
// scan
// ---------------------------------------------------------------------------

int cmd_scan(Context& ctx) {
    const Inputs in = load_inputs(ctx);
    const int n = static_cast<int>(in.assets.size());
    const std::vector<double> grid = tau_grid_of(ctx);
    const WeightSpec weight = weight_of(ctx);
    const Covariates cov = reference_covariates(in);
    const Vector& freq = cov.freq;
    const Vector& liq = cov.liq;

    // Scan units: the whole universe for 1 or 2 assets, otherwise pairs from
    // the config or correlation-stratified sampling.
    std::vector<std::vector<int>> units;
    if (n <= 2) {
        std::vector<int> all(static_cast<std::size_t>(n));
        for (int a = 0; a < n; ++a) all[static_cast<std::size_t>(a)] = a;
        units.push_back(all);
    } else if (ctx.config.contains("pairs") && ctx.config.at("pairs").is_array()) {
        for (const auto& p : ctx.config.at("pairs"))
            units.push_back({p.at(0).get<int>(), p.at(1).get<int>()});
    } else {
        int buckets = 10;
        if (ctx.config.contains("pairs"))
            buckets = ctx.config.at("pairs").value("buckets", 10);
        for (const auto& [i, j] : pair_sampling(cov.rho, buckets)) units.push_back({i, j});
    }

    auto records = ctx.open("scan_records.jsonl");
    auto summary = ctx.open("scan_summary.csv");
    summary << "pair_i,pair_j,model,weight,tau_star,r2_star,delta_r2_star,f_i,f_j,rho,liq_i,"
               "liq_j\n";

    for (const auto& unit : units) {
        // Slice ticks and remap indices for the unit's sub-universe.
        std::vector<std::string> sub_assets;
        std::vector<int> remap(static_cast<std::size_t>(n), -1);
        for (std::size_t k = 0; k < unit.size(); ++k) {
            remap[static_cast<std::size_t>(unit[k])] = static_cast<int>(k);
            sub_assets.push_back(in.assets[static_cast<std::size_t>(unit[k])]);
        }
        std::vector<TickRecord> sub_ticks;
        for (const auto& t : in.ticks) {
            if (remap[static_cast<std::size_t>(t.asset)] < 0) continue;
            TickRecord copy = t;
            copy.asset = remap[static_cast<std::size_t>(t.asset)];
            sub_ticks.push_back(copy);
        }
        const DaySplit split = split_of(ctx, in.calendar.n_days());

        WeightSpec unit_weight = weight;
        if (weight.kind == WeightSpec::Kind::SingleAsset)
            unit_weight.asset = remap[static_cast<std::size_t>(weight.asset)];

        for (const ModelKind kind : models_of(ctx)) {
            ScanOptions opts;
            opts.kind = kind;
            opts.weight = unit_weight;
            opts.vol_mode = vol_mode_of(ctx);
            opts.min_eval_bins = ctx.get<long>("min_eval_bins", 100);
            opts.workers = ctx.workers;
            const ScanResult res =
                scan_bin_sizes(sub_ticks, in.calendar, sub_assets, grid, split, opts);

            const int i = unit.front();
            const int j = unit.back();
            for (const auto& e : res.entries) {
                json rec;
                rec["pair"] = {i, j};
                rec["model"] = to_string(kind);
                rec["weight"] = unit_weight.tag();
                rec["segment"] = res.segment;
                rec["tau"] = e.tau;
                rec["valid"] = e.valid;
                rec["r2"] = e.r2;
                rec["r2_diag"] = e.r2_diag;
                rec["delta_r2"] = e.delta_r2;
                rec["y"] = e.y;
                rec["n_eval_bins"] = e.n_eval_bins;
                records << rec.dump() << '\n';
            }
            summary << i << ',' << j << ',' << to_string(kind) << ',' << unit_weight.tag() << ','
                    << csv::format_double(res.tau_star) << ','
                    << csv::format_double(res.r2_star) << ','
                    << csv::format_double(res.delta_r2_star) << ','
                    << csv::format_double(freq(i)) << ',' << csv::format_double(freq(j)) << ','
                    << csv::format_double(i == j ? 1.0 : cov.rho(i, j)) << ','
                    << csv::format_double(liq(i)) << ',' << csv::format_double(liq(j)) << '\n';
        }
    }
    write_manifest(ctx, "scan");
    return 0;
}

// ---------------------------------------------------------------------------
// rates
// ---------------------------------------------------------------------------

int cmd_rates(Context& ctx) {
    if (!ctx.config.contains("rates"))
        throw std::invalid_argument("config: missing 'rates' section");
    const json& rates = ctx.config.at("rates");
    const Inputs in = load_inputs(ctx);
    const double tau = rates.value("tau", 1800.0);
    const BinnedPanel panel = bin_ticks(in.ticks, tau, in.calendar, in.assets);
    const DaySplit split = split_of(ctx, panel.n_days());
    const int n = panel.n_assets();

    std::vector<int> ordering;
    if (rates.contains("ordering")) {
        ordering = rates.at("ordering").get<std::vector<int>>();
    } else {
        for (int a = 0; a < n; ++a) ordering.push_back(a);
    }

    std::vector<TenorMeta> meta;
    if (!rates.contains("tenors"))
        throw std::invalid_argument("config: rates.tenors metadata is required");
    for (const auto& t : rates.at("tenors")) {
        TenorMeta m;
        m.asset = t.at("asset").get<int>();
        m.kind = t.value("kind", "cash") == "future" ? InstrumentKind::BondFuture
                                                     : InstrumentKind::CashBond;
        m.tenor_years = t.at("tenor").get<double>();
        m.notional = t.value("notional", 100.0);
        // Mean price from the panel unless pinned in the config.
        m.mean_price = t.contains("mean_price") ? t.at("mean_price").get<double>()
                                                : panel.p_open.col(m.asset).mean();
        meta.push_back(m);
    }
    if (static_cast<int>(meta.size()) != n)
        throw std::invalid_argument("config: rates.tenors must cover the universe");
    std::sort(meta.begin(), meta.end(),
              [](const TenorMeta& a, const TenorMeta& b) { return a.asset < b.asset; });
    for (int a = 0; a < n; ++a)
        if (meta[static_cast<std::size_t>(a)].asset != a)
            throw std::invalid_argument("config: rates.tenors must list each asset exactly once");

    NestedTableOptions opts;
    opts.kind = model_kind_from_string(rates.value("model", "ml"));
    opts.vol_mode = vol_mode_of(ctx);

    opts.segment = Segment::InSample;
    const Matrix table_in = nested_r2_table(panel, split, ordering, opts);
    opts.segment = Segment::OutOfSample;
    const Matrix table_out = nested_r2_table(panel, split, ordering, opts);
    write_matrix_csv(ctx, "nested_r2_in.csv", table_in, in.assets);
    write_matrix_csv(ctx, "nested_r2_out.csv", table_out, in.assets);

    // Kyle matrix from training sample moments, then both normalizations.
    const BinnedPanel train = panel_subset(panel, split.train_days);
    const MomentSet ms = sample_moments(train);
    const Matrix kyle = lambda_kyle(ms, 1.0);
    write_matrix_csv(ctx, "kyle_relative.csv", normalize_relative(kyle, meta), in.assets);
    write_matrix_csv(ctx, "kyle_yield.csv", normalize_yield(kyle, meta), in.assets);

    json units;
    units["kyle_relative.csv"] =
        "relative price change, basis points per 100M currency traded";
    units["kyle_yield.csv"] =
        "annual yield change, basis points per 100M currency of 10-year-equivalent volume";
    units["tau"] = tau;
    ctx.open("kyle_units.json") << units.dump(2) << '\n';
    write_manifest(ctx, "rates");
    return 0;
}

// ---------------------------------------------------------------------------
// significance
// ---------------------------------------------------------------------------

int cmd_significance(Context& ctx) {
    const Inputs in = load_inputs(ctx);
    const double tau = ctx.get<double>("tau", 60.0);
    const double alpha = ctx.config.contains("significance")
                             ? ctx.config.at("significance").value("alpha", 0.05)
                             : 0.05;
    const BinnedPanel panel = bin_ticks(in.ticks, tau, in.calendar, in.assets);
    const DaySplit split = split_of(ctx, panel.n_days());
    const ModelKind kind = models_of(ctx).front();
    const VolMode vol_mode = vol_mode_of(ctx);

    const BinnedPanel train = panel_subset(panel, split.train_days);
    const DailyVols train_vols = daily_vols(train);
    const StationaryCorrelations corr = stationary_correlations(train, train_vols);
    const DailyVols vols_all = daily_vols(panel);

    auto out = ctx.open("significance.jsonl");
    std::vector<double> pvalues;
    for (int a = 0; a < panel.n_assets(); ++a) {
        // Pool out-of-sample realized/predicted pairs for asset a.
        std::vector<double> realized, predicted;
        for (const int day : split.test_days) {
            const int pos = vols_all.day_pos(day);
            if (pos < 0) continue;
            const MomentSet ms = reconstruct_moments(vols_all, corr, pos);
            Matrix lambda;
            try {
                lambda = build_lambda(kind, ms, 1.0);
            } catch (const std::invalid_argument&) {
                continue;
            }
            const auto span = panel.day_spans[static_cast<std::size_t>(day)];
            for (Index b = span.first; b < span.second; ++b) {
                double ph = 0.0;
                for (int j = 0; j < panel.n_assets(); ++j) ph += lambda(a, j) * panel.flow(b, j);
                realized.push_back(panel.delta_p(b, a));
                predicted.push_back(ph);
            }
        }
        (void)vol_mode;
        const auto nobs = static_cast<Index>(realized.size());
        Vector rv(nobs), pv(nobs);
        for (Index t = 0; t < nobs; ++t) {
            rv(t) = realized[static_cast<std::size_t>(t)];
            pv(t) = predicted[static_cast<std::size_t>(t)];
        }
        json rec;
        rec["asset"] = in.assets[static_cast<std::size_t>(a)];
        rec["model"] = to_string(kind);
        rec["tau"] = tau;
        try {
            const SignificanceReport robust = robust_f_pvalue(rv, pv);
            rec["f_stat"] = robust.f_stat;
            rec["p"] = robust.p_value;
            rec["robust"] = true;
            rec["n"] = robust.n;
            pvalues.push_back(robust.p_value);
        } catch (const std::invalid_argument& err) {
            rec["error"] = err.what();
            pvalues.push_back(1.0);
        }
        out << rec.dump() << '\n';
    }

    const auto bonf = bonferroni(pvalues, alpha);
    const auto bh = benjamini_hochberg(pvalues, alpha);
    auto table = ctx.open("multiple_testing.csv");
    table << "asset,p,bonferroni_reject,bh_reject\n";
    for (std::size_t a = 0; a < pvalues.size(); ++a)
        table << in.assets[a] << ',' << csv::format_double(pvalues[a]) << ','
              << static_cast<int>(bonf[a]) << ',' << static_cast<int>(bh[a]) << '\n';
    write_manifest(ctx, "significance");
    return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
    CLI::App app{"cross-impact estimation toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_override;
    std::optional<std::uint64_t> seed_override;
    std::optional<int> workers_override;
    std::string tau_grid_override;
    std::string models_override;
    std::string weight_override;

    const std::vector<std::string> names = {"simulate", "bin",   "estimate",    "fit",
                                            "scan",     "rates", "significance"};
    for (const auto& name : names) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "configuration file (JSON)")->required();
        sub->add_option("--out", out_override, "output directory");
        sub->add_option("--seed", seed_override, "RNG seed override");
        sub->add_option("--workers", workers_override, "worker threads");
        sub->add_option("--tau-grid", tau_grid_override, "comma-separated bin sizes (seconds)");
        sub->add_option("--models", models_override, "comma-separated model kinds");
        sub->add_option("--weight", weight_override, "basket | asset:i | invcov");
    }

    std::vector<const char*> argv;
    argv.push_back("ximpact");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        Context ctx;
        {
            std::ifstream in(config_path);
            if (!in) throw std::invalid_argument("cannot open config: " + config_path);
            in >> ctx.config;
        }
        // Flags win over file values.
        if (!out_override.empty()) ctx.config["out"] = out_override;
        if (seed_override) ctx.config["seed"] = *seed_override;
        if (workers_override) ctx.config["workers"] = *workers_override;
        if (!tau_grid_override.empty()) {
            json grid = json::array();
            for (const auto field : csv::split(tau_grid_override))
                grid.push_back(csv::parse_double(field).value());
            ctx.config["tau_grid"] = grid;
        }
        if (!models_override.empty()) {
            json kinds = json::array();
            for (const auto field : csv::split(models_override))
                kinds.push_back(std::string(field));
            ctx.config["models"] = kinds;
        }
        if (!weight_override.empty()) ctx.config["weight"] = weight_override;

        ctx.seed = ctx.get<std::uint64_t>("seed", 1);
        ctx.workers = ctx.get<int>("workers", 0);
        if (ctx.workers <= 0)
            ctx.workers = std::max(1u, std::thread::hardware_concurrency());
        ctx.out_dir = ctx.get<std::string>("out", "out");
        fs::create_directories(ctx.out_dir);

        const std::string command = app.get_subcommands().front()->get_name();
        if (command == "simulate") return cmd_simulate(ctx);
        if (command == "bin") return cmd_bin(ctx);
        if (command == "estimate") return cmd_estimate(ctx);
        if (command == "fit") return cmd_fit(ctx);
        if (command == "scan") return cmd_scan(ctx);
        if (command == "rates") return cmd_rates(ctx);
        if (command == "significance") return cmd_significance(ctx);
        throw std::logic_error("unhandled command");
    } catch (const std::exception& e) {
        log::error(e.what());
        std::fprintf(stderr, "ximpact: %s\n", e.what());
        return 1;
    }
}

int run(int argc, const char* const* argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args);
}

}  // namespace ximpact::cli
