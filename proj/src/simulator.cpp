#include "ximpact/simulator.hpp"

#include "ximpact/linalg.hpp"
#include "ximpact/rng.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

namespace ximpact {

namespace {

constexpr std::int64_t kDayNs = 86'400'000'000'000;

std::vector<std::string> default_names(int n) {
    std::vector<std::string> names;
    names.reserve(static_cast<std::size_t>(n));
    for (int a = 0; a < n; ++a) names.push_back("A" + std::to_string(a));
    return names;
}

// Stream key tags so independent consumers never collide.
enum : std::uint64_t {
    kTagFlows = 0x66,
    kTagNoise = 0x6e,
    kTagTrades = 0x72,
    kTagCommon = 0xc0,
    kTagQuote = 0x71,
};

}  // namespace

void BinSimConfig::validate() const {
    if (n_assets < 1) throw std::invalid_argument("bin sim: need at least one asset");
    const Index n = n_assets;
    if (lambda_true.rows() != n || lambda_true.cols() != n || omega_true.rows() != n ||
        omega_true.cols() != n || sigma_eta_true.rows() != n || sigma_eta_true.cols() != n)
        throw std::invalid_argument("bin sim: matrix dimensions disagree with n_assets");
    if (n_bins < 1 || bins_per_day < 1) throw std::invalid_argument("bin sim: need bins");
    if (!(tau_seconds > 0.0)) throw std::invalid_argument("bin sim: tau must be positive");
    detail::require_symmetric(omega_true, kSymmetryTol, "bin sim omega");
    detail::require_symmetric(sigma_eta_true, kSymmetryTol, "bin sim sigma_eta");
}

PlantedMoments planted_moments(const BinSimConfig& cfg) {
    cfg.validate();
    PlantedMoments truth;
    truth.lambda = cfg.lambda_true;
    truth.omega = cfg.omega_true;
    truth.sigma =
        cfg.lambda_true * cfg.omega_true * cfg.lambda_true.transpose() + cfg.sigma_eta_true;
    truth.sigma = 0.5 * (truth.sigma + truth.sigma.transpose());
    return truth;
}

BinSimResult simulate_bin_level(const BinSimConfig& cfg) {
    cfg.validate();
    const int n = cfg.n_assets;
    const Matrix flow_factor = matrix_sqrt(clip_to_psd(cfg.omega_true));
    const Matrix noise_factor = matrix_sqrt(clip_to_psd(cfg.sigma_eta_true));
    const auto tau_ns = static_cast<std::int64_t>(std::llround(cfg.tau_seconds * 1e9));

    BinSimResult out;
    out.truth = planted_moments(cfg);
    BinnedPanel& panel = out.panel;
    panel.tau_seconds = cfg.tau_seconds;
    panel.assets = default_names(n);
    panel.p_open.resize(cfg.n_bins, n);
    panel.delta_p.resize(cfg.n_bins, n);
    panel.flow.resize(cfg.n_bins, n);
    panel.bin_open_ts.resize(static_cast<std::size_t>(cfg.n_bins));
    panel.day_index.resize(static_cast<std::size_t>(cfg.n_bins));

    const long n_days = (cfg.n_bins + cfg.bins_per_day - 1) / cfg.bins_per_day;
    panel.day_spans.assign(static_cast<std::size_t>(n_days), {0, 0});

    // Sessions longer than 24h still need disjoint calendar days.
    const std::int64_t stride =
        ((cfg.bins_per_day * tau_ns) / kDayNs + 1) * kDayNs;

    Vector z(n), zn(n);
    Index row = 0;
    for (long day = 0; day < n_days; ++day) {
        auto stream = rng::Stream::keyed(cfg.seed, static_cast<std::uint64_t>(day), kTagFlows);
        const Index len = std::min<Index>(cfg.bins_per_day, cfg.n_bins - row);
        const std::int64_t open = day * stride;

        // Raw increments first, then prices, then increments re-derived from
        // the price path so delta_p matches price differences bit for bit.
        Vector price = Vector::Constant(n, cfg.p0);
        Matrix price_path(len + 1, n);
        price_path.row(0) = price.transpose();
        for (Index b = 0; b < len; ++b) {
            for (int i = 0; i < n; ++i) z(i) = stream.gaussian();
            for (int i = 0; i < n; ++i) zn(i) = stream.gaussian();
            const Vector q = flow_factor * z;
            const Vector d = cfg.lambda_true * q + noise_factor * zn;
            panel.flow.row(row + b) = q.transpose();
            price += d;
            price_path.row(b + 1) = price.transpose();
        }
        for (Index b = 0; b < len; ++b) {
            panel.p_open.row(row + b) = price_path.row(b);
            panel.delta_p.row(row + b) = price_path.row(b + 1) - price_path.row(b);
            panel.bin_open_ts[static_cast<std::size_t>(row + b)] = open + b * tau_ns;
            panel.day_index[static_cast<std::size_t>(row + b)] = static_cast<int>(day);
        }
        panel.day_spans[static_cast<std::size_t>(day)] = {row, row + len};
        out.calendar.days.push_back({"D" + std::to_string(day), open, open + len * tau_ns});
        row += len;
    }
    return out;
}

void TickSimConfig::normalize() {
    auto fill = [&](std::vector<double>& v, double value) {
        if (v.empty()) v.assign(static_cast<std::size_t>(n_assets), value);
    };
    fill(trade_rate, 1.0);
    fill(sign_persistence, 0.5);
    fill(volume_scale, 1.0);
    fill(impact_coef, 0.009);
    fill(saturation_scale, 30.0);
    if (p0.empty()) {
        p0.resize(static_cast<std::size_t>(n_assets));
        for (int a = 0; a < n_assets; ++a) p0[static_cast<std::size_t>(a)] = 100.0 + 10.0 * a;
    }
}

void TickSimConfig::validate() const {
    if (n_assets < 1 || days < 1) throw std::invalid_argument("tick sim: empty configuration");
    if (!(session_seconds > 0.0)) throw std::invalid_argument("tick sim: empty session");
    const auto check_size = [&](const std::vector<double>& v, const char* name) {
        if (v.size() != static_cast<std::size_t>(n_assets))
            throw std::invalid_argument(std::string("tick sim: ") + name + " size mismatch");
    };
    check_size(trade_rate, "trade_rate");
    check_size(sign_persistence, "sign_persistence");
    check_size(volume_scale, "volume_scale");
    check_size(impact_coef, "impact_coef");
    check_size(saturation_scale, "saturation_scale");
    check_size(p0, "p0");
    for (const double f : trade_rate)
        if (!(f > 0.0)) throw std::invalid_argument("tick sim: trade rates must be positive");
    for (const double phi : sign_persistence)
        if (phi < 0.0 || phi >= 1.0)
            throw std::invalid_argument("tick sim: sign persistence must be in [0,1)");
    if (rho_star < 0.0 || rho_star >= 1.0)
        throw std::invalid_argument("tick sim: rho_star must be in [0,1)");
    if (kernel == KernelKind::PowerLaw) {
        if (!(powerlaw_beta > 0.0)) throw std::invalid_argument("tick sim: power-law beta > 0");
        if (powerlaw_cutoff < 1) throw std::invalid_argument("tick sim: power-law cutoff >= 1");
    } else if (!(kernel_half_life > 0.0)) {
        throw std::invalid_argument("tick sim: kernel half-life > 0");
    }
}

namespace {

struct SimEvent {
    std::int64_t ts;
    int asset;
    double signed_vol;
};

// Transient impact state of one asset: kernel-weighted raw signed flow.
class KernelState {
  public:
    KernelState(const TickSimConfig& cfg, int asset)
        : kind_(cfg.kernel),
          decay_per_ns_(std::log(2.0) / (cfg.kernel_half_life * 1e9)),
          pl_beta_(cfg.powerlaw_beta),
          pl_t0_ns_(cfg.powerlaw_t0 * 1e9),
          cutoff_(static_cast<std::size_t>(cfg.powerlaw_cutoff)) {
        (void)asset;
    }

    double value(std::int64_t ts) const {
        if (kind_ == KernelKind::Exponential)
            return value_ * std::exp(-decay_per_ns_ * static_cast<double>(ts - last_ts_));
        double sum = 0.0;
        for (const auto& [s, impulse] : impulses_)
            sum += impulse * std::pow(1.0 + static_cast<double>(ts - s) / pl_t0_ns_, -pl_beta_);
        return sum;
    }

    void add(std::int64_t ts, double impulse) {
        if (kind_ == KernelKind::Exponential) {
            value_ = value(ts) + impulse;
            last_ts_ = ts;
            return;
        }
        impulses_.emplace_back(ts, impulse);
        if (impulses_.size() > cutoff_) impulses_.pop_front();
    }

    void reset(std::int64_t ts) {
        value_ = 0.0;
        last_ts_ = ts;
        impulses_.clear();
    }

  private:
    KernelKind kind_;
    double decay_per_ns_;
    double pl_beta_;
    double pl_t0_ns_;
    std::size_t cutoff_;
    double value_ = 0.0;
    std::int64_t last_ts_ = 0;
    std::deque<std::pair<std::int64_t, double>> impulses_;
};

}  // namespace

TickSimResult simulate_ticks(const TickSimConfig& cfg_in) {
    TickSimConfig cfg = cfg_in;
    cfg.normalize();
    cfg.validate();
    const int n = cfg.n_assets;
    const double beta = std::sqrt(cfg.rho_star);
    const double alpha = std::sqrt(1.0 - cfg.rho_star);
    const auto session_ns = static_cast<std::int64_t>(std::llround(cfg.session_seconds * 1e9));

    TickSimResult out;
    out.assets = default_names(n);
    out.rho_star = cfg.rho_star;

    auto saturate = [&](int a, double x) {
        if (!cfg.saturation) return x;
        const double s = cfg.saturation_scale[static_cast<std::size_t>(a)];
        return s * std::tanh(x / s);
    };

    std::vector<KernelState> kernels;
    kernels.reserve(static_cast<std::size_t>(n));
    for (int a = 0; a < n; ++a) kernels.emplace_back(cfg, a);

    // Per-asset impact responses are mixed through the symmetric square root
    // of the planted correlation matrix, so the impact channel carries the
    // same pairwise correlation as the noise channel at every time scale.
    Matrix corr_target = Matrix::Constant(n, n, cfg.rho_star);
    corr_target.diagonal().setOnes();
    const Matrix mix = matrix_sqrt(corr_target);
    auto impact_on = [&](int i, std::int64_t ts) {
        double total = 0.0;
        for (int j = 0; j < n; ++j)
            total += mix(i, j) * cfg.impact_coef[static_cast<std::size_t>(j)] *
                     saturate(j, kernels[static_cast<std::size_t>(j)].value(ts));
        return total;
    };

    std::vector<SimEvent> events;
    for (int day = 0; day < cfg.days; ++day) {
        const std::int64_t open = static_cast<std::int64_t>(day) * kDayNs;
        const std::int64_t close = open + session_ns;
        out.calendar.days.push_back({"D" + std::to_string(day), open, close});

        // Per-asset trade arrivals, signs and volumes.
        events.clear();
        for (int a = 0; a < n; ++a) {
            auto s = rng::Stream::keyed(cfg.seed, static_cast<std::uint64_t>(day),
                                        static_cast<std::uint64_t>(a), kTagTrades);
            const double rate = cfg.trade_rate[static_cast<std::size_t>(a)];
            const double p_stay =
                0.5 * (1.0 + cfg.sign_persistence[static_cast<std::size_t>(a)]);
            double sign = s.uniform01() < 0.5 ? 1.0 : -1.0;
            std::int64_t t = open;
            while (true) {
                t += static_cast<std::int64_t>(std::llround(s.exponential(rate) * 1e9));
                if (t >= close) break;
                const double vol =
                    cfg.volume_scale[static_cast<std::size_t>(a)] * (0.5 + std::fabs(s.gaussian()));
                events.push_back({t, a, sign * vol});
                if (s.uniform01() > p_stay) sign = -sign;
            }
        }
        std::stable_sort(events.begin(), events.end(), [](const SimEvent& a, const SimEvent& b) {
            if (a.ts != b.ts) return a.ts < b.ts;
            return a.asset < b.asset;
        });

        // Latent factors reset at each open; prices restart at p0.
        auto common = rng::Stream::keyed(cfg.seed, static_cast<std::uint64_t>(day), kTagCommon);
        std::vector<rng::Stream> noise, quote;
        for (int a = 0; a < n; ++a) {
            noise.push_back(rng::Stream::keyed(cfg.seed, static_cast<std::uint64_t>(day),
                                               static_cast<std::uint64_t>(a), kTagNoise));
            quote.push_back(rng::Stream::keyed(cfg.seed, static_cast<std::uint64_t>(day),
                                               static_cast<std::uint64_t>(a), kTagQuote));
        }
        double c_factor = 0.0;
        std::vector<double> b_factor(static_cast<std::size_t>(n), 0.0);
        std::int64_t last_global = open;
        std::vector<std::int64_t> last_asset(static_cast<std::size_t>(n), open);
        for (auto& k : kernels) k.reset(open);

        auto mid_of = [&](int a, std::int64_t ts) {
            return cfg.p0[static_cast<std::size_t>(a)] + beta * c_factor +
                   alpha * b_factor[static_cast<std::size_t>(a)] + impact_on(a, ts);
        };
        auto emit_quote = [&](int a, std::int64_t ts) {
            const double qz = cfg.quote_noise > 0.0
                                  ? cfg.quote_noise * quote[static_cast<std::size_t>(a)].gaussian()
                                  : 0.0;
            const double mid = mid_of(a, ts) + qz;
            TickRecord rec;
            rec.ts_ns = ts;
            rec.asset = a;
            rec.kind = TickKind::Quote;
            rec.bid = mid - cfg.half_spread;
            rec.ask = mid + cfg.half_spread;
            out.ticks.push_back(rec);
        };

        for (int a = 0; a < n; ++a) emit_quote(a, open);

        for (const auto& ev : events) {
            const double dt_global = static_cast<double>(ev.ts - last_global) * 1e-9;
            c_factor += cfg.noise_sigma * std::sqrt(dt_global) * common.gaussian();
            last_global = ev.ts;
            const auto ai = static_cast<std::size_t>(ev.asset);
            const double dt_asset = static_cast<double>(ev.ts - last_asset[ai]) * 1e-9;
            b_factor[ai] += cfg.noise_sigma * std::sqrt(dt_asset) * noise[ai].gaussian();
            last_asset[ai] = ev.ts;

            const double mid_pre = mid_of(ev.asset, ev.ts);
            TickRecord trade;
            trade.ts_ns = ev.ts;
            trade.asset = ev.asset;
            trade.kind = TickKind::Trade;
            trade.signed_volume = ev.signed_vol;
            trade.price = mid_pre + (ev.signed_vol > 0.0 ? cfg.half_spread : -cfg.half_spread);
            out.ticks.push_back(trade);

            kernels[ai].add(ev.ts, ev.signed_vol);
            emit_quote(ev.asset, ev.ts);
        }
    }

    // Asset-major order (time order within asset is preserved).
    std::stable_sort(out.ticks.begin(), out.ticks.end(),
                     [](const TickRecord& a, const TickRecord& b) { return a.asset < b.asset; });
    return out;
}

TickStream materialize_ticks(const BinnedPanel& panel) {
    const auto tau_ns = static_cast<std::int64_t>(std::llround(panel.tau_seconds * 1e9));
    if (tau_ns <= 0) throw std::invalid_argument("materialize_ticks: panel without tau");
    TickStream out;
    for (int day = 0; day < panel.n_days(); ++day) {
        const auto span = panel.day_spans[static_cast<std::size_t>(day)];
        if (span.second == span.first) continue;
        const std::int64_t open = panel.bin_open_ts[static_cast<std::size_t>(span.first)];
        const std::int64_t close =
            panel.bin_open_ts[static_cast<std::size_t>(span.second - 1)] + tau_ns;
        out.calendar.days.push_back({"D" + std::to_string(day), open, close});
    }
    for (int a = 0; a < panel.n_assets(); ++a) {
        for (int day = 0; day < panel.n_days(); ++day) {
            const auto span = panel.day_spans[static_cast<std::size_t>(day)];
            for (Index b = span.first; b < span.second; ++b) {
                const std::int64_t ts = panel.bin_open_ts[static_cast<std::size_t>(b)];
                TickRecord q;
                q.ts_ns = ts;
                q.asset = a;
                q.kind = TickKind::Quote;
                q.bid = q.ask = panel.p_open(b, a);
                out.ticks.push_back(q);
                if (panel.flow(b, a) != 0.0) {
                    TickRecord t;
                    t.ts_ns = ts;
                    t.asset = a;
                    t.kind = TickKind::Trade;
                    t.price = panel.p_open(b, a);
                    t.signed_volume = panel.flow(b, a);
                    out.ticks.push_back(t);
                }
                if (b + 1 == span.second) {  // pin the end-of-day grid price
                    TickRecord q2;
                    q2.ts_ns = ts + tau_ns;
                    q2.asset = a;
                    q2.kind = TickKind::Quote;
                    q2.bid = q2.ask = panel.p_open(b, a) + panel.delta_p(b, a);
                    out.ticks.push_back(q2);
                }
            }
        }
    }
    return out;
}

}  // namespace ximpact
