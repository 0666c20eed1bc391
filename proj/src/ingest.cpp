#include "ximpact/ingest.hpp"

#include "ximpact/csv.hpp"
#include "ximpact/log.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <unordered_map>

namespace ximpact {

void TradingCalendar::validate() const {
    std::int64_t prev_close = std::numeric_limits<std::int64_t>::min();
    for (const auto& d : days) {
        if (d.open_ns >= d.close_ns)
            throw std::invalid_argument("calendar: open >= close on " + d.date);
        if (d.open_ns < prev_close)
            throw std::invalid_argument("calendar: overlapping or unordered days at " + d.date);
        prev_close = d.close_ns;
    }
}

double TradingCalendar::total_open_seconds() const {
    double total = 0.0;
    for (const auto& d : days) total += static_cast<double>(d.close_ns - d.open_ns) * 1e-9;
    return total;
}

namespace {

struct TickColumns {
    int ts = -1, asset = -1, event = -1, price = -1, qty = -1, bid = -1, ask = -1;
};

TickColumns map_header(std::string_view header, const std::string& path) {
    TickColumns cols;
    const auto fields = csv::split(header);
    for (std::size_t i = 0; i < fields.size(); ++i) {
        const auto f = fields[i];
        const int idx = static_cast<int>(i);
        if (f == "ts_ns") cols.ts = idx;
        else if (f == "asset") cols.asset = idx;
        else if (f == "event") cols.event = idx;
        else if (f == "price") cols.price = idx;
        else if (f == "signed_qty") cols.qty = idx;
        else if (f == "bid") cols.bid = idx;
        else if (f == "ask") cols.ask = idx;
    }
    if (cols.ts < 0 || cols.asset < 0 || cols.event < 0 || cols.price < 0 || cols.qty < 0 ||
        cols.bid < 0 || cols.ask < 0)
        throw std::invalid_argument("tick csv header missing required columns: " + path);
    return cols;
}

}  // namespace

TickLoadResult load_ticks(const std::string& path, const std::vector<std::string>& universe) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open tick file: " + path);

    std::unordered_map<std::string, int> symbol_to_index;
    for (std::size_t i = 0; i < universe.size(); ++i)
        symbol_to_index.emplace(universe[i], static_cast<int>(i));

    TickLoadResult result;
    std::string line;
    if (!std::getline(in, line)) return result;  // empty file
    const TickColumns cols = map_header(line, path);

    std::vector<std::int64_t> last_ts(universe.size(), std::numeric_limits<std::int64_t>::min());
    std::size_t line_no = 1;
    auto reject = [&](const std::string& msg) { result.issues.push_back({line_no, msg}); };

    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = csv::split(line);
        const auto need = static_cast<std::size_t>(
            std::max({cols.ts, cols.asset, cols.event, cols.price, cols.qty, cols.bid, cols.ask}));
        if (fields.size() <= need) {
            reject("too few fields");
            continue;
        }
        const auto ts = csv::parse_int64(fields[cols.ts]);
        if (!ts) {
            reject("unparsable ts_ns");
            continue;
        }
        const auto it = symbol_to_index.find(std::string(fields[cols.asset]));
        if (it == symbol_to_index.end()) {
            reject("unknown asset symbol '" + std::string(fields[cols.asset]) + "'");
            continue;
        }
        const int asset = it->second;
        if (*ts < last_ts[asset]) {
            reject("non-monotone timestamp for asset " + std::string(fields[cols.asset]));
            continue;
        }

        TickRecord rec;
        rec.ts_ns = *ts;
        rec.asset = asset;
        const auto event = fields[cols.event];
        if (event == "T") {
            const auto price = csv::parse_double(fields[cols.price]);
            const auto qty = csv::parse_double(fields[cols.qty]);
            if (!price || !qty) {
                reject("unparsable trade fields");
                continue;
            }
            if (*qty == 0.0) {
                reject("zero-volume trade");
                continue;
            }
            rec.kind = TickKind::Trade;
            rec.price = *price;
            rec.signed_volume = *qty;
        } else if (event == "Q") {
            const auto bid = csv::parse_double(fields[cols.bid]);
            const auto ask = csv::parse_double(fields[cols.ask]);
            if (!bid || !ask) {
                reject("unparsable quote fields");
                continue;
            }
            if (*ask < *bid) {
                reject("crossed quote (ask < bid), dropped");
                continue;
            }
            rec.kind = TickKind::Quote;
            rec.bid = *bid;
            rec.ask = *ask;
        } else {
            reject("unknown event kind '" + std::string(event) + "'");
            continue;
        }
        last_ts[asset] = *ts;
        result.ticks.push_back(rec);
    }

    std::stable_sort(result.ticks.begin(), result.ticks.end(),
                     [](const TickRecord& a, const TickRecord& b) {
                         if (a.asset != b.asset) return a.asset < b.asset;
                         return a.ts_ns < b.ts_ns;
                     });
    if (!result.issues.empty())
        log::warn(std::to_string(result.issues.size()) + " rejected rows in " + path);
    return result;
}

TradingCalendar load_calendar(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open calendar file: " + path);
    TradingCalendar cal;
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("empty calendar: " + path);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = csv::split(line);
        if (fields.size() < 3)
            throw std::invalid_argument("calendar line " + std::to_string(line_no) +
                                        ": expected date,open_ts_ns,close_ts_ns");
        const auto open = csv::parse_int64(fields[1]);
        const auto close = csv::parse_int64(fields[2]);
        if (!open || !close)
            throw std::invalid_argument("calendar line " + std::to_string(line_no) +
                                        ": unparsable timestamps");
        cal.days.push_back({std::string(fields[0]), *open, *close});
    }
    cal.validate();
    return cal;
}

void write_calendar(const TradingCalendar& cal, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write calendar: " + path);
    out << "date,open_ts_ns,close_ts_ns\n";
    for (const auto& d : cal.days)
        out << d.date << ',' << d.open_ns << ',' << d.close_ns << '\n';
}

void write_ticks(const std::vector<TickRecord>& ticks, const std::vector<std::string>& universe,
                 const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write ticks: " + path);
    out << "ts_ns,asset,event,price,signed_qty,bid,ask\n";
    // Global time order keeps per-asset streams monotone for the loader.
    std::vector<std::size_t> order(ticks.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (ticks[a].ts_ns != ticks[b].ts_ns) return ticks[a].ts_ns < ticks[b].ts_ns;
        return ticks[a].asset < ticks[b].asset;
    });
    for (const std::size_t i : order) {
        const auto& t = ticks[i];
        out << t.ts_ns << ',' << universe.at(static_cast<std::size_t>(t.asset)) << ',';
        if (t.kind == TickKind::Trade)
            out << "T," << csv::format_double(t.price) << ',' << csv::format_double(t.signed_volume)
                << ",,";
        else
            out << "Q,,," << csv::format_double(t.bid) << ',' << csv::format_double(t.ask);
        out << '\n';
    }
}

BinnedPanel bin_ticks(const std::vector<TickRecord>& ticks, double tau_seconds,
                      const TradingCalendar& cal, const std::vector<std::string>& assets) {
    if (cal.days.empty()) throw std::invalid_argument("bin_ticks: empty calendar");
    if (!(tau_seconds > 0.0)) throw std::invalid_argument("bin_ticks: tau must be positive");
    cal.validate();
    const auto tau_ns = static_cast<std::int64_t>(std::llround(tau_seconds * 1e9));
    if (tau_ns <= 0) throw std::invalid_argument("bin_ticks: tau below 1 ns");
    const int n = static_cast<int>(assets.size());

    // Per-asset tick ranges (input is sorted by asset, then time).
    std::vector<std::pair<std::size_t, std::size_t>> ranges(n, {0, 0});
    {
        std::size_t i = 0;
        while (i < ticks.size()) {
            const int a = ticks[i].asset;
            if (a < 0 || a >= n) throw std::invalid_argument("bin_ticks: asset index out of range");
            std::size_t j = i;
            while (j < ticks.size() && ticks[j].asset == a) {
                if (j > i && ticks[j].ts_ns < ticks[j - 1].ts_ns)
                    throw std::invalid_argument("bin_ticks: ticks not time-ordered per asset");
                ++j;
            }
            ranges[a] = {i, j};
            i = j;
        }
    }

    BinnedPanel panel;
    panel.tau_seconds = tau_seconds;
    panel.assets = assets;
    panel.day_spans.assign(cal.days.size(), {0, 0});

    std::vector<std::int64_t> open_ts;
    std::vector<int> day_of_bin;
    std::vector<Eigen::RowVectorXd> p_rows, dp_rows, q_rows;

    std::vector<std::size_t> cursor(n);
    for (int a = 0; a < n; ++a) cursor[a] = ranges[a].first;

    for (int day = 0; day < cal.n_days(); ++day) {
        const auto& d = cal.days[day];
        const std::int64_t m = (d.close_ns - d.open_ns) / tau_ns;  // full-length bins
        const Index first_row = static_cast<Index>(p_rows.size());
        if (m < 1) {
            panel.day_spans[day] = {first_row, first_row};
            continue;
        }

        // Mid prices at the m+1 grid points and flows per bin, per asset.
        Matrix mid(m + 1, n);
        std::vector<std::int64_t> first_quote_grid(n, m + 1);  // first grid point with a mid
        Matrix flows = Matrix::Zero(m, n);

        for (int a = 0; a < n; ++a) {
            std::size_t i = cursor[a];
            const std::size_t end = ranges[a].second;
            while (i < end && ticks[i].ts_ns < d.open_ns) ++i;  // skip pre-session ticks
            double cur_mid = 0.0;
            bool have_mid = false;
            std::int64_t g = 0;  // next grid index to fill
            for (; i < end && ticks[i].ts_ns <= d.close_ns; ++i) {
                const auto& t = ticks[i];
                const std::int64_t offset = t.ts_ns - d.open_ns;
                // Fill grid points strictly before this tick.
                while (g <= m && d.open_ns + g * tau_ns < t.ts_ns) {
                    if (have_mid) mid(g, a) = cur_mid;
                    ++g;
                }
                if (t.kind == TickKind::Quote) {
                    cur_mid = 0.5 * (t.bid + t.ask);
                    if (!have_mid) {
                        have_mid = true;
                        first_quote_grid[a] = g;  // first grid point at/after this quote
                    }
                } else {
                    const std::int64_t b = offset / tau_ns;  // half-open: boundary -> later bin
                    if (b < m) flows(b, a) += t.signed_volume;
                }
            }
            while (g <= m) {
                if (have_mid) mid(g, a) = cur_mid;
                ++g;
            }
            cursor[a] = i;
        }

        // Bins are valid once every asset has an opening quote.
        std::int64_t start = 0;
        for (int a = 0; a < n; ++a) start = std::max(start, first_quote_grid[a]);
        if (start >= m) {
            panel.dropped_bins += m;
            panel.day_spans[day] = {first_row, first_row};
            if (start > 0)
                log::warn("day " + d.date + ": no usable bins (missing opening quotes)");
            continue;
        }
        panel.dropped_bins += start;

        for (std::int64_t b = start; b < m; ++b) {
            open_ts.push_back(d.open_ns + b * tau_ns);
            day_of_bin.push_back(day);
            p_rows.push_back(mid.row(b));
            dp_rows.push_back(mid.row(b + 1) - mid.row(b));
            q_rows.push_back(flows.row(b));
        }
        panel.day_spans[day] = {first_row, static_cast<Index>(p_rows.size())};
    }

    const Index rows = static_cast<Index>(p_rows.size());
    panel.bin_open_ts = std::move(open_ts);
    panel.day_index = std::move(day_of_bin);
    panel.p_open.resize(rows, n);
    panel.delta_p.resize(rows, n);
    panel.flow.resize(rows, n);
    for (Index r = 0; r < rows; ++r) {
        panel.p_open.row(r) = p_rows[static_cast<std::size_t>(r)];
        panel.delta_p.row(r) = dp_rows[static_cast<std::size_t>(r)];
        panel.flow.row(r) = q_rows[static_cast<std::size_t>(r)];
    }
    return panel;
}

Vector trading_frequency(const std::vector<TickRecord>& ticks, const TradingCalendar& cal,
                         int n_assets) {
    if (cal.days.empty()) throw std::invalid_argument("trading_frequency: empty calendar");
    const double open_seconds = cal.total_open_seconds();
    if (!(open_seconds > 0.0)) throw std::invalid_argument("trading_frequency: zero open seconds");
    Vector counts = Vector::Zero(n_assets);
    std::size_t day_hint = 0;
    for (const auto& t : ticks) {
        if (t.kind != TickKind::Trade) continue;
        bool inside = false;
        // Ticks are asset-major so a linear day scan per tick is fine at
        // these scales; days are few.
        for (std::size_t k = 0; k < cal.days.size(); ++k) {
            const auto& d = cal.days[(day_hint + k) % cal.days.size()];
            if (t.ts_ns >= d.open_ns && t.ts_ns < d.close_ns) {
                inside = true;
                day_hint = (day_hint + k) % cal.days.size();
                break;
            }
        }
        if (inside) counts(t.asset) += 1.0;
    }
    return counts / open_seconds;
}

void write_panel_csv(const BinnedPanel& panel, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write panel: " + path);
    out << "bin_open_ts,day,asset,p_open,delta_p,q\n";
    for (Index b = 0; b < panel.n_bins(); ++b) {
        for (int a = 0; a < panel.n_assets(); ++a) {
            out << panel.bin_open_ts[static_cast<std::size_t>(b)] << ','
                << panel.day_index[static_cast<std::size_t>(b)] << ','
                << panel.assets[static_cast<std::size_t>(a)] << ','
                << csv::format_double(panel.p_open(b, a)) << ','
                << csv::format_double(panel.delta_p(b, a)) << ','
                << csv::format_double(panel.flow(b, a)) << '\n';
        }
    }
}

BinnedPanel read_panel_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open panel: " + path);
    std::string line;
    if (!std::getline(in, line) || line != "bin_open_ts,day,asset,p_open,delta_p,q")
        throw std::invalid_argument("bad panel header in " + path);

    struct Cell {
        std::int64_t ts;
        int day;
        std::string asset;
        double p, dp, q;
    };
    std::vector<Cell> cells;
    std::vector<std::string> assets;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = csv::split(line);
        if (f.size() != 6) throw std::invalid_argument("bad panel row in " + path);
        Cell c;
        c.ts = csv::parse_int64(f[0]).value();
        c.day = static_cast<int>(csv::parse_int64(f[1]).value());
        c.asset = std::string(f[2]);
        c.p = csv::parse_double(f[3]).value();
        c.dp = csv::parse_double(f[4]).value();
        c.q = csv::parse_double(f[5]).value();
        if (std::find(assets.begin(), assets.end(), c.asset) == assets.end())
            assets.push_back(c.asset);
        cells.push_back(std::move(c));
    }
    const int n = static_cast<int>(assets.size());
    if (n == 0 || cells.size() % static_cast<std::size_t>(n) != 0)
        throw std::invalid_argument("inconsistent panel shape in " + path);
    const Index rows = static_cast<Index>(cells.size()) / n;

    BinnedPanel panel;
    panel.assets = assets;
    panel.p_open.resize(rows, n);
    panel.delta_p.resize(rows, n);
    panel.flow.resize(rows, n);
    panel.bin_open_ts.resize(static_cast<std::size_t>(rows));
    panel.day_index.resize(static_cast<std::size_t>(rows));
    std::unordered_map<std::string, int> index;
    for (int a = 0; a < n; ++a) index[assets[static_cast<std::size_t>(a)]] = a;
    for (Index r = 0; r < rows; ++r) {
        for (int a = 0; a < n; ++a) {
            const auto& c = cells[static_cast<std::size_t>(r) * n + static_cast<std::size_t>(a)];
            const int col = index.at(c.asset);
            panel.p_open(r, col) = c.p;
            panel.delta_p(r, col) = c.dp;
            panel.flow(r, col) = c.q;
            panel.bin_open_ts[static_cast<std::size_t>(r)] = c.ts;
            panel.day_index[static_cast<std::size_t>(r)] = c.day;
        }
    }
    // Rebuild day spans and infer tau from the grid.
    int max_day = 0;
    for (const int d : panel.day_index) max_day = std::max(max_day, d);
    panel.day_spans.assign(static_cast<std::size_t>(max_day) + 1, {0, 0});
    Index r = 0;
    while (r < rows) {
        const int d = panel.day_index[static_cast<std::size_t>(r)];
        Index e = r;
        while (e < rows && panel.day_index[static_cast<std::size_t>(e)] == d) ++e;
        panel.day_spans[static_cast<std::size_t>(d)] = {r, e};
        if (e - r >= 2)
            panel.tau_seconds = static_cast<double>(panel.bin_open_ts[static_cast<std::size_t>(r) + 1] -
                                                    panel.bin_open_ts[static_cast<std::size_t>(r)]) *
                                1e-9;
        r = e;
    }
    return panel;
}

BinnedPanel panel_subset(const BinnedPanel& panel, const std::vector<int>& day_ids) {
    BinnedPanel out;
    out.tau_seconds = panel.tau_seconds;
    out.assets = panel.assets;
    out.day_spans.assign(panel.day_spans.size(), {0, 0});
    Index rows = 0;
    for (const int d : day_ids) {
        const auto span = panel.day_spans.at(static_cast<std::size_t>(d));
        rows += span.second - span.first;
    }
    const int n = panel.n_assets();
    out.p_open.resize(rows, n);
    out.delta_p.resize(rows, n);
    out.flow.resize(rows, n);
    out.bin_open_ts.resize(static_cast<std::size_t>(rows));
    out.day_index.resize(static_cast<std::size_t>(rows));
    Index w = 0;
    for (const int d : day_ids) {
        const auto span = panel.day_spans.at(static_cast<std::size_t>(d));
        const Index len = span.second - span.first;
        out.p_open.middleRows(w, len) = panel.p_open.middleRows(span.first, len);
        out.delta_p.middleRows(w, len) = panel.delta_p.middleRows(span.first, len);
        out.flow.middleRows(w, len) = panel.flow.middleRows(span.first, len);
        for (Index i = 0; i < len; ++i) {
            out.bin_open_ts[static_cast<std::size_t>(w + i)] =
                panel.bin_open_ts[static_cast<std::size_t>(span.first + i)];
            out.day_index[static_cast<std::size_t>(w + i)] =
                panel.day_index[static_cast<std::size_t>(span.first + i)];
        }
        out.day_spans[static_cast<std::size_t>(d)] = {w, w + len};
        w += len;
    }
    return out;
}

}  // namespace ximpact
