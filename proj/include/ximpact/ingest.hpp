// Tick loading, calendar handling and panel construction.
//
// Tick CSV schema (header required, columns may be permuted):
//   ts_ns,asset,event,price,signed_qty,bid,ask     with event in {T, Q}
// Trades fill price/signed_qty, quotes fill bid/ask. Calendar CSV:
//   date,open_ts_ns,close_ts_ns
// Panel CSV export: bin_open_ts,day,asset,p_open,delta_p,q
#pragma once

#include "ximpact/types.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace ximpact {

enum class TickKind { Trade, Quote };

struct TickRecord {
    std::int64_t ts_ns = 0;
    std::int32_t asset = 0;
    TickKind kind = TickKind::Trade;
    double price = 0.0;          // trade price
    double signed_volume = 0.0;  // buy > 0, sell < 0
    double bid = 0.0;
    double ask = 0.0;
};

struct CalendarDay {
    std::string date;
    std::int64_t open_ns = 0;
    std::int64_t close_ns = 0;
};

struct TradingCalendar {
    std::vector<CalendarDay> days;

    void validate() const;
    double total_open_seconds() const;
    int n_days() const { return static_cast<int>(days.size()); }
};

struct TickIssue {
    std::size_t line = 0;  // 1-based line number in the source file
    std::string message;
};

struct TickLoadResult {
    std::vector<TickRecord> ticks;  // sorted by (asset, ts_ns)
    std::vector<TickIssue> issues;  // malformed / rejected rows
};

// Synchronized per-bin panel. Columns are assets; every column shares the
// same bin grid, and no bin spans a day boundary.
struct BinnedPanel {
    double tau_seconds = 0.0;
    std::vector<std::string> assets;
    std::vector<std::int64_t> bin_open_ts;         // per bin
    std::vector<int> day_index;                    // per bin, calendar day id
    Matrix p_open;                                 // bins x assets
    Matrix delta_p;                                // bins x assets
    Matrix flow;                                   // bins x assets
    std::vector<std::pair<Index, Index>> day_spans;  // [begin, end) row range per day id
    long dropped_bins = 0;                         // bins excluded for missing opening quotes

    Index n_bins() const { return p_open.rows(); }
    int n_assets() const { return static_cast<int>(p_open.cols()); }
    int n_days() const { return static_cast<int>(day_spans.size()); }
};

TickLoadResult load_ticks(const std::string& path, const std::vector<std::string>& universe);

TradingCalendar load_calendar(const std::string& path);
void write_calendar(const TradingCalendar& cal, const std::string& path);

void write_ticks(const std::vector<TickRecord>& ticks, const std::vector<std::string>& universe,
                 const std::string& path);

// Bin trades/quotes into flows and open prices on the tau grid of each day.
// Ticks must be time-ordered per asset. Bins before the first quote of a day
// (for any asset) are excluded; partial trailing bins are dropped.
BinnedPanel bin_ticks(const std::vector<TickRecord>& ticks, double tau_seconds,
                      const TradingCalendar& cal, const std::vector<std::string>& assets);

// Trades per second per asset over the calendar's open hours.
Vector trading_frequency(const std::vector<TickRecord>& ticks, const TradingCalendar& cal,
                         int n_assets);

void write_panel_csv(const BinnedPanel& panel, const std::string& path);
BinnedPanel read_panel_csv(const std::string& path);

// Copy the subset of bins belonging to the given day ids (order preserved).
BinnedPanel panel_subset(const BinnedPanel& panel, const std::vector<int>& day_ids);

}  // namespace ximpact
