#ifndef PHASEFORGE_REPORT_HPP
#define PHASEFORGE_REPORT_HPP

#include "phaseforge/common.hpp"

#include <map>
#include <string>
#include <vector>

namespace phaseforge {

// One experiment cell: a trained run summarized by metric means, traceable
// to its seed and checkpoint hash.
struct ResultRow {
    std::string group;           // model geometry label, e.g. "H=48,U=4,S=4"
    std::string setting;         // "Base", "Reg", "Sup", "Cond"
    std::string phonetic_model;  // "-", "H-L6", "ASR", "toy", ...
    bool causal = false;
    std::map<std::string, double> metrics;
    std::string seed;
    std::string checkpoint_hash;

    bool operator==(const ResultRow&) const = default;
};

// Row order is presentational; equality is row-set equality.
struct ResultsDb {
    std::vector<ResultRow> rows;

    bool operator==(const ResultsDb& other) const;
};

ResultsDb load_results_db(const std::string& path);
void save_results_db(const std::string& path, const ResultsDb& db);

// Main results table: one line per (group, setting, phonetic model), causal
// metric columns then non-causal ones, missing cells rendered as "-".
// Numeric cells use shortest-round-trip formatting, so parse(render(db))
// recovers the rows exactly.
std::string render_main_table_csv(const ResultsDb& db);
std::string render_main_table_markdown(const ResultsDb& db);
ResultsDb parse_main_table_csv(const std::string& csv);

// Layer-selection comparison table (label column + metric columns).
struct SelectionRow {
    std::string label;  // "Baseline", "0".."L", "Avg(0-L)", "Lrn-W-Avg(0-L)"
    std::map<std::string, double> metrics;
    std::string seed;
    std::string checkpoint_hash;

    bool operator==(const SelectionRow&) const = default;
};

std::string render_selection_table_csv(const std::vector<SelectionRow>& rows);
std::string render_selection_table_markdown(const std::vector<SelectionRow>& rows);
std::vector<SelectionRow> parse_selection_table_csv(const std::string& csv);

// Shortest decimal text that parses back to exactly the same double.
std::string format_double(double value);

// Table cell format: shortest round-trip text, zero-padded to at least two
// decimals so published two-decimal tables reproduce byte-exactly while
// arbitrary doubles still parse back losslessly.
std::string format_metric(double value);

}  // namespace phaseforge

#endif  // PHASEFORGE_REPORT_HPP
