#include "phaseforge/report.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace phaseforge {

std::string format_double(double value) {
    char buffer[64];
    const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
    return std::string(buffer, result.ptr);
}

std::string format_metric(double value) {
    std::string text = format_double(value);
    if (text.find('e') != std::string::npos || text.find("inf") != std::string::npos ||
        text.find("nan") != std::string::npos)
        return text;
    const size_t dot = text.find('.');
    if (dot == std::string::npos) return text + ".00";
    const size_t decimals = text.size() - dot - 1;
    if (decimals < 2) text.append(2 - decimals, '0');
    return text;
}

namespace {

double parse_double(const std::string& text) {
    double value = 0.0;
    const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
    if (result.ec != std::errc() || result.ptr != text.data() + text.size())
        throw std::invalid_argument("report: bad numeric cell '" + text + "'");
    return value;
}

std::string csv_quote(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string quoted = "\"";
    for (char c : field) {
        if (c == '"') quoted += '"';
        quoted += c;
    }
    quoted += '"';
    return quoted;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                field += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else {
            field += c;
        }
    }
    fields.push_back(std::move(field));
    return fields;
}

// Conventional metric column order first, anything else alphabetically after.
std::vector<std::string> ordered_metric_names(const std::set<std::string>& names) {
    static const std::array<const char*, 8> canon = {"CBAK", "COVL",   "CSIG",   "PESQ",
                                                     "VISQOL", "STOI", "SI-SNR", "LSD"};
    std::vector<std::string> out;
    std::set<std::string> left = names;
    for (const char* name : canon) {
        if (left.erase(name) > 0) out.push_back(name);
    }
    out.insert(out.end(), left.begin(), left.end());
    return out;
}

struct RowKey {
    std::string group, setting, model;
    auto operator<=>(const RowKey&) const = default;
};

}  // namespace

bool ResultsDb::operator==(const ResultsDb& other) const {
    if (rows.size() != other.rows.size()) return false;
    auto ordering = [](const ResultRow& a, const ResultRow& b) {
        return std::tie(a.group, a.setting, a.phonetic_model, a.causal) <
               std::tie(b.group, b.setting, b.phonetic_model, b.causal);
    };
    std::vector<ResultRow> lhs = rows, rhs = other.rows;
    std::sort(lhs.begin(), lhs.end(), ordering);
    std::sort(rhs.begin(), rhs.end(), ordering);
    return lhs == rhs;
}

ResultsDb load_results_db(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("load_results_db: cannot open " + path);
    const nlohmann::json doc = nlohmann::json::parse(in);
    ResultsDb db;
    for (const auto& entry : doc.at("rows")) {
        ResultRow row;
        row.group = entry.at("group").get<std::string>();
        row.setting = entry.at("setting").get<std::string>();
        row.phonetic_model = entry.value("phonetic_model", "-");
        row.causal = entry.value("causal", false);
        row.seed = entry.value("seed", "");
        row.checkpoint_hash = entry.value("checkpoint_hash", "");
        for (const auto& [name, value] : entry.at("metrics").items())
            row.metrics[name] = value.get<double>();
        db.rows.push_back(std::move(row));
    }
    return db;
}

void save_results_db(const std::string& path, const ResultsDb& db) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : db.rows) {
        nlohmann::json entry;
        entry["group"] = row.group;
        entry["setting"] = row.setting;
        entry["phonetic_model"] = row.phonetic_model;
        entry["causal"] = row.causal;
        if (!row.seed.empty()) entry["seed"] = row.seed;
        if (!row.checkpoint_hash.empty()) entry["checkpoint_hash"] = row.checkpoint_hash;
        entry["metrics"] = nlohmann::json::object();
        for (const auto& [name, value] : row.metrics) entry["metrics"][name] = value;
        rows.push_back(std::move(entry));
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("save_results_db: cannot open " + path);
    out << nlohmann::json{{"rows", rows}}.dump(2) << "\n";
}

namespace {

struct PairedRow {
    RowKey key;
    const ResultRow* causal = nullptr;
    const ResultRow* noncausal = nullptr;
};

std::vector<PairedRow> pair_rows(const ResultsDb& db) {
    std::vector<PairedRow> paired;
    auto slot = [&paired](const RowKey& key) -> PairedRow& {
        for (auto& entry : paired)
            if (entry.key == key) return entry;
        paired.push_back({key, nullptr, nullptr});
        return paired.back();
    };
    for (const auto& row : db.rows) {
        PairedRow& entry = slot({row.group, row.setting, row.phonetic_model});
        (row.causal ? entry.causal : entry.noncausal) = &row;
    }
    return paired;
}

std::set<std::string> all_metric_names(const ResultsDb& db) {
    std::set<std::string> names;
    for (const auto& row : db.rows)
        for (const auto& [name, value] : row.metrics) names.insert(name);
    return names;
}

bool any_traceability(const ResultsDb& db) {
    return std::any_of(db.rows.begin(), db.rows.end(), [](const ResultRow& row) {
        return !row.seed.empty() || !row.checkpoint_hash.empty();
    });
}

}  // namespace

std::string render_main_table_csv(const ResultsDb& db) {
    const auto names = ordered_metric_names(all_metric_names(db));
    const bool traced = any_traceability(db);
    const auto paired = pair_rows(db);

    std::ostringstream out;
    out << "group,setting,phonetic_model";
    for (const char* side : {"causal", "noncausal"})
        for (const auto& name : names) out << "," << side << "_" << name;
    if (traced)
        out << ",causal_seed,causal_checkpoint,noncausal_seed,noncausal_checkpoint";
    out << "\n";

    for (const auto& entry : paired) {
        out << csv_quote(entry.key.group) << "," << csv_quote(entry.key.setting) << ","
            << csv_quote(entry.key.model);
        for (const ResultRow* side : {entry.causal, entry.noncausal}) {
            for (const auto& name : names) {
                out << ",";
                if (side != nullptr && side->metrics.count(name) > 0)
                    out << format_metric(side->metrics.at(name));
                else
                    out << "-";
            }
        }
        if (traced) {
            for (const ResultRow* side : {entry.causal, entry.noncausal}) {
                out << "," << csv_quote(side ? side->seed : "");
                out << "," << csv_quote(side ? side->checkpoint_hash : "");
            }
        }
        out << "\n";
    }
    return out.str();
}

std::string render_main_table_markdown(const ResultsDb& db) {
    const auto names = ordered_metric_names(all_metric_names(db));
    const auto paired = pair_rows(db);

    std::ostringstream out;
    out << "| Group | Setting | Phonetic Model |";
    for (const char* side : {"Causal", "Non-causal"})
        for (const auto& name : names) out << " " << side << " " << name << " |";
    out << "\n|";
    for (size_t i = 0; i < 3 + 2 * names.size(); ++i) out << "---|";
    out << "\n";
    for (const auto& entry : paired) {
        out << "| " << entry.key.group << " | " << entry.key.setting << " | " << entry.key.model
            << " |";
        for (const ResultRow* side : {entry.causal, entry.noncausal}) {
            for (const auto& name : names) {
                if (side != nullptr && side->metrics.count(name) > 0)
                    out << " " << format_metric(side->metrics.at(name)) << " |";
                else
                    out << " - |";
            }
        }
        out << "\n";
    }
    return out.str();
}

ResultsDb parse_main_table_csv(const std::string& csv) {
    std::istringstream in(csv);
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("parse_main_table_csv: empty input");
    const auto header = split_csv_line(line);
    if (header.size() < 3 || header[0] != "group")
        throw std::invalid_argument("parse_main_table_csv: unexpected header");

    // Column layout: 3 key fields, then causal_*/noncausal_* metric pairs,
    // optionally 4 traceability columns.
    std::vector<std::string> names;
    size_t col = 3;
    while (col < header.size() && header[col].rfind("causal_", 0) == 0 &&
           header[col] != "causal_seed") {
        names.push_back(header[col].substr(7));
        ++col;
    }
    const bool traced = header.back() == "noncausal_checkpoint";

    ResultsDb db;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        for (int side = 0; side < 2; ++side) {
            ResultRow row;
            row.group = fields[0];
            row.setting = fields[1];
            row.phonetic_model = fields[2];
            row.causal = side == 0;
            bool any = false;
            for (size_t m = 0; m < names.size(); ++m) {
                const std::string& cell = fields[3 + side * names.size() + m];
                if (cell == "-") continue;
                row.metrics[names[m]] = parse_double(cell);
                any = true;
            }
            if (traced) {
                const size_t base = 3 + 2 * names.size() + 2 * static_cast<size_t>(side);
                row.seed = fields[base];
                row.checkpoint_hash = fields[base + 1];
                any = any || !row.seed.empty() || !row.checkpoint_hash.empty();
            }
            if (any) db.rows.push_back(std::move(row));
        }
    }
    return db;
}

std::string render_selection_table_csv(const std::vector<SelectionRow>& rows) {
    std::set<std::string> name_set;
    for (const auto& row : rows)
        for (const auto& [name, value] : row.metrics) name_set.insert(name);
    const auto names = ordered_metric_names(name_set);
    const bool traced = std::any_of(rows.begin(), rows.end(), [](const SelectionRow& row) {
        return !row.seed.empty() || !row.checkpoint_hash.empty();
    });

    std::ostringstream out;
    out << "layer";
    for (const auto& name : names) out << "," << name;
    if (traced) out << ",seed,checkpoint";
    out << "\n";
    for (const auto& row : rows) {
        out << csv_quote(row.label);
        for (const auto& name : names) {
            out << ",";
            if (row.metrics.count(name) > 0)
                out << format_metric(row.metrics.at(name));
            else
                out << "-";
        }
        if (traced) out << "," << csv_quote(row.seed) << "," << csv_quote(row.checkpoint_hash);
        out << "\n";
    }
    return out.str();
}

std::string render_selection_table_markdown(const std::vector<SelectionRow>& rows) {
    std::set<std::string> name_set;
    for (const auto& row : rows)
        for (const auto& [name, value] : row.metrics) name_set.insert(name);
    const auto names = ordered_metric_names(name_set);

    std::ostringstream out;
    out << "| Layer # |";
    for (const auto& name : names) out << " " << name << " |";
    out << "\n|";
    for (size_t i = 0; i < 1 + names.size(); ++i) out << "---|";
    out << "\n";
    for (const auto& row : rows) {
        out << "| " << row.label << " |";
        for (const auto& name : names) {
            if (row.metrics.count(name) > 0)
                out << " " << format_metric(row.metrics.at(name)) << " |";
            else
                out << " - |";
        }
        out << "\n";
    }
    return out.str();
}

std::vector<SelectionRow> parse_selection_table_csv(const std::string& csv) {
    std::istringstream in(csv);
    std::string line;
    if (!std::getline(in, line))
        throw std::invalid_argument("parse_selection_table_csv: empty input");
    const auto header = split_csv_line(line);
    if (header.empty() || header[0] != "layer")
        throw std::invalid_argument("parse_selection_table_csv: unexpected header");
    const bool traced = header.size() >= 3 && header.back() == "checkpoint";
    const size_t metric_count = header.size() - 1 - (traced ? 2 : 0);

    std::vector<SelectionRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        SelectionRow row;
        row.label = fields[0];
        for (size_t m = 0; m < metric_count; ++m) {
            const std::string& cell = fields[1 + m];
            if (cell == "-") continue;
            row.metrics[header[1 + m]] = parse_double(cell);
        }
        if (traced) {
            row.seed = fields[1 + metric_count];
            row.checkpoint_hash = fields[2 + metric_count];
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace phaseforge
