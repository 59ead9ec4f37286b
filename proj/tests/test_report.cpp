#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "phaseforge/report.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace phaseforge;

namespace {

SelectionRow selection_row(const std::string& label, double cbak, double covl, double csig,
                           double pesq, double visqol) {
    SelectionRow row;
    row.label = label;
    row.metrics = {{"CBAK", cbak}, {"COVL", covl}, {"CSIG", csig}, {"PESQ", pesq}, {"VISQOL", visqol}};
    return row;
}

// The published layer-selection comparison for the H=48 non-causal model.
std::vector<SelectionRow> published_layer_table() {
    return {
        selection_row("Baseline", 3.50, 3.65, 4.33, 2.93, 3.16),
        selection_row("0", 3.49, 3.65, 4.33, 2.93, 3.23),
        selection_row("1", 3.50, 3.68, 4.37, 2.95, 3.25),
        selection_row("2", 3.55, 3.73, 4.39, 3.02, 3.27),
        selection_row("3", 3.51, 3.71, 4.38, 2.99, 3.28),
        selection_row("4", 3.55, 3.71, 4.37, 3.00, 3.27),
        selection_row("5", 3.53, 3.71, 4.38, 3.00, 3.27),
        selection_row("6", 3.53, 3.71, 4.38, 2.99, 3.25),
        selection_row("7", 3.52, 3.67, 4.35, 2.95, 3.25),
        selection_row("8", 3.51, 3.68, 4.36, 2.96, 3.27),
        selection_row("9", 3.51, 3.65, 4.33, 2.94, 3.25),
        selection_row("10", 3.52, 3.69, 4.35, 2.98, 3.22),
        selection_row("11", 3.50, 3.68, 4.36, 2.96, 3.27),
        selection_row("12", 3.49, 3.67, 4.35, 2.95, 3.27),
        selection_row("Avg(0-12)", 3.56, 3.76, 4.42, 3.06, 3.29),
        selection_row("Lrn-W-Avg(0-12)", 3.59, 3.78, 4.43, 3.07, 3.30),
    };
}

ResultRow result_row(const std::string& group, const std::string& setting,
                     const std::string& model, bool causal,
                     std::map<std::string, double> metrics) {
    ResultRow row;
    row.group = group;
    row.setting = setting;
    row.phonetic_model = model;
    row.causal = causal;
    row.metrics = std::move(metrics);
    return row;
}

}  // namespace

TEST_CASE("selection table: the learned-average row renders byte-exactly") {
    const std::string csv = render_selection_table_csv(published_layer_table());
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    CHECK(line == "layer,CBAK,COVL,CSIG,PESQ,VISQOL");
    std::string learned_line;
    while (std::getline(in, line))
        if (line.rfind("Lrn-W-Avg", 0) == 0) learned_line = line;
    CHECK(learned_line == "Lrn-W-Avg(0-12),3.59,3.78,4.43,3.07,3.30");
}

TEST_CASE("selection table: CSV round trip is lossless") {
    auto rows = published_layer_table();
    rows[3].seed = "17";
    rows[3].checkpoint_hash = "deadbeef";
    const auto back = parse_selection_table_csv(render_selection_table_csv(rows));
    REQUIRE(back.size() == rows.size());
    CHECK(back == rows);
}

TEST_CASE("main table: causal conditioning cells render as '-'") {
    ResultsDb db;
    db.rows.push_back(result_row("H=48,U=4,S=4", "Base", "-", true,
                                 {{"CBAK", 3.47}, {"COVL", 3.67}, {"CSIG", 4.34}, {"PESQ", 2.95},
                                  {"VISQOL", 3.20}}));
    db.rows.push_back(result_row("H=48,U=4,S=4", "Base", "-", false,
                                 {{"CBAK", 3.50}, {"COVL", 3.65}, {"CSIG", 4.33}, {"PESQ", 2.93},
                                  {"VISQOL", 3.20}}));
    db.rows.push_back(result_row("H=48,U=4,S=4", "Cond", "H-L6", false,
                                 {{"CBAK", 3.53}, {"COVL", 3.71}, {"CSIG", 4.38}, {"PESQ", 2.99},
                                  {"VISQOL", 3.25}}));

    const std::string csv = render_main_table_csv(db);
    std::istringstream in(csv);
    std::string line, cond_line;
    std::getline(in, line);
    CHECK(line ==
          "group,setting,phonetic_model,causal_CBAK,causal_COVL,causal_CSIG,causal_PESQ,"
          "causal_VISQOL,noncausal_CBAK,noncausal_COVL,noncausal_CSIG,noncausal_PESQ,"
          "noncausal_VISQOL");
    while (std::getline(in, line))
        if (line.find("Cond") != std::string::npos) cond_line = line;
    CHECK(cond_line == "\"H=48,U=4,S=4\",Cond,H-L6,-,-,-,-,-,3.53,3.71,4.38,2.99,3.25");

    const std::string md = render_main_table_markdown(db);
    CHECK(md.find("| - |") != std::string::npos);
    CHECK(md.find("3.71") != std::string::npos);
}

TEST_CASE("main table: parse(render(db)) recovers the rows exactly") {
    ResultsDb db;
    Rng rng(9);
    for (int g = 0; g < 2; ++g) {
        for (const char* setting : {"Base", "Reg", "Sup"}) {
            for (bool causal : {true, false}) {
                ResultRow row;
                row.group = "H=" + std::to_string(16 << g) + ",U=4,S=4";
                row.setting = setting;
                row.phonetic_model = std::string(setting) == "Base" ? "-" : "toy";
                row.causal = causal;
                row.metrics["SI-SNR"] = rng.normal() * 10.0;
                row.metrics["LSD"] = std::abs(rng.normal()) * 3.0;
                row.seed = std::to_string(rng.uniform_int(0, 1000));
                row.checkpoint_hash = std::to_string(rng.uniform_int(0, 1 << 30));
                db.rows.push_back(std::move(row));
            }
        }
    }
    const ResultsDb back = parse_main_table_csv(render_main_table_csv(db));
    CHECK(back == db);
}

TEST_CASE("main table: empty database renders headers only") {
    const std::string csv = render_main_table_csv(ResultsDb{});
    CHECK(csv == "group,setting,phonetic_model\n");
    const ResultsDb back = parse_main_table_csv(csv);
    CHECK(back.rows.empty());
}

TEST_CASE("results db: JSON file round trip") {
    ResultsDb db;
    db.rows.push_back(result_row("H=4,U=1,S=2", "Cond", "toy", false,
                                 {{"SI-SNR", 12.345678901234567}, {"LSD", 1.25}}));
    db.rows.back().seed = "7";
    db.rows.back().checkpoint_hash = "0123abcd";

    const auto path = std::filesystem::temp_directory_path() / "pf_results_db.json";
    save_results_db(path.string(), db);
    const ResultsDb back = load_results_db(path.string());
    CHECK(back == db);
    std::filesystem::remove(path);
}

TEST_CASE("format_double: shortest representation round trips") {
    for (double v : {3.59, 0.1, 12.345678901234567, -2.0, 1e-9}) {
        const std::string text = format_double(v);
        CHECK(std::stod(text) == v);
    }
    CHECK(format_double(3.59) == "3.59");
    CHECK(format_double(3.0) == "3");
    CHECK(format_metric(3.3) == "3.30");
    CHECK(format_metric(3.0) == "3.00");
    CHECK(format_metric(12.345678901234567) == "12.345678901234567");
    CHECK(std::stod(format_metric(1e-9)) == 1e-9);
}
