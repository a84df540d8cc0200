#include "lambdalab/experiment.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <system_error>

namespace lambdalab {

bool ReportBundle::gated_pass() const {
    return std::all_of(records.begin(), records.end(),
                       [](const ExperimentRecord& r) { return !r.gated || r.status == "pass"; });
}

nlohmann::json ReportBundle::to_json() const {
    nlohmann::json ex = nlohmann::json::array();
    std::size_t passed = 0;
    std::size_t failed = 0;
    std::size_t errored = 0;
    std::size_t gated_failures = 0;
    for (const auto& r : records) {
        nlohmann::json j{{"index", r.index}, {"type", r.type}, {"anchor", r.anchor}, {"gate", r.gated},
                         {"status", r.status}, {"result", r.result}};
        if (!r.error.empty()) {
            j["error"] = r.error;
        }
        ex.push_back(std::move(j));
        passed += r.status == "pass";
        failed += r.status == "fail";
        errored += r.status == "error";
        gated_failures += r.gated && r.status != "pass";
    }
    return {{"manifest", manifest},
            {"experiments", std::move(ex)},
            {"summary",
             {{"total", records.size()},
              {"passed", passed},
              {"failed", failed},
              {"errored", errored},
              {"gated_failures", gated_failures},
              {"pass", gated_pass()}}}};
}

ReportFormat report_format_from_string(const std::string& text) {
    if (text == "json") return ReportFormat::json;
    if (text == "csv") return ReportFormat::csv;
    if (text == "both") return ReportFormat::both;
    throw PreconditionError("format must be json, csv or both, got '" + text + "'");
}

std::string to_csv(const TraceTable& table) {
    std::ostringstream os;
    auto row = [&os](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            const bool quote = cells[i].find_first_of(",\"\n") != std::string::npos;
            if (i) os << ',';
            if (quote) {
                os << '"';
                for (char ch : cells[i]) {
                    if (ch == '"') os << '"';
                    os << ch;
                }
                os << '"';
            } else {
                os << cells[i];
            }
        }
        os << '\n';
    };
    row(table.columns);
    for (const auto& r : table.rows) {
        row(r);
    }
    return os.str();
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    out << content;
    if (!out) {
        throw Error("write failed for " + path.string());
    }
}

}  // namespace

std::vector<std::filesystem::path> emit_report(const ReportBundle& bundle, const std::filesystem::path& dir,
                                               ReportFormat format) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) {
        throw Error("output directory " + dir.string() + " is not writable" + (ec ? ": " + ec.message() : ""));
    }
    std::vector<std::filesystem::path> written;
    written.push_back(dir / "manifest.json");
    write_file(written.back(), bundle.manifest.dump(2) + "\n");
    if (format != ReportFormat::csv) {
        written.push_back(dir / "report.json");
        write_file(written.back(), bundle.to_json().dump(2) + "\n");
    }
    if (format != ReportFormat::json) {
        for (const auto& t : bundle.traces) {
            written.push_back(dir / t.file_name);
            write_file(written.back(), to_csv(t));
        }
    }
    return written;
}

int exit_status(const ReportBundle& bundle) { return bundle.gated_pass() ? 0 : 1; }

}  // namespace lambdalab
