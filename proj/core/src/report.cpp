#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "factguard/error.hpp"
#include "factguard/eval.hpp"
#include "factguard/serialization.hpp"

namespace factguard {
using ojson = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

ojson metrics_json(const Metrics& m) {
    ojson j;
    j["n"] = m.n;
    j["tp"] = m.tp;
    j["fp"] = m.fp;
    j["fn"] = m.fn;
    j["tn"] = m.tn;
    j["n_unparseable"] = m.n_unparseable;
    j["n_unparseable_fake"] = m.n_unparseable_fake;
    j["accuracy"] = m.accuracy;
    j["precision"] = m.precision;
    j["recall"] = m.recall;
    j["f1"] = m.f1;
    j["precision_undefined"] = m.precision_undefined;
    j["recall_undefined"] = m.recall_undefined;
    j["f1_undefined"] = m.f1_undefined;
    return j;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string num(double v) { return fmt::format("{:.6f}", v); }

} // namespace

std::vector<fs::path> emit_report(const ReportInput& in, const fs::path& out_dir) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw Error("IO", "cannot create " + out_dir.string() + ": " + ec.message());
    std::vector<fs::path> written;

    ojson report;
    report["run"] = in.run_name;
    if (in.train_size) report["train_size"] = *in.train_size;
    report["metrics"] = metrics_json(in.metrics);

    const Metrics& m = in.metrics;
    std::string metrics_csv = "run,n,tp,fp,fn,tn,n_unparseable,accuracy,precision,recall,f1\n";
    metrics_csv += fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", csv_field(in.run_name), m.n, m.tp, m.fp, m.fn,
                               m.tn, m.n_unparseable, num(m.accuracy), num(m.precision), num(m.recall), num(m.f1));

    if (!in.sweep.empty()) {
        ojson rows = ojson::array();
        std::string sweep_csv = "ratio,precision,recall\n";
        std::string plot_csv = "alpha_over_gamma,ratio,metric,value\n";
        for (const auto& row : in.sweep) {
            ojson r;
            r["ratio"] = row.ratio.label();
            r["alpha"] = row.ratio.alpha;
            r["gamma"] = row.ratio.gamma;
            r["metrics"] = metrics_json(row.metrics);
            rows.push_back(std::move(r));
            sweep_csv += fmt::format("{},{},{}\n", row.ratio.label(), num(row.metrics.precision), num(row.metrics.recall));
            const std::string x = row.ratio.gamma > 0 ? num(row.ratio.alpha / row.ratio.gamma) : std::string("inf");
            for (auto [name, value] : {std::pair{"precision", row.metrics.precision},
                                       std::pair{"recall", row.metrics.recall}, std::pair{"f1", row.metrics.f1},
                                       std::pair{"accuracy", row.metrics.accuracy}})
                plot_csv += fmt::format("{},{},{},{}\n", x, row.ratio.label(), name, num(value));
        }
        report["cost_sweep"] = std::move(rows);
        ojson reference = ojson::array();
        for (const auto& ref : kReferenceCostSensitivity)
            reference.push_back({{"dataset", ref.dataset}, {"ratio", ref.ratio},
                                 {"precision_pct", ref.precision}, {"recall_pct", ref.recall}});
        report["reference_cost_sensitivity"] = std::move(reference);
        write_text_file(out_dir / "cost_sweep.csv", sweep_csv);
        write_text_file(out_dir / "cost_sweep_plot.csv", plot_csv);
        written.push_back(out_dir / "cost_sweep.csv");
        written.push_back(out_dir / "cost_sweep_plot.csv");
    }

    if (!in.audits.empty()) {
        ojson items = ojson::array();
        std::string audits_csv = "item_id,faithfulness,logical_consistency,evidence_grounding,rationale\n";
        double f = 0, l = 0, e = 0;
        for (const auto& a : in.audits) {
            items.push_back({{"item_id", a.item_id},
                             {"faithfulness", a.faithfulness},
                             {"logical_consistency", a.logical_consistency},
                             {"evidence_grounding", a.evidence_grounding},
                             {"rationale", a.rationale}});
            audits_csv += fmt::format("{},{},{},{},{}\n", csv_field(a.item_id), a.faithfulness, a.logical_consistency,
                                      a.evidence_grounding, csv_field(a.rationale));
            f += a.faithfulness;
            l += a.logical_consistency;
            e += a.evidence_grounding;
        }
        const double n = static_cast<double>(in.audits.size());
        ojson audit;
        audit["count"] = in.audits.size();
        audit["mean"] = {{"faithfulness", f / n}, {"logical_consistency", l / n}, {"evidence_grounding", e / n}};
        audit["items"] = std::move(items);
        report["audit"] = std::move(audit);
        write_text_file(out_dir / "audits.csv", audits_csv);
        written.push_back(out_dir / "audits.csv");
    }

    write_text_file(out_dir / "report.json", report.dump(2, ' ', false, ojson::error_handler_t::replace) + "\n");
    write_text_file(out_dir / "metrics.csv", metrics_csv);
    written.insert(written.begin(), {out_dir / "report.json", out_dir / "metrics.csv"});
    return written;
}

} // namespace factguard
