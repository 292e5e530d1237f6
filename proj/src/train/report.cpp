#include "jema/train/report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace jema::train {

long variation_pct(double baseline_mse, double mse) {
    if (!(baseline_mse > 0.0) || !std::isfinite(baseline_mse)) {
        throw std::invalid_argument("variation baseline must be a positive MSE");
    }
    if (!std::isfinite(mse) || mse < 0.0) {
        throw std::invalid_argument("variation input must be a nonnegative MSE");
    }
    return std::lround(100.0 * (baseline_mse - mse) / baseline_mse);
}

std::vector<TableRow> build_report_table(const std::map<LossKind, EvalPair>& reports) {
    const auto reg = reports.find(LossKind::reg);
    if (reg == reports.end()) {
        throw std::invalid_argument("results table needs the Reg baseline row");
    }
    const double baseline = reg->second.mse_multi;

    std::vector<TableRow> rows;
    for (LossKind kind : {LossKind::reg, LossKind::supcon, LossKind::rnc, LossKind::jema_cosine,
                          LossKind::jema_l2, LossKind::jema_l1}) {
        const auto it = reports.find(kind);
        if (it == reports.end()) continue;
        TableRow row;
        row.kind = kind;
        row.mse_multi = it->second.mse_multi;
        row.mse_uni = it->second.mse_uni;
        row.var_multi = variation_pct(baseline, it->second.mse_multi);
        row.var_uni = variation_pct(baseline, it->second.mse_uni);
        rows.push_back(row);
    }
    return rows;
}

namespace {

std::string scaled(double mse) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", mse * 1e4);
    return buf;
}

}  // namespace

std::string report_table_csv(const std::vector<TableRow>& rows) {
    std::ostringstream out;
    out << "loss,mse_multi_x1e-4,mse_uni_x1e-4,variation_multi_pct,variation_uni_pct\n";
    for (const TableRow& row : rows) {
        out << table_label(row.kind) << ',' << scaled(row.mse_multi) << ',' << scaled(row.mse_uni)
            << ',' << row.var_multi << ',' << row.var_uni << '\n';
    }
    return out.str();
}

std::string report_table_text(const std::vector<TableRow>& rows) {
    std::ostringstream out;
    // Reported MSE is the mean of the normalized length and height MSEs.
    char line[160];
    std::snprintf(line, sizeof(line), "%-14s %14s %14s %12s %12s\n", "loss", "MSE multi(e-4)",
                  "MSE uni(e-4)", "var multi %", "var uni %");
    out << line;
    for (const TableRow& row : rows) {
        std::snprintf(line, sizeof(line), "%-14s %14s %14s %12ld %12ld\n", table_label(row.kind),
                      scaled(row.mse_multi).c_str(), scaled(row.mse_uni).c_str(), row.var_multi,
                      row.var_uni);
        out << line;
    }
    return out.str();
}

}  // namespace jema::train
