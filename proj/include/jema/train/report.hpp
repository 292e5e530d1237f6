#pragma once

#include <map>
#include <string>
#include <vector>

#include "jema/train/trainer.hpp"

namespace jema::train {

// 100 * (baseline - mse) / baseline, rounded to the nearest integer for
// reporting. Positive numbers mean improvement over the baseline.
long variation_pct(double baseline_mse, double mse);

struct TableRow {
    LossKind kind = LossKind::reg;
    double mse_multi = 0.0;
    double mse_uni = 0.0;
    long var_multi = 0;
    long var_uni = 0;
};

// Rows in canonical order (Reg, SupCon, RnC, Cosine, L2-distance,
// L1-distance) for the kinds present; variations are taken against the Reg
// multimodal MSE, which must be present.
std::vector<TableRow> build_report_table(const std::map<LossKind, EvalPair>& reports);

// 5 columns: labels plus the two MSEs (displayed x1e-4, as in the results
// table) and the two variation percentages.
std::string report_table_csv(const std::vector<TableRow>& rows);
std::string report_table_text(const std::vector<TableRow>& rows);

}  // namespace jema::train
