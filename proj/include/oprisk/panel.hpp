#ifndef OPRISK_PANEL_HPP
#define OPRISK_PANEL_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace oprisk {

// Observed annual loss panel: per-year event counts and the exceedance
// amounts (loss minus threshold, strictly positive) for each event.
struct PanelDataset {
  double threshold_u = 0.0;
  std::vector<std::uint64_t> counts;
  std::vector<std::vector<double>> exceedances;  // exceedances[t].size() == counts[t]

  int years() const { return static_cast<int>(counts.size()); }
  std::uint64_t total_events() const;

  // Throws std::invalid_argument naming the violated invariant.
  void validate() const;
};

// Line-oriented text schema:
//   threshold=<float> years=<int>
//   year=<int> count=<int>          (years numbered 1..T, in order)
//   exc=<float>                     (count lines per year)
// A JSON mirror {"threshold": ..., "counts": [...], "exceedances": [[...]]}
// is detected on import by a leading '{'.
PanelDataset import_panel(const std::string& path);
void export_panel(const PanelDataset& data, const std::string& path);
void export_panel_json(const PanelDataset& data, const std::string& path);

}  // namespace oprisk

#endif
