#include "oprisk/panel.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "oprisk/io.hpp"

namespace oprisk {

namespace {

[[noreturn]] void parse_fail(const std::string& path, int line, const std::string& what) {
  throw std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
}

PanelDataset import_panel_text(const std::string& path, const std::string& text) {
  PanelDataset data;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;

  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) return true;
    }
    return false;
  };

  if (!next_line()) parse_fail(path, 1, "empty panel file");
  int years = 0;
  if (std::sscanf(line.c_str(), "threshold=%lf years=%d", &data.threshold_u, &years) != 2) {
    parse_fail(path, line_no, "expected 'threshold=<float> years=<int>', got '" + line + "'");
  }
  if (years < 1) parse_fail(path, line_no, "years must be >= 1");

  for (int t = 1; t <= years; ++t) {
    if (!next_line()) parse_fail(path, line_no, "missing record for year " + std::to_string(t));
    int year = 0;
    long long count = 0;
    if (std::sscanf(line.c_str(), "year=%d count=%lld", &year, &count) != 2) {
      parse_fail(path, line_no, "expected 'year=<int> count=<int>', got '" + line + "'");
    }
    if (year != t) {
      parse_fail(path, line_no, "expected year " + std::to_string(t) + ", got " +
                                    std::to_string(year));
    }
    if (count < 0) parse_fail(path, line_no, "negative count");
    data.counts.push_back(static_cast<std::uint64_t>(count));
    data.exceedances.emplace_back();
    auto& exc = data.exceedances.back();
    exc.reserve(static_cast<std::size_t>(count));
    for (long long i = 0; i < count; ++i) {
      if (!next_line()) {
        parse_fail(path, line_no, "year " + std::to_string(t) + " promises " +
                                      std::to_string(count) + " exceedances, file ended after " +
                                      std::to_string(i));
      }
      double y = 0.0;
      if (std::sscanf(line.c_str(), "exc=%lf", &y) != 1) {
        parse_fail(path, line_no, "expected 'exc=<float>', got '" + line + "'");
      }
      exc.push_back(y);
    }
  }
  if (next_line()) parse_fail(path, line_no, "unexpected trailing record: '" + line + "'");
  return data;
}

PanelDataset import_panel_json(const std::string& path, const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  PanelDataset data;
  try {
    data.threshold_u = j.at("threshold").get<double>();
    data.counts = j.at("counts").get<std::vector<std::uint64_t>>();
    data.exceedances = j.at("exceedances").get<std::vector<std::vector<double>>>();
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  return data;
}

}  // namespace

std::uint64_t PanelDataset::total_events() const {
  std::uint64_t n = 0;
  for (auto c : counts) n += c;
  return n;
}

void PanelDataset::validate() const {
  if (!(threshold_u > 0.0) || !std::isfinite(threshold_u)) {
    throw std::invalid_argument("panel threshold must be finite and > 0");
  }
  if (counts.empty()) throw std::invalid_argument("panel must cover at least one year");
  if (exceedances.size() != counts.size()) {
    throw std::invalid_argument("panel has " + std::to_string(counts.size()) +
                                " counts but " + std::to_string(exceedances.size()) +
                                " exceedance lists");
  }
  for (std::size_t t = 0; t < counts.size(); ++t) {
    if (exceedances[t].size() != counts[t]) {
      throw std::invalid_argument("year " + std::to_string(t + 1) + " count " +
                                  std::to_string(counts[t]) + " does not match " +
                                  std::to_string(exceedances[t].size()) + " exceedances");
    }
    for (double y : exceedances[t]) {
      if (!(y > 0.0) || !std::isfinite(y)) {
        throw std::invalid_argument("year " + std::to_string(t + 1) +
                                    " has a non-positive or non-finite exceedance");
      }
    }
  }
}

PanelDataset import_panel(const std::string& path) {
  const std::string text = read_text_file(path);
  const auto first = text.find_first_not_of(" \t\r\n");
  PanelDataset data = (first != std::string::npos && text[first] == '{')
                          ? import_panel_json(path, text)
                          : import_panel_text(path, text);
  try {
    data.validate();
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  return data;
}

void export_panel(const PanelDataset& data, const std::string& path) {
  data.validate();
  std::ostringstream out;
  out << "threshold=" << fmt_g17(data.threshold_u) << " years=" << data.years() << "\n";
  for (int t = 0; t < data.years(); ++t) {
    out << "year=" << (t + 1) << " count=" << data.counts[t] << "\n";
    for (double y : data.exceedances[t]) out << "exc=" << fmt_g17(y) << "\n";
  }
  write_text_atomic(path, out.str());
}

void export_panel_json(const PanelDataset& data, const std::string& path) {
  data.validate();
  nlohmann::json j;
  j["threshold"] = data.threshold_u;
  j["counts"] = data.counts;
  j["exceedances"] = data.exceedances;
  write_text_atomic(path, j.dump(2) + "\n");
}

}  // namespace oprisk
