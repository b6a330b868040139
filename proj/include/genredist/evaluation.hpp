#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <nlohmann/json.hpp>

#include "genredist/distance_matrix.hpp"
#include "genredist/error.hpp"
#include "genredist/stats.hpp"

namespace genredist {

struct EvalReport {
  std::string method;
  double r = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t n_pairs = 0;
  std::vector<std::pair<std::string, std::string>> excluded_pairs;
};

// Fisher z interval tanh(atanh(r) ± z / sqrt(n - 3)).
inline std::pair<double, double> pearson_ci(double r, std::size_t n, double level = 0.95) {
  if (n < 4) throw Error("pearson_ci: need n >= 4, got " + std::to_string(n));
  if (!(level > 0.0 && level < 1.0)) throw Error("pearson_ci: level must be in (0, 1)");
  if (std::abs(r) >= 1.0) return {r, r};
  const boost::math::normal standard;
  const double z = boost::math::quantile(standard, 0.5 + level / 2.0);
  const double half = z / std::sqrt(static_cast<double>(n) - 3.0);
  const double center = std::atanh(r);
  return {std::tanh(center - half), std::tanh(center + half)};
}

namespace detail {

// Upper-triangle pairs (by label) present in every matrix.
inline std::vector<std::pair<std::string, std::string>> all_pairs(const std::vector<std::string>& labels) {
  std::vector<std::pair<std::string, std::string>> out;
  for (std::size_t i = 0; i < labels.size(); ++i)
    for (std::size_t j = i + 1; j < labels.size(); ++j) out.emplace_back(labels[i], labels[j]);
  return out;
}

inline void check_labels(const DistanceMatrix& m, const DistanceMatrix& social) {
  const std::set<std::string> a(m.labels().begin(), m.labels().end());
  const std::set<std::string> b(social.labels().begin(), social.labels().end());
  if (a != b || a.size() != m.size()) throw Error("evaluate: " + m.method() + " and " + social.method() + " have different label sets");
  if (!m.is_symmetric()) throw Error("evaluate: " + m.method() + " is not symmetric");
  if (!social.is_symmetric()) throw Error("evaluate: " + social.method() + " is not symmetric");
}

inline bool has_pair(const DistanceMatrix& m, const std::pair<std::string, std::string>& p) {
  return m.has(m.index_of(p.first), m.index_of(p.second));
}

inline EvalReport correlate_over(const DistanceMatrix& textual, const DistanceMatrix& social,
                                 const std::vector<std::pair<std::string, std::string>>& pairs,
                                 std::vector<std::pair<std::string, std::string>> excluded, double level) {
  std::vector<double> x, y;
  for (const auto& p : pairs) {
    x.push_back(textual.at(textual.index_of(p.first), textual.index_of(p.second)));
    y.push_back(social.at(social.index_of(p.first), social.index_of(p.second)));
  }
  if (x.size() < 3) throw Error("evaluate " + textual.method() + ": fewer than 3 comparable pairs");
  EvalReport report;
  report.method = textual.method();
  report.r = stats::pearson(x, y);
  report.n_pairs = x.size();
  report.excluded_pairs = std::move(excluded);
  if (report.n_pairs >= 4) {
    std::tie(report.ci_low, report.ci_high) = pearson_ci(report.r, report.n_pairs, level);
  } else {
    report.ci_low = -1.0;
    report.ci_high = 1.0;
  }
  return report;
}

}  // namespace detail

// Pearson r between the off-diagonal entries of two distance matrices. Pairs
// missing from either are excluded and listed.
inline EvalReport correlate(const DistanceMatrix& textual, const DistanceMatrix& social, double level = 0.95) {
  detail::check_labels(textual, social);
  std::vector<std::pair<std::string, std::string>> kept, excluded;
  for (const auto& p : detail::all_pairs(textual.labels()))
    (detail::has_pair(textual, p) && detail::has_pair(social, p) ? kept : excluded).push_back(p);
  return detail::correlate_over(textual, social, kept, std::move(excluded), level);
}

// Correlates several methods over a common pair set: a pair missing from any
// method (or from the social matrix) is excluded everywhere.
inline std::vector<EvalReport> correlate_all(const std::vector<DistanceMatrix>& textual, const DistanceMatrix& social,
                                             double level = 0.95) {
  for (const auto& m : textual) detail::check_labels(m, social);
  std::vector<std::pair<std::string, std::string>> kept, excluded;
  for (const auto& p : detail::all_pairs(social.labels())) {
    bool ok = detail::has_pair(social, p);
    for (const auto& m : textual) ok = ok && detail::has_pair(m, p);
    (ok ? kept : excluded).push_back(p);
  }
  std::vector<EvalReport> out;
  for (const auto& m : textual) out.push_back(detail::correlate_over(m, social, kept, excluded, level));
  return out;
}

struct MethodComparison {
  std::vector<EvalReport> ranking;  // r descending
  std::vector<std::pair<std::string, std::string>> overlapping;
  std::string caveat;
};

inline constexpr const char* kComparisonCaveat =
    "Overlapping intervals do not establish equal performance: the methods are scored on the same pairs, so their "
    "correlations are dependent and a paired comparison could separate them more sharply.";

inline MethodComparison compare_methods(std::vector<EvalReport> reports) {
  if (reports.size() < 2) throw Error("compare_methods: need at least two reports");
  std::stable_sort(reports.begin(), reports.end(), [](const auto& a, const auto& b) { return a.r > b.r; });
  MethodComparison out;
  for (std::size_t i = 0; i < reports.size(); ++i)
    for (std::size_t j = i + 1; j < reports.size(); ++j)
      if (reports[i].ci_low <= reports[j].ci_high && reports[j].ci_low <= reports[i].ci_high)
        out.overlapping.emplace_back(reports[i].method, reports[j].method);
  out.ranking = std::move(reports);
  out.caveat = kComparisonCaveat;
  return out;
}

inline nlohmann::json to_json(const EvalReport& r) {
  auto excluded = nlohmann::json::array();
  for (const auto& [a, b] : r.excluded_pairs) excluded.push_back({a, b});
  return {{"method", r.method},   {"r", r.r}, {"ci_low", r.ci_low}, {"ci_high", r.ci_high},
          {"n_pairs", r.n_pairs}, {"excluded_pairs", excluded}};
}

inline nlohmann::json report_json(const std::vector<EvalReport>& reports, double level = 0.95) {
  nlohmann::json j;
  j["ci_method"] = "fisher-z";
  j["ci_level"] = level;
  j["social"] = "social-pmi";
  auto methods = nlohmann::json::array();
  for (const auto& r : reports) methods.push_back(to_json(r));
  j["methods"] = methods;
  if (reports.size() >= 2) {
    const auto cmp = compare_methods(reports);
    auto ranking = nlohmann::json::array();
    for (const auto& r : cmp.ranking) ranking.push_back(r.method);
    auto overlap = nlohmann::json::array();
    for (const auto& [a, b] : cmp.overlapping) overlap.push_back({a, b});
    j["ranking"] = ranking;
    j["ci_overlap"] = overlap;
    j["caveat"] = cmp.caveat;
  }
  return j;
}

namespace svg {

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline void write(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

}  // namespace svg

// Horizontal bars of r per method with CI whiskers, on a fixed [-1, 1] axis.
inline std::string render_bars(const std::vector<EvalReport>& reports) {
  const double width = 640, left = 170, right = 30, row = 36, top = 30;
  const double height = top + row * static_cast<double>(reports.size()) + 40;
  const double plot = width - left - right;
  auto xpos = [&](double r) { return left + (std::clamp(r, -1.0, 1.0) + 1.0) / 2.0 * plot; };
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << svg::num(width) << "\" height=\"" << svg::num(height)
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  const double axis_y = top + row * static_cast<double>(reports.size());
  os << "<line x1=\"" << svg::num(xpos(0)) << "\" y1=\"" << svg::num(top - 10) << "\" x2=\"" << svg::num(xpos(0))
     << "\" y2=\"" << svg::num(axis_y) << "\" stroke=\"#888\"/>\n";
  for (double tick : {-1.0, -0.5, 0.0, 0.5, 1.0})
    os << "<text x=\"" << svg::num(xpos(tick)) << "\" y=\"" << svg::num(axis_y + 16)
       << "\" text-anchor=\"middle\">" << svg::num(tick) << "</text>\n";
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    const double y = top + row * static_cast<double>(i);
    const double x0 = std::min(xpos(0), xpos(r.r)), x1 = std::max(xpos(0), xpos(r.r));
    os << "<text x=\"" << svg::num(left - 8) << "\" y=\"" << svg::num(y + row / 2 + 4) << "\" text-anchor=\"end\">"
       << svg::escape(r.method) << "</text>\n";
    os << "<rect x=\"" << svg::num(x0) << "\" y=\"" << svg::num(y + 6) << "\" width=\"" << svg::num(x1 - x0)
       << "\" height=\"" << svg::num(row - 12) << "\" fill=\"#6a8caf\"/>\n";
    const double cy = y + row / 2;
    os << "<line x1=\"" << svg::num(xpos(r.ci_low)) << "\" y1=\"" << svg::num(cy) << "\" x2=\""
       << svg::num(xpos(r.ci_high)) << "\" y2=\"" << svg::num(cy) << "\" stroke=\"black\"/>\n";
    for (double e : {r.ci_low, r.ci_high})
      os << "<line x1=\"" << svg::num(xpos(e)) << "\" y1=\"" << svg::num(cy - 5) << "\" x2=\"" << svg::num(xpos(e))
         << "\" y2=\"" << svg::num(cy + 5) << "\" stroke=\"black\"/>\n";
  }
  os << "<text x=\"" << svg::num(left + plot / 2) << "\" y=\"" << svg::num(height - 6)
     << "\" text-anchor=\"middle\">Pearson r with social distance</text>\n";
  os << "</svg>\n";
  return os.str();
}

}  // namespace genredist
