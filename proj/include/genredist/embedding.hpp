#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "genredist/corpus.hpp"
#include "genredist/distance_matrix.hpp"
#include "genredist/error.hpp"
#include "genredist/evaluation.hpp"
#include "genredist/sampling.hpp"

namespace genredist {

struct EmbeddingResult {
  std::vector<std::string> labels;
  std::vector<std::vector<double>> coords;  // one row per label
  std::vector<double> eigenvalues;          // all, descending
  double shift_applied = 0.0;
  std::vector<double> mean_dates;  // empty until attached
  std::vector<std::string> warnings;
};

// Classical (Torgerson) scaling. Negative off-diagonal distances are first
// lifted by the smallest constant that makes them all non-negative.
inline EmbeddingResult mds_embed(const DistanceMatrix& D, std::size_t dims = 2) {
  const std::size_t n = D.size();
  if (n == 0) throw Error("mds: empty matrix");
  if (dims == 0) throw Error("mds: dims must be positive");
  if (!D.is_symmetric()) throw Error("mds: " + D.method() + " is not symmetric");
  double min_off = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    if (D.at(i, i) != 0.0) throw Error("mds: nonzero diagonal at " + D.labels()[i]);
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      if (!D.has(i, j)) throw Error("mds: missing distance " + D.labels()[i] + " / " + D.labels()[j]);
      min_off = std::min(min_off, D.at(i, j));
    }
  }
  EmbeddingResult out;
  out.labels = D.labels();
  out.shift_applied = n > 1 && min_off < 0.0 ? -min_off : 0.0;

  const auto N = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd sq(N, N);
  for (Eigen::Index i = 0; i < N; ++i)
    for (Eigen::Index j = 0; j < N; ++j) {
      const double d = i == j ? 0.0 : D.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) + out.shift_applied;
      sq(i, j) = d * d;
    }
  const Eigen::MatrixXd J = Eigen::MatrixXd::Identity(N, N) - Eigen::MatrixXd::Constant(N, N, 1.0 / static_cast<double>(n));
  Eigen::MatrixXd B = -0.5 * J * sq * J;
  B = 0.5 * (B + B.transpose());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(B);
  if (solver.info() != Eigen::Success) throw Error("mds: eigendecomposition failed");
  // ascending order from Eigen; walk from the top
  const Eigen::VectorXd values = solver.eigenvalues();
  const Eigen::MatrixXd vectors = solver.eigenvectors();
  for (Eigen::Index k = N - 1; k >= 0; --k) out.eigenvalues.push_back(values[k]);

  const double scale = std::max(1.0, std::abs(out.eigenvalues.front()));
  std::size_t usable = 0;
  while (usable < dims && usable < n && out.eigenvalues[usable] > 1e-12 * scale) ++usable;
  if (usable < dims)
    out.warnings.push_back("mds: only " + std::to_string(usable) + " positive eigenvalue(s); emitting " +
                           std::to_string(usable) + " of " + std::to_string(dims) + " dimensions");

  out.coords.assign(n, std::vector<double>(usable, 0.0));
  for (std::size_t k = 0; k < usable; ++k) {
    const Eigen::VectorXd v = vectors.col(N - 1 - static_cast<Eigen::Index>(k));
    const double s = std::sqrt(out.eigenvalues[k]);
    double sign = 1.0;
    for (Eigen::Index i = 0; i < N; ++i)
      if (std::abs(v[i]) > 1e-12) {
        sign = v[i] < 0.0 ? -1.0 : 1.0;
        break;
      }
    for (std::size_t i = 0; i < n; ++i) out.coords[i][k] = sign * s * v[static_cast<Eigen::Index>(i)];
  }
  return out;
}

// Mean publication year of each category's sample, keyed by "Name:kind".
inline std::map<std::string, double> mean_dates(const CorpusIndex& index, const std::vector<Sample>& samples) {
  std::map<std::string, double> out;
  for (const auto& s : samples) {
    if (s.volume_ids.empty()) continue;
    double sum = 0.0;
    for (const auto& id : s.volume_ids) sum += index.volume(id).year;
    out[s.category ? s.category->str() : s.label] = sum / static_cast<double>(s.volume_ids.size());
  }
  return out;
}

inline void attach_dates(EmbeddingResult& result, const std::map<std::string, double>& dates) {
  result.mean_dates.clear();
  for (const auto& label : result.labels) {
    auto it = dates.find(label);
    if (it == dates.end()) throw Error("no mean date for " + label);
    result.mean_dates.push_back(it->second);
  }
}

inline std::string coords_csv(const EmbeddingResult& r) {
  std::ostringstream os;
  os << "label,x,y,mean_date\n";
  for (std::size_t i = 0; i < r.labels.size(); ++i) {
    const auto& c = r.coords[i];
    os << csv::quote(r.labels[i]) << ',' << csv::format_number(c.size() > 0 ? c[0] : 0.0) << ','
       << csv::format_number(c.size() > 1 ? c[1] : 0.0) << ','
       << csv::format_number(r.mean_dates.empty() ? std::numeric_limits<double>::quiet_NaN() : r.mean_dates[i])
       << '\n';
  }
  return os.str();
}

namespace detail {

// blue (early) to orange (late)
inline std::string date_color(double t) {
  t = std::clamp(t, 0.0, 1.0);
  const int r = static_cast<int>(std::lround(40 + t * (230 - 40)));
  const int g = static_cast<int>(std::lround(90 + t * (120 - 90)));
  const int b = static_cast<int>(std::lround(200 + t * (30 - 200)));
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

}  // namespace detail

inline std::string render_map(const EmbeddingResult& r) {
  if (r.coords.empty()) throw Error("render_map: no coordinates");
  const double size = 600, margin = 60, legend = 50;
  double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
  for (const auto& c : r.coords) {
    const double x = c.size() > 0 ? c[0] : 0.0, y = c.size() > 1 ? c[1] : 0.0;
    xmin = std::min(xmin, x), xmax = std::max(xmax, x), ymin = std::min(ymin, y), ymax = std::max(ymax, y);
  }
  const double span = std::max({xmax - xmin, ymax - ymin, 1e-12});
  auto px = [&](double x) { return margin + (x - xmin) / span * (size - 2 * margin); };
  auto py = [&](double y) { return size - margin - (y - ymin) / span * (size - 2 * margin); };

  double dmin = 0, dmax = 0;
  if (!r.mean_dates.empty()) {
    dmin = *std::min_element(r.mean_dates.begin(), r.mean_dates.end());
    dmax = *std::max_element(r.mean_dates.begin(), r.mean_dates.end());
  }
  auto shade = [&](std::size_t i) {
    if (r.mean_dates.empty() || dmax == dmin) return detail::date_color(0.5);
    return detail::date_color((r.mean_dates[i] - dmin) / (dmax - dmin));
  };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << svg::num(size) << "\" height=\""
     << svg::num(size + legend) << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t i = 0; i < r.labels.size(); ++i) {
    const auto& c = r.coords[i];
    const double x = px(c.size() > 0 ? c[0] : 0.0), y = py(c.size() > 1 ? c[1] : 0.0);
    os << "<circle cx=\"" << svg::num(x) << "\" cy=\"" << svg::num(y) << "\" r=\"6\" fill=\"" << shade(i)
       << "\" stroke=\"#333\"/>\n";
    os << "<text x=\"" << svg::num(x + 8) << "\" y=\"" << svg::num(y + 4) << "\">" << svg::escape(r.labels[i])
       << "</text>\n";
  }
  const double ly = size + 10;
  if (r.mean_dates.empty()) {
    os << "<text x=\"" << svg::num(margin) << "\" y=\"" << svg::num(ly + 14) << "\">no dates</text>\n";
  } else if (dmax == dmin) {
    os << "<rect x=\"" << svg::num(margin) << "\" y=\"" << svg::num(ly) << "\" width=\"20\" height=\"14\" fill=\""
       << detail::date_color(0.5) << "\"/>\n";
    os << "<text x=\"" << svg::num(margin + 28) << "\" y=\"" << svg::num(ly + 11) << "\">mean date "
       << svg::num(dmin) << "</text>\n";
  } else {
    const int steps = 10;
    const double w = 20;
    for (int k = 0; k < steps; ++k)
      os << "<rect x=\"" << svg::num(margin + 60 + k * w) << "\" y=\"" << svg::num(ly) << "\" width=\"" << svg::num(w)
         << "\" height=\"14\" fill=\"" << detail::date_color(k / static_cast<double>(steps - 1)) << "\"/>\n";
    os << "<text x=\"" << svg::num(margin + 52) << "\" y=\"" << svg::num(ly + 11) << "\" text-anchor=\"end\">"
       << svg::num(dmin) << "</text>\n";
    os << "<text x=\"" << svg::num(margin + 68 + steps * w) << "\" y=\"" << svg::num(ly + 11) << "\">"
       << svg::num(dmax) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace genredist
