#pragma once

// Result files, their readers, and the figures and tables built from them.
//
// Result directory layout:
//   episodes.csv     cell,replication,episode,actions,rewards
//                    actions is one letter per agent (F fair, C collusive),
//                    rewards are ';'-separated in agent order
//   outcomes.csv     cell,episode,freq_all_fp,freq_all_cp,freq_other,
//                    ci_all_fp,ci_all_cp,ci_other
//   diagnostics.csv  cell,episode,metric,mean,ci  (only defined values)
//   heatmap.json     per-cell raw and scaled collusion scores
//   manifest.json    config echo, seeds, timestamps, achieved sigma, status
//   config.txt       the config file that reproduces the run
// Episodes are 1-based; regret rows also carry episode 0, the empty history.

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mpmg/config.hpp"
#include "mpmg/experiment.hpp"

namespace mpmg {

inline constexpr const char* kToolVersion = "1.0.0";

// Missing or malformed result files.
class ReportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline const char* kEpisodesHeader = "cell,replication,episode,actions,rewards";
inline const char* kOutcomesHeader =
    "cell,episode,freq_all_fp,freq_all_cp,freq_other,ci_all_fp,ci_all_cp,ci_other";
inline const char* kDiagnosticsHeader = "cell,episode,metric,mean,ci";

inline std::string ActionLetters(const StrategyProfile& p) {
  std::string s;
  for (int i = 0; i < p.size(); ++i) s += p.bit(i) ? 'C' : 'F';
  return s;
}

inline std::string IsoTimestamp(std::chrono::system_clock::time_point t) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// ---- CSV rendering --------------------------------------------------------

inline std::string RenderEpisodesCsv(std::span<const CellResult> cells) {
  std::ostringstream os;
  os << kEpisodesHeader << '\n';
  for (const auto& c : cells) {
    if (c.error) continue;
    const std::string id = c.spec.CellId();
    for (const auto& log : c.logs) {
      for (std::size_t ep = 0; ep < log.episodes.size(); ++ep) {
        const auto& e = log.episodes[ep];
        os << id << ',' << log.replication << ',' << ep + 1 << ',' << ActionLetters(e.profile) << ',';
        for (std::size_t i = 0; i < e.rewards.size(); ++i) os << (i ? ";" : "") << FormatDouble(e.rewards[i]);
        os << '\n';
      }
    }
  }
  return os.str();
}

using NamedOutcomes = std::vector<std::pair<std::string, OutcomeSeries>>;

inline std::string RenderOutcomesCsv(const NamedOutcomes& cells) {
  std::ostringstream os;
  os << kOutcomesHeader << '\n';
  for (const auto& [id, s] : cells) {
    for (int ep = 0; ep < s.episodes(); ++ep) {
      const auto e = static_cast<std::size_t>(ep);
      os << id << ',' << ep + 1 << ',' << FormatDouble(s.all_fp[e]) << ',' << FormatDouble(s.all_cp[e]) << ','
         << FormatDouble(s.other[e]) << ',' << FormatDouble(s.ci_fp[e]) << ',' << FormatDouble(s.ci_cp[e]) << ','
         << FormatDouble(s.ci_other[e]) << '\n';
    }
  }
  return os.str();
}

inline NamedOutcomes OutcomesOf(std::span<const CellResult> cells) {
  NamedOutcomes out;
  for (const auto& c : cells) {
    if (!c.error) out.emplace_back(c.spec.CellId(), c.outcomes);
  }
  return out;
}

inline std::string RenderDiagnosticsCsv(std::span<const CellResult> cells) {
  std::ostringstream os;
  os << kDiagnosticsHeader << '\n';
  for (const auto& c : cells) {
    if (c.error) continue;
    const std::string id = c.spec.CellId();
    for (const auto& series : DiagnosticSeries(c)) {
      for (std::size_t ep = 0; ep < series.mean.size(); ++ep) {
        if (std::isnan(series.mean[ep])) continue;
        os << id << ',' << static_cast<std::size_t>(series.first_episode) + ep << ',' << series.metric << ',' << FormatDouble(series.mean[ep]) << ','
           << FormatDouble(series.ci[ep]) << '\n';
      }
    }
  }
  return os.str();
}

// ---- JSON -----------------------------------------------------------------

inline nlohmann::json HeatmapJson(const HeatmapResult& h, std::span<const HeatmapInput> inputs) {
  nlohmann::json cells = nlohmann::json::array();
  for (std::size_t i = 0; i < h.cells.size(); ++i) {
    cells.push_back({{"agent", h.cells[i].agent},
                     {"config", h.cells[i].config},
                     {"freq_all_fp", inputs[i].freq_fp},
                     {"freq_all_cp", inputs[i].freq_cp},
                     {"freq_other", inputs[i].freq_other},
                     {"raw", h.cells[i].raw},
                     {"scaled", h.cells[i].scaled}});
  }
  return {{"score", "raw = freq_all_cp - freq_all_fp at the last episode; scaled = min-max of raw"},
          {"degenerate", h.degenerate},
          {"cells", cells}};
}

struct RunTimes {
  std::chrono::system_clock::time_point started;
  std::chrono::system_clock::time_point finished;
};

inline nlohmann::json ManifestJson(const RunConfig& config, const std::string& command, const GridResult& grid,
                                   const RunTimes& times) {
  nlohmann::json knobs = nlohmann::json::object();
  for (const auto& k : Knobs()) knobs[k.key] = k.get(config);
  knobs["schema_version"] = std::to_string(kConfigSchemaVersion);

  nlohmann::json cells = nlohmann::json::array();
  std::size_t episode_rows = 0;
  for (const auto& c : grid.cells) {
    nlohmann::json cell = {{"cell", c.spec.CellId()},
                           {"agent", AgentKindName(c.spec.agent)},
                           {"n", c.spec.market.n},
                           {"sigma_target", c.spec.market.sigma_beta},
                           {"status", c.error ? "failed" : "ok"}};
    if (c.betas.profile.size() > 0) {
      cell["betas"] = c.betas.profile.values();
      cell["achieved_sigma"] = c.betas.achieved_sigma;
    }
    if (c.error) {
      cell["error"] = *c.error;
    } else {
      episode_rows += static_cast<std::size_t>(c.spec.replications) * static_cast<std::size_t>(c.spec.episodes);
    }
    cells.push_back(std::move(cell));
  }
  return {{"tool", "mpmg"},
          {"tool_version", kToolVersion},
          {"command", command},
          {"base_seed", config.spec.base_seed},
          {"seed_derivation", "splitmix64 mix of (base_seed, fnv1a(cell id), replication, agent index)"},
          {"outcome_mode", "cumulative"},
          {"ci", "1.96 * population sd / sqrt(replications)"},
          {"started_at", IsoTimestamp(times.started)},
          {"finished_at", IsoTimestamp(times.finished)},
          {"status", grid.ok() ? "ok" : "failed"},
          {"config", knobs},
          {"cells", cells},
          {"rows", {{"episodes.csv", episode_rows}}}};
}

// ---- writing --------------------------------------------------------------

inline void WriteText(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ReportError("cannot write " + path.string());
  out << text;
  if (!out) throw ReportError("failed while writing " + path.string());
}

// Writes the whole result set. The manifest goes out last, so a directory
// with a manifest always holds the files it describes.
inline void WriteResults(const std::filesystem::path& dir, const RunConfig& config, const std::string& command,
                         const GridResult& grid, const RunTimes& times) {
  std::filesystem::create_directories(dir);
  WriteText(dir / "episodes.csv", RenderEpisodesCsv(grid.cells));
  WriteText(dir / "outcomes.csv", RenderOutcomesCsv(OutcomesOf(grid.cells)));
  WriteText(dir / "diagnostics.csv", RenderDiagnosticsCsv(grid.cells));
  const auto table = LastEpisodeTable(grid.cells);
  const nlohmann::json heat = grid.heatmap ? HeatmapJson(*grid.heatmap, table)
                                           : nlohmann::json{{"degenerate", true}, {"cells", nlohmann::json::array()}};
  WriteText(dir / "heatmap.json", heat.dump(2) + "\n");
  WriteText(dir / "config.txt", RenderConfig(config));
  WriteText(dir / "manifest.json", ManifestJson(config, command, grid, times).dump(2) + "\n");
}

// ---- reading --------------------------------------------------------------

inline std::string ReadText(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ReportError("cannot read " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline std::vector<std::string> SplitFields(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

// Data rows of a CSV after checking the header.
inline std::vector<std::vector<std::string>> ReadCsv(const std::filesystem::path& path, const char* header,
                                                    std::size_t columns) {
  std::istringstream in(ReadText(path));
  std::string line;
  if (!std::getline(in, line) || line != header) {
    throw ReportError(path.filename().string() + ": unexpected header");
  }
  std::vector<std::vector<std::string>> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = SplitFields(line, ',');
    if (fields.size() != columns) {
      throw ReportError(path.filename().string() + ":" + std::to_string(line_no) + ": expected " +
                        std::to_string(columns) + " fields");
    }
    rows.push_back(std::move(fields));
  }
  return rows;
}

inline double ParseCsvDouble(const std::string& s) {
  double x = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) throw ReportError("bad number '" + s + "'");
  return x;
}

inline int ParseCsvInt(const std::string& s) {
  int x = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) throw ReportError("bad integer '" + s + "'");
  return x;
}

// Joint profiles per cell, [replication][episode], in file order.
using CellProfiles = std::vector<std::pair<std::string, ProfileMatrix>>;

inline CellProfiles ReadEpisodeProfiles(const std::filesystem::path& path) {
  CellProfiles out;
  for (const auto& row : ReadCsv(path, kEpisodesHeader, 5)) {
    if (out.empty() || out.back().first != row[0]) out.emplace_back(row[0], ProfileMatrix{});
    auto& matrix = out.back().second;
    const int rep = ParseCsvInt(row[1]);
    if (rep == static_cast<int>(matrix.size())) matrix.emplace_back();
    if (rep != static_cast<int>(matrix.size()) - 1) throw ReportError("episodes.csv: replications out of order");
    std::vector<int> bits;
    for (char ch : row[3]) {
      if (ch != 'F' && ch != 'C') throw ReportError("episodes.csv: bad action letter");
      bits.push_back(ch == 'C' ? 1 : 0);
    }
    matrix.back().push_back(StrategyProfile::FromBits(bits));
  }
  return out;
}

// Outcome frequencies recomputed from episodes.csv alone.
inline NamedOutcomes RecomputeOutcomes(const std::filesystem::path& episodes_csv) {
  NamedOutcomes out;
  for (const auto& [id, matrix] : ReadEpisodeProfiles(episodes_csv)) out.emplace_back(id, ClassifyOutcomes(matrix));
  return out;
}

inline NamedOutcomes ReadOutcomes(const std::filesystem::path& path) {
  NamedOutcomes out;
  for (const auto& row : ReadCsv(path, kOutcomesHeader, 8)) {
    if (out.empty() || out.back().first != row[0]) out.emplace_back(row[0], OutcomeSeries{});
    auto& s = out.back().second;
    s.all_fp.push_back(ParseCsvDouble(row[2]));
    s.all_cp.push_back(ParseCsvDouble(row[3]));
    s.other.push_back(ParseCsvDouble(row[4]));
    s.ci_fp.push_back(ParseCsvDouble(row[5]));
    s.ci_cp.push_back(ParseCsvDouble(row[6]));
    s.ci_other.push_back(ParseCsvDouble(row[7]));
  }
  return out;
}

struct DiagnosticRow {
  int episode = 0;
  double mean = 0.0;
  double ci = 0.0;
};

// cell -> metric -> rows
using DiagnosticTable = std::map<std::string, std::map<std::string, std::vector<DiagnosticRow>>>;

inline DiagnosticTable ReadDiagnostics(const std::filesystem::path& path) {
  DiagnosticTable out;
  for (const auto& row : ReadCsv(path, kDiagnosticsHeader, 5)) {
    out[row[0]][row[2]].push_back({ParseCsvInt(row[1]), ParseCsvDouble(row[3]), ParseCsvDouble(row[4])});
  }
  return out;
}

// ---- SVG ------------------------------------------------------------------

struct ChartSeries {
  std::string label;
  std::string color;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> half_width;  // empty: no band
};

struct ChartSpec {
  std::string title;
  std::string x_label = "episode";
  std::string y_label;
  std::optional<std::pair<double, double>> y_range;  // fitted to the data when empty
  std::vector<ChartSeries> series;
};

inline std::string SvgEscape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

inline std::string SvgNum(double x) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(2);
  os << x;
  return os.str();
}

inline std::string TickLabel(double x) {
  std::ostringstream os;
  os << std::setprecision(3) << x;
  return os.str();
}

// Line chart with shaded confidence bands.
inline std::string RenderLineChart(const ChartSpec& spec) {
  constexpr double kW = 720, kH = 420, kLeft = 70, kRight = 150, kTop = 40, kBottom = 50;
  const double pw = kW - kLeft - kRight;
  const double ph = kH - kTop - kBottom;

  double x_lo = 0, x_hi = 1, y_lo = 0, y_hi = 1;
  bool first = true;
  for (const auto& s : spec.series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      const double hw = s.half_width.empty() ? 0.0 : s.half_width[i];
      if (first) {
        x_lo = x_hi = s.x[i];
        y_lo = s.y[i] - hw;
        y_hi = s.y[i] + hw;
        first = false;
      }
      x_lo = std::min(x_lo, s.x[i]);
      x_hi = std::max(x_hi, s.x[i]);
      y_lo = std::min(y_lo, s.y[i] - hw);
      y_hi = std::max(y_hi, s.y[i] + hw);
    }
  }
  if (spec.y_range) std::tie(y_lo, y_hi) = *spec.y_range;
  if (x_hi == x_lo) x_hi = x_lo + 1;
  if (y_hi == y_lo) {
    y_lo -= 0.5;
    y_hi += 0.5;
  }
  auto px = [&](double x) { return kLeft + (x - x_lo) / (x_hi - x_lo) * pw; };
  auto py = [&](double y) { return kTop + (1.0 - (std::clamp(y, y_lo, y_hi) - y_lo) / (y_hi - y_lo)) * ph; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\" viewBox=\"0 0 "
     << kW << ' ' << kH << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << kLeft + pw / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << SvgEscape(spec.title)
     << "</text>\n";

  for (int t = 0; t <= 4; ++t) {
    const double y = y_lo + (y_hi - y_lo) * t / 4.0;
    os << "<line x1=\"" << kLeft << "\" x2=\"" << kLeft + pw << "\" y1=\"" << SvgNum(py(y)) << "\" y2=\""
       << SvgNum(py(y)) << "\" stroke=\"#ddd\"/>\n";
    os << "<text x=\"" << kLeft - 6 << "\" y=\"" << SvgNum(py(y) + 4) << "\" text-anchor=\"end\">" << TickLabel(y)
       << "</text>\n";
    const double x = x_lo + (x_hi - x_lo) * t / 4.0;
    os << "<text x=\"" << SvgNum(px(x)) << "\" y=\"" << kTop + ph + 18 << "\" text-anchor=\"middle\">"
       << TickLabel(x) << "</text>\n";
  }
  os << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"#333\"/>\n";
  os << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kH - 10 << "\" text-anchor=\"middle\">"
     << SvgEscape(spec.x_label) << "</text>\n";
  os << "<text transform=\"translate(18," << kTop + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
     << SvgEscape(spec.y_label) << "</text>\n";

  for (const auto& s : spec.series) {
    if (s.x.empty()) continue;
    if (!s.half_width.empty()) {
      os << "<polygon class=\"band\" fill=\"" << s.color << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i) os << SvgNum(px(s.x[i])) << ',' << SvgNum(py(s.y[i] + s.half_width[i])) << ' ';
      for (std::size_t i = s.x.size(); i-- > 0;) os << SvgNum(px(s.x[i])) << ',' << SvgNum(py(s.y[i] - s.half_width[i])) << ' ';
      os << "\"/>\n";
    }
    os << "<polyline class=\"series\" fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.8\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) os << SvgNum(px(s.x[i])) << ',' << SvgNum(py(s.y[i])) << ' ';
    os << "\"/>\n";
  }

  for (std::size_t k = 0; k < spec.series.size(); ++k) {
    const double y = kTop + 10 + 20.0 * static_cast<double>(k);
    os << "<rect x=\"" << kLeft + pw + 12 << "\" y=\"" << y - 8 << "\" width=\"14\" height=\"10\" fill=\""
       << spec.series[k].color << "\"/>\n";
    os << "<text x=\"" << kLeft + pw + 32 << "\" y=\"" << y + 1 << "\">" << SvgEscape(spec.series[k].label)
       << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

inline ChartSpec OutcomeChart(const std::string& cell, const OutcomeSeries& s) {
  ChartSpec spec{cell + ": joint action frequencies", "episode", "frequency", std::make_pair(0.0, 1.0), {}};
  std::vector<double> x;
  for (int ep = 1; ep <= s.episodes(); ++ep) x.push_back(ep);
  spec.series.push_back({"AllFP", "#1f77b4", x, s.all_fp, s.ci_fp});
  spec.series.push_back({"AllCP", "#d62728", x, s.all_cp, s.ci_cp});
  spec.series.push_back({"Other", "#7f7f7f", x, s.other, s.ci_other});
  return spec;
}

// Colour ramp from blue (0, most Nash) to red (1, most Pareto).
inline std::string ScoreColor(double t) {
  t = std::clamp(t, 0.0, 1.0);
  const int r = static_cast<int>(std::lround(40 + 200 * t));
  const int g = static_cast<int>(std::lround(80 + 60 * (1 - std::abs(2 * t - 1))));
  const int b = static_cast<int>(std::lround(240 - 200 * t));
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
  return buf;
}

struct HeatmapEntry {
  std::string agent;
  std::string config;
  double scaled = 0.0;
};

// Cells sorted by descending score; ties keep file order.
inline std::vector<HeatmapEntry> HeatmapOrder(const nlohmann::json& heatmap) {
  std::vector<HeatmapEntry> cells;
  for (const auto& c : heatmap.at("cells")) {
    cells.push_back({c.at("agent").get<std::string>(), c.at("config").get<std::string>(), c.at("scaled").get<double>()});
  }
  std::stable_sort(cells.begin(), cells.end(), [](const auto& a, const auto& b) { return a.scaled > b.scaled; });
  return cells;
}

// One-dimensional strip of cells ordered by scaled score.
inline std::string RenderHeatmap(const std::vector<HeatmapEntry>& cells) {
  constexpr double kCell = 44, kLeft = 20, kTop = 50, kStrip = 60;
  const double width = kLeft * 2 + kCell * static_cast<double>(std::max<std::size_t>(cells.size(), 1));
  const double height = kTop + kStrip + 150;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << kLeft << "\" y=\"24\" font-size=\"15\">Collusion score: 0 most Nash, 1 most Pareto</text>\n";
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const double x = kLeft + kCell * static_cast<double>(i);
    const auto& c = cells[i];
    os << "<rect class=\"cell\" data-agent=\"" << SvgEscape(c.agent) << "\" data-config=\"" << SvgEscape(c.config)
       << "\" data-score=\"" << FormatDouble(c.scaled) << "\" x=\"" << x << "\" y=\"" << kTop << "\" width=\""
       << kCell << "\" height=\"" << kStrip << "\" fill=\"" << ScoreColor(c.scaled) << "\" stroke=\"white\"/>\n";
    os << "<text x=\"" << x + kCell / 2 << "\" y=\"" << kTop + kStrip / 2 + 4
       << "\" text-anchor=\"middle\" fill=\"white\">" << SvgNum(c.scaled) << "</text>\n";
    os << "<text transform=\"translate(" << x + kCell / 2 + 4 << ',' << kTop + kStrip + 8
       << ") rotate(70)\">" << SvgEscape(c.agent + " " + c.config) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

// ---- summary table --------------------------------------------------------

struct SummaryRow {
  std::string cell;
  std::string agent;
  std::string config;
  double fp = 0.0;
  double cp = 0.0;
  double other = 0.0;

  std::string Modal() const {
    if (fp >= cp && fp >= other) return "AllFP";
    return cp >= other ? "AllCP" : "Other";
  }
};

inline std::vector<SummaryRow> SummaryRows(const NamedOutcomes& outcomes) {
  std::vector<SummaryRow> rows;
  for (const auto& [id, s] : outcomes) {
    if (s.episodes() == 0) continue;
    const auto split = id.find('_');
    rows.push_back({id, id.substr(0, split), split == std::string::npos ? "" : id.substr(split + 1), s.all_fp.back(),
                    s.all_cp.back(), s.other.back()});
  }
  return rows;
}

inline std::string RenderSummaryCsv(const std::vector<SummaryRow>& rows) {
  std::ostringstream os;
  os << "cell,agent,config,freq_all_fp,freq_all_cp,freq_other,modal\n";
  for (const auto& r : rows) {
    os << r.cell << ',' << r.agent << ',' << r.config << ',' << FormatDouble(r.fp) << ',' << FormatDouble(r.cp) << ','
       << FormatDouble(r.other) << ',' << r.Modal() << '\n';
  }
  return os.str();
}

// Agents as rows, market configs as column groups; '*' marks each group's max.
inline std::string RenderSummaryText(const std::vector<SummaryRow>& rows) {
  std::vector<std::string> agents;
  std::vector<std::string> configs;
  std::map<std::pair<std::string, std::string>, const SummaryRow*> at;
  for (const auto& r : rows) {
    if (std::find(agents.begin(), agents.end(), r.agent) == agents.end()) agents.push_back(r.agent);
    if (std::find(configs.begin(), configs.end(), r.config) == configs.end()) configs.push_back(r.config);
    at[{r.agent, r.config}] = &r;
  }
  auto cell = [](double x, bool mark) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%5.2f%c", x, mark ? '*' : ' ');
    return std::string(buf);
  };
  std::ostringstream os;
  os << "Last-episode joint action frequencies (* = modal outcome)\n\n";
  os << std::string(10, ' ');
  for (const auto& c : configs) {
    std::string head = c;
    head.resize(22, ' ');
    os << "| " << head;
  }
  os << "\n" << std::string(10, ' ');
  for (std::size_t i = 0; i < configs.size(); ++i) os << "| FP     CP     Oth    ";
  os << "\n";
  for (const auto& a : agents) {
    std::string name = a;
    name.resize(10, ' ');
    os << name;
    for (const auto& c : configs) {
      const auto it = at.find({a, c});
      if (it == at.end()) {
        os << "|   -      -      -    ";
        continue;
      }
      const SummaryRow& r = *it->second;
      const std::string m = r.Modal();
      os << "| " << cell(r.fp, m == "AllFP") << ' ' << cell(r.cp, m == "AllCP") << ' ' << cell(r.other, m == "Other")
         << ' ';
    }
    os << "\n";
  }
  return os.str();
}

// ---- report ---------------------------------------------------------------

struct ReportFiles {
  std::vector<std::filesystem::path> written;
};

inline const std::vector<std::string>& RequiredResultFiles() {
  static const std::vector<std::string> files = {"episodes.csv", "outcomes.csv", "diagnostics.csv", "heatmap.json",
                                                 "manifest.json"};
  return files;
}

// Builds figures and tables from a result directory without re-simulating.
inline ReportFiles WriteReport(const std::filesystem::path& results, const std::filesystem::path& out_dir) {
  std::vector<std::string> missing;
  for (const auto& f : RequiredResultFiles()) {
    if (!std::filesystem::exists(results / f)) missing.push_back(f);
  }
  if (!missing.empty()) {
    std::string msg = "result directory " + results.string() + " is missing:";
    for (const auto& f : missing) msg += " " + f;
    throw ReportError(msg);
  }

  std::filesystem::create_directories(out_dir);
  ReportFiles files;
  auto emit = [&](const std::string& name, const std::string& text) {
    WriteText(out_dir / name, text);
    files.written.push_back(out_dir / name);
  };

  const NamedOutcomes outcomes = ReadOutcomes(results / "outcomes.csv");
  for (const auto& [id, s] : outcomes) emit("outcomes_" + id + ".svg", RenderLineChart(OutcomeChart(id, s)));

  const DiagnosticTable diag = ReadDiagnostics(results / "diagnostics.csv");
  const std::vector<std::pair<std::string, std::vector<std::string>>> groups = {
      {"loss", {"loss", "actor_loss", "critic_loss"}}, {"regret", {"regret"}}};
  const std::vector<std::string> palette = {"#1f77b4", "#ff7f0e", "#2ca02c"};
  for (const auto& [cell, metrics] : diag) {
    for (const auto& [group, names] : groups) {
      ChartSpec spec{cell + ": " + group, "episode", group, std::nullopt, {}};
      for (const auto& name : names) {
        const auto it = metrics.find(name);
        if (it == metrics.end()) continue;
        ChartSeries s{name, palette[spec.series.size() % palette.size()], {}, {}, {}};
        for (const auto& row : it->second) {
          s.x.push_back(row.episode);
          s.y.push_back(row.mean);
          s.half_width.push_back(row.ci);
        }
        spec.series.push_back(std::move(s));
      }
      if (!spec.series.empty()) emit(group + "_" + cell + ".svg", RenderLineChart(spec));
    }
  }

  const auto heat = nlohmann::json::parse(ReadText(results / "heatmap.json"));
  emit("heatmap.svg", RenderHeatmap(HeatmapOrder(heat)));

  const auto rows = SummaryRows(outcomes);
  emit("summary.csv", RenderSummaryCsv(rows));
  emit("summary.txt", RenderSummaryText(rows));
  return files;
}

}  // namespace mpmg
