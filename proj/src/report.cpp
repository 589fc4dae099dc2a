// Copyright 2026 The CLUB Auction Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "club/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace club {
namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double parse_real(const std::string& s) {
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::runtime_error("bad number '" + s + "'");
  return v;
}

long parse_long(const std::string& s) {
  std::size_t used = 0;
  const long v = std::stol(s, &used);
  if (used != s.size()) throw std::runtime_error("bad integer '" + s + "'");
  return v;
}

bool parse_flag(const std::string& s) {
  if (s == "0") return false;
  if (s == "1") return true;
  throw std::runtime_error("bad flag '" + s + "'");
}

DeltaBucket parse_bucket(const std::string& s) {
  for (auto b : {DeltaBucket::kNormal, DeltaBucket::kBuffer, DeltaBucket::kPiRand, DeltaBucket::kLie}) {
    if (bucket_name(b) == s) return b;
  }
  throw std::runtime_error("bad delta bucket '" + s + "'");
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

std::string escape_xml(const std::string& s) {
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

}  // namespace

void write_ledger_csv(std::ostream& os, const std::vector<LedgerRow>& rows) {
  os << kLedgerHeader << '\n';
  for (const auto& r : rows) {
    os << r.episode << ',' << r.k_tilde << ',' << int(r.tags.in_buffer) << ',' << int(r.tags.used_pi_rand) << ','
       << int(r.tags.lie) << ',' << fmt(r.policy_value) << ',' << fmt(r.optimal_value) << ','
       << fmt(r.suboptimality) << ',' << fmt(r.cum_regret) << ',' << bucket_name(r.bucket) << '\n';
  }
}

std::vector<LedgerRow> read_ledger_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || strip_cr(line) != kLedgerHeader) {
    throw std::runtime_error("ledger csv: missing or unexpected header");
  }
  std::vector<LedgerRow> rows;
  while (std::getline(is, line)) {
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != 10) throw std::runtime_error("ledger csv: expected 10 columns");
    LedgerRow r;
    r.episode = parse_long(cells[0]);
    r.k_tilde = static_cast<int>(parse_long(cells[1]));
    r.tags.in_buffer = parse_flag(cells[2]);
    r.tags.used_pi_rand = parse_flag(cells[3]);
    r.tags.lie = parse_flag(cells[4]);
    r.policy_value = parse_real(cells[5]);
    r.truthful_value = r.policy_value;
    r.optimal_value = parse_real(cells[6]);
    r.suboptimality = parse_real(cells[7]);
    r.cum_regret = parse_real(cells[8]);
    r.bucket = parse_bucket(cells[9]);
    rows.push_back(r);
  }
  return rows;
}

nlohmann::json summary_to_json(const RunSummary& s) {
  nlohmann::json j;
  j["seed"] = s.seed;
  j["K"] = s.K;
  j["variant"] = s.variant;
  j["optimal_value"] = s.optimal_value;
  j["final_regret"] = s.final_regret;
  j["buffer_count"] = s.buffer_count;
  j["update_count"] = s.update_count;
  j["forced_buffers"] = s.forced_buffers;
  j["buffer_episodes"] = s.buffer_episodes;
  j["pi_rand_episodes"] = s.pi_rand_episodes;
  j["lie_episodes"] = s.lie_episodes;
  j["deltas"] = {{"delta1", s.deltas.delta[0]}, {"delta2", s.deltas.delta[1]}, {"delta3", s.deltas.delta[2]},
                 {"delta4", s.deltas.delta[3]}, {"delta5", s.deltas.delta[4]}};
  j["final_buffer_end"] = s.final_buffer_end;
  j["k_bound_violations"] = s.k_bound_violations;
  j["k_bound_violations_all"] = s.k_bound_violations_all;
  j["fhat_sup_error"] = s.fhat_sup_error ? nlohmann::json(*s.fhat_sup_error) : nlohmann::json(nullptr);
  j["fhat_samples"] = s.fhat_samples ? nlohmann::json(*s.fhat_samples) : nlohmann::json(nullptr);
  j["bidder_utility"] = s.bidder_utility;
  return j;
}

void write_sweep_csv(std::ostream& os, const SweepResult& r) {
  os << kSweepHeader << '\n';
  for (const auto& p : r.points) {
    const auto& s = p.summary;
    os << p.K << ',' << p.seed << ',' << fmt(s.final_regret) << ',' << s.buffer_count << ',' << s.update_count << ','
       << s.forced_buffers << ',' << s.buffer_episodes << ',' << s.pi_rand_episodes << ',' << s.lie_episodes << ','
       << s.k_bound_violations << ',' << (s.fhat_sup_error ? fmt(*s.fhat_sup_error) : "") << ','
       << (s.fhat_samples ? fmt(*s.fhat_samples) : "") << '\n';
  }
}

std::vector<std::pair<long, double>> read_sweep_regrets(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || strip_cr(line) != kSweepHeader) {
    throw std::runtime_error("sweep csv: missing or unexpected header");
  }
  std::vector<std::pair<long, double>> out;
  while (std::getline(is, line)) {
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != 12) throw std::runtime_error("sweep csv: expected 12 columns");
    out.emplace_back(parse_long(cells[0]), parse_real(cells[2]));
  }
  return out;
}

nlohmann::json sweep_to_json(const SweepResult& r) {
  nlohmann::json j;
  j["K"] = r.Ks;
  j["median_regret"] = r.median_regret;
  j["alpha"] = r.fit.alpha;
  j["intercept"] = r.fit.intercept;
  j["r2"] = r.fit.r2;
  j["sublinearity_ratio"] = r.sublinearity_ratio;
  nlohmann::json runs = nlohmann::json::array();
  for (const auto& p : r.points) runs.push_back(summary_to_json(p.summary));
  j["runs"] = runs;
  return j;
}

std::string render_loglog_svg(const PlotSeries& data, const std::optional<SlopeFit>& fit, const std::string& title,
                              const std::string& xlabel, const std::string& ylabel) {
  std::vector<std::pair<double, double>> pts;
  for (std::size_t t = 0; t < std::min(data.x.size(), data.y.size()); ++t) {
    if (data.x[t] > 0.0 && data.y[t] > 0.0) pts.emplace_back(std::log10(data.x[t]), std::log10(data.y[t]));
  }
  constexpr double kW = 640, kH = 420, kLeft = 70, kRight = 20, kTop = 40, kBottom = 50;
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (!pts.empty()) {
    x0 = x1 = pts[0].first;
    y0 = y1 = pts[0].second;
    for (const auto& [x, y] : pts) {
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
  }
  x0 = std::floor(x0);
  x1 = std::max(std::ceil(x1), x0 + 1);
  y0 = std::floor(y0);
  y1 = std::max(std::ceil(y1), y0 + 1);
  auto px = [&](double x) { return kLeft + (x - x0) / (x1 - x0) * (kW - kLeft - kRight); };
  auto py = [&](double y) { return kH - kBottom - (y - y0) / (y1 - y0) * (kH - kTop - kBottom); };

  std::ostringstream os;
  char buf[160];
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\" viewBox=\"0 0 "
     << kW << ' ' << kH << "\">\n";
  os << "<rect x=\"0\" y=\"0\" width=\"" << kW << "\" height=\"" << kH << "\" fill=\"white\"/>\n";
  os << "<text x=\"" << kW / 2 << "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">"
     << escape_xml(title) << "</text>\n";
  // Decade grid.
  for (double d = x0; d <= x1 + 1e-9; d += 1.0) {
    std::snprintf(buf, sizeof buf, "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"#ddd\"/>\n", px(d),
                  py(y0), px(d), py(y1));
    os << buf;
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%.2f\" y=\"%.2f\" text-anchor=\"middle\" font-family=\"sans-serif\" "
                  "font-size=\"11\">1e%d</text>\n",
                  px(d), kH - kBottom + 16, static_cast<int>(d));
    os << buf;
  }
  for (double d = y0; d <= y1 + 1e-9; d += 1.0) {
    std::snprintf(buf, sizeof buf, "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"#ddd\"/>\n", px(x0),
                  py(d), px(x1), py(d));
    os << buf;
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%.2f\" y=\"%.2f\" text-anchor=\"end\" font-family=\"sans-serif\" "
                  "font-size=\"11\">1e%d</text>\n",
                  kLeft - 6, py(d) + 4, static_cast<int>(d));
    os << buf;
  }
  os << "<text x=\"" << (kLeft + kW - kRight) / 2 << "\" y=\"" << kH - 12
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << escape_xml(xlabel) << "</text>\n";
  os << "<text x=\"16\" y=\"" << (kTop + kH - kBottom) / 2
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 16 "
     << (kTop + kH - kBottom) / 2 << ")\">" << escape_xml(ylabel) << "</text>\n";
  if (!pts.empty()) {
    os << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"";
    for (const auto& [x, y] : pts) {
      std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(x), py(y));
      os << buf;
    }
    os << "\"/>\n";
    if (pts.size() <= 64) {
      for (const auto& [x, y] : pts) {
        std::snprintf(buf, sizeof buf, "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"3\" fill=\"#1f77b4\"/>\n", px(x), py(y));
        os << buf;
      }
    }
  }
  if (fit && std::isfinite(fit->alpha) && !pts.empty()) {
    const double a = pts.front().first, b = pts.back().first;
    const double ya = (fit->intercept + fit->alpha * a * std::log(10.0)) / std::log(10.0);
    const double yb = (fit->intercept + fit->alpha * b * std::log(10.0)) / std::log(10.0);
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"#d62728\" "
                  "stroke-dasharray=\"6 4\"/>\n",
                  px(a), py(ya), px(b), py(yb));
    os << buf;
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%.2f\" y=\"%.2f\" font-family=\"sans-serif\" font-size=\"12\" "
                  "fill=\"#d62728\">slope %.3f</text>\n",
                  kLeft + 10, kTop + 14, fit->alpha);
    os << buf;
  }
  os << "</svg>\n";
  return os.str();
}

bool svg_well_formed(std::string_view svg) {
  std::vector<std::string> stack;
  int roots = 0;
  std::size_t pos = 0;
  while ((pos = svg.find('<', pos)) != std::string_view::npos) {
    const std::size_t end = svg.find('>', pos);
    if (end == std::string_view::npos) return false;
    std::string_view tag = svg.substr(pos + 1, end - pos - 1);
    pos = end + 1;
    if (tag.empty()) return false;
    if (tag.front() == '?' || tag.front() == '!') continue;
    if (tag.front() == '/') {
      const std::string name(tag.substr(1));
      if (stack.empty() || stack.back() != name) return false;
      stack.pop_back();
      continue;
    }
    const bool self_closing = tag.back() == '/';
    const std::string name(tag.substr(0, tag.find_first_of(" \t\n/")));
    if (stack.empty()) {
      if (name != "svg") return false;
      ++roots;
    }
    if (!self_closing) stack.push_back(name);
  }
  return stack.empty() && roots == 1;
}

}  // namespace club
