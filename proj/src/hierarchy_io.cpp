#include "qmoments/hierarchy_io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace qmoments {

std::string format_number(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_hierarchy_record(std::ostream& out, const MomentHierarchy& h, double t) {
  out << h.modes() << ' ' << h.max_order() << ' ' << format_number(t) << '\n';
  for (int k = 0; k <= h.max_order(); ++k) {
    const Vector& tk = h.tensor(k);
    for (Eigen::Index i = 0; i < tk.size(); ++i) {
      if (i) out << ' ';
      out << format_number(tk(i).real()) << ' ' << format_number(tk(i).imag());
    }
    out << '\n';
  }
}

namespace {

double parse_double(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw std::runtime_error("malformed number '" + s + "'");
  }
  if (used != s.size()) throw std::runtime_error("malformed number '" + s + "'");
  return v;
}

int parse_int(const std::string& s) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) throw std::runtime_error("malformed integer '" + s + "'");
  return v;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      parts.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  parts.push_back(cur);
  return parts;
}

}  // namespace

HierarchyRecord read_hierarchy_record(std::istream& in) {
  int n = 0, m = 0;
  std::string t_text;
  if (!(in >> n >> m >> t_text)) throw std::runtime_error("hierarchy record: missing header");
  HierarchyRecord rec{parse_double(t_text), MomentHierarchy(n, m)};
  for (int k = 0; k <= m; ++k) {
    Vector& tk = rec.hierarchy.tensor(k);
    for (Eigen::Index i = 0; i < tk.size(); ++i) {
      std::string re, im;
      if (!(in >> re >> im)) throw std::runtime_error("hierarchy record: truncated order " + std::to_string(k));
      tk(i) = cplx(parse_double(re), parse_double(im));
    }
  }
  return rec;
}

void write_trajectory_csv(std::ostream& out, const std::vector<TrajectoryPoint>& trajectory,
                          const std::vector<std::pair<std::string, std::string>>& metadata) {
  const auto has = [&](const char* key) {
    return std::any_of(metadata.begin(), metadata.end(), [&](const auto& kv) { return kv.first == key; });
  };
  for (const auto& [key, value] : metadata) out << "# " << key << '=' << value << '\n';
  if (!trajectory.empty()) {
    if (!has("n")) out << "# n=" << trajectory.front().hierarchy.modes() << '\n';
    if (!has("m")) out << "# m=" << trajectory.front().hierarchy.max_order() << '\n';
  }
  out << "t,order,index,re,im\n";
  std::vector<int> digits;
  for (const auto& point : trajectory) {
    const auto& h = point.hierarchy;
    const std::string t = format_number(point.t);
    for (int k = 0; k <= h.max_order(); ++k) {
      digits.assign(static_cast<std::size_t>(k), 0);
      const Vector& tk = h.tensor(k);
      for (Eigen::Index flat = 0; flat < tk.size(); ++flat) {
        decode_index(flat, h.phase_dim(), k, digits);
        out << t << ',' << k << ',';
        for (int s = 0; s < k; ++s) out << (s ? ":" : "") << digits[s];
        out << ',' << format_number(tk(flat).real()) << ',' << format_number(tk(flat).imag()) << '\n';
      }
    }
  }
}

TrajectoryTable read_trajectory_csv(std::istream& in) {
  TrajectoryTable table;
  std::map<std::string, std::string> meta;
  std::string line;
  bool header_seen = false;
  int n = -1, m = -1;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto body = line.substr(line.find_first_not_of("# "));
      const auto eq = body.find('=');
      if (eq == std::string::npos) continue;
      table.metadata.emplace_back(body.substr(0, eq), body.substr(eq + 1));
      meta[body.substr(0, eq)] = body.substr(eq + 1);
      continue;
    }
    if (!header_seen) {
      if (line != "t,order,index,re,im") throw std::runtime_error("trajectory csv: unexpected header '" + line + "'");
      header_seen = true;
      if (!meta.count("n") || !meta.count("m")) throw std::runtime_error("trajectory csv: missing n/m metadata");
      n = parse_int(meta["n"]);
      m = parse_int(meta["m"]);
      continue;
    }
    const auto cols = split(line, ',');
    if (cols.size() != 5) throw std::runtime_error("trajectory csv: expected 5 columns in '" + line + "'");
    const double t = parse_double(cols[0]);
    const int k = parse_int(cols[1]);
    if (table.points.empty() || table.points.back().t != t) table.points.push_back({t, MomentHierarchy(n, m)});
    std::vector<int> digits;
    if (!cols[2].empty()) {
      for (const auto& part : split(cols[2], ':')) digits.push_back(parse_int(part));
    }
    if (static_cast<int>(digits.size()) != k || k > m) {
      throw std::runtime_error("trajectory csv: index does not match order in '" + line + "'");
    }
    for (int dgt : digits) {
      if (dgt < 0 || dgt >= 2 * n) throw std::runtime_error("trajectory csv: phase index out of range");
    }
    table.points.back().hierarchy(digits) = cplx(parse_double(cols[3]), parse_double(cols[4]));
  }
  if (!header_seen) throw std::runtime_error("trajectory csv: no table header");
  return table;
}

}  // namespace qmoments
