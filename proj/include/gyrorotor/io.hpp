#pragma once

#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "gyrorotor/basis.hpp"
#include "gyrorotor/errors.hpp"
#include "gyrorotor/explosion.hpp"
#include "gyrorotor/observables.hpp"

// Text formats. Every number is written with 9 significant digits so files
// are stable across platforms and re-reading then re-writing reproduces them.

namespace gyrorotor {

inline std::string fmt9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

namespace detail {

inline std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream is(line);
  std::vector<std::string> out;
  for (std::string tok; is >> tok;) out.push_back(tok);
  return out;
}

inline bool skip_line(const std::string& line) {
  const auto p = line.find_first_not_of(" \t\r");
  return p == std::string::npos || line[p] == '#';
}

inline double parse_double(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw InvalidArgument(where + ": cannot parse number '" + s + "'");
  }
}

inline long parse_long(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const long v = std::stol(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw InvalidArgument(where + ": cannot parse integer '" + s + "'");
  }
}

}  // namespace detail

/// "J M re im" header, then one row per basis state.
inline void write_state(std::ostream& os, const RotorState& s) {
  os << "J M re im\n";
  for (std::size_t i = 0; i < s.basis().dim(); ++i) {
    const auto [J, M] = s.basis().quantum_numbers(i);
    const complex c = s.amplitudes()(static_cast<Eigen::Index>(i));
    os << J << ' ' << M << ' ' << fmt9(c.real()) << ' ' << fmt9(c.imag()) << '\n';
  }
}

/// Reads a state file. j_max is the largest J present unless given; rows not
/// listed are zero. Amplitudes are not renormalized.
inline RotorState read_state(std::istream& is, int j_max = -1) {
  std::string line;
  std::vector<std::tuple<int, int, complex>> rows;
  bool header = false;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (detail::skip_line(line)) continue;
    const auto tok = detail::split_ws(line);
    if (!header) {
      if (tok != std::vector<std::string>{"J", "M", "re", "im"})
        throw InvalidArgument("state file: expected header 'J M re im'");
      header = true;
      continue;
    }
    const std::string where = "state file line " + std::to_string(line_no);
    if (tok.size() != 4) throw InvalidArgument(where + ": expected 4 columns");
    rows.emplace_back(static_cast<int>(detail::parse_long(tok[0], where)),
                      static_cast<int>(detail::parse_long(tok[1], where)),
                      complex(detail::parse_double(tok[2], where),
                              detail::parse_double(tok[3], where)));
  }
  if (!header) throw InvalidArgument("state file: empty");
  if (rows.empty()) throw InvalidArgument("state file: no amplitudes");
  int jm = j_max;
  if (jm < 0)
    for (const auto& r : rows) jm = std::max(jm, std::get<0>(r));
  const RotorBasis basis(jm);
  ComplexVector c = ComplexVector::Zero(static_cast<Eigen::Index>(basis.dim()));
  for (const auto& [J, M, a] : rows) c(static_cast<Eigen::Index>(basis.index(J, M))) = a;
  return RotorState(basis, std::move(c));
}

/// "theta phi density", row-major in theta then phi.
inline void write_density(std::ostream& os, const DensityMap& d) {
  const AngularGrid& g = d.grid();
  os << "theta phi density\n";
  for (int i = 0; i < g.n_theta(); ++i)
    for (int k = 0; k < g.n_phi(); ++k)
      os << fmt9(g.theta(i)) << ' ' << fmt9(g.phi(k)) << ' ' << fmt9(d.value(i, k)) << '\n';
}

/// Header: delay_s, <label>_prob <label>_counts per detector, jx jy jz nx ny nz.
inline void write_scan(std::ostream& os, const ScanSeries& s) {
  os << "delay_s";
  for (const auto& l : s.detector_labels) os << ' ' << l << "_prob " << l << "_counts";
  os << " jx jy jz nx ny nz\n";
  for (const auto& p : s.points) {
    os << fmt9(p.delay);
    for (std::size_t d = 0; d < s.detector_labels.size(); ++d)
      os << ' ' << fmt9(p.probability[d]) << ' ' << p.counts[d];
    for (int a = 0; a < 3; ++a) os << ' ' << fmt9(p.j(a));
    for (int a = 0; a < 3; ++a) os << ' ' << fmt9(p.normal(a));
    os << '\n';
  }
}

/// Reads a scan table. The j and n columns are optional; the number of shots
/// per delay is not stored in the table and must be supplied.
inline ScanSeries read_scan(std::istream& is, long shots_per_delay) {
  ScanSeries s;
  s.shots_per_delay = shots_per_delay;
  std::string line;
  std::vector<std::string> cols;
  int line_no = 0;
  std::map<std::string, std::size_t> at;
  while (std::getline(is, line)) {
    ++line_no;
    if (detail::skip_line(line)) continue;
    const auto tok = detail::split_ws(line);
    if (cols.empty()) {
      cols = tok;
      if (cols.empty() || cols[0] != "delay_s")
        throw InvalidArgument("scan table: header must start with delay_s");
      for (std::size_t c = 0; c < cols.size(); ++c) at[cols[c]] = c;
      for (std::size_t c = 1; c + 1 < cols.size(); ++c) {
        const auto& name = cols[c];
        if (name.size() > 5 && name.ends_with("_prob")) {
          const std::string label = name.substr(0, name.size() - 5);
          if (cols[c + 1] != label + "_counts")
            throw InvalidArgument("scan table: " + name + " must be followed by " + label +
                                  "_counts");
          s.detector_labels.push_back(label);
        }
      }
      continue;
    }
    const std::string where = "scan table line " + std::to_string(line_no);
    if (tok.size() != cols.size()) throw InvalidArgument(where + ": wrong number of columns");
    ScanPoint p;
    p.delay = detail::parse_double(tok[0], where);
    for (const auto& l : s.detector_labels) {
      p.probability.push_back(detail::parse_double(tok[at[l + "_prob"]], where));
      p.counts.push_back(detail::parse_long(tok[at[l + "_counts"]], where));
    }
    const char* jn[] = {"jx", "jy", "jz"};
    const char* nn[] = {"nx", "ny", "nz"};
    for (int a = 0; a < 3; ++a) {
      if (at.count(jn[a])) p.j(a) = detail::parse_double(tok[at[jn[a]]], where);
      if (at.count(nn[a])) p.normal(a) = detail::parse_double(tok[at[nn[a]]], where);
    }
    s.points.push_back(std::move(p));
  }
  if (cols.empty()) throw InvalidArgument("scan table: empty");
  return s;
}

inline bool scan_has_jvec(const ScanSeries& s) {
  for (const auto& p : s.points)
    if ((p.j - s.points.front().j).norm() > 1e-9) return true;
  return false;
}

/// Ordered "key = value" lines.
using KeyValues = std::vector<std::pair<std::string, std::string>>;

inline void write_key_values(std::ostream& os, const KeyValues& kv) {
  for (const auto& [k, v] : kv) os << k << " = " << v << '\n';
}

inline KeyValues read_key_values(std::istream& is) {
  KeyValues kv;
  std::string line;
  while (std::getline(is, line)) {
    if (detail::skip_line(line)) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InvalidArgument("key-value document: missing '='");
    auto trim = [](std::string x) {
      const auto b = x.find_first_not_of(" \t\r");
      const auto e = x.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : x.substr(b, e - b + 1);
    };
    kv.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return kv;
}

inline KeyValues estimate_document(const GFactorEstimate& g, PrecessionModel model) {
  return {{"omega_p_MHz", fmt9(g.omega_p_mhz)},
          {"sigma_MHz", fmt9(g.sigma_mhz)},
          {"g_r_abs", fmt9(g.g_r_abs)},
          {"g_r_sigma", fmt9(g.g_r_sigma)},
          {"sense", g.sense},
          {"residual", fmt9(g.residual)},
          {"model", to_string(model)}};
}

}  // namespace gyrorotor
