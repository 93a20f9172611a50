#pragma once

// Comma-delimited text with a header row, used for every tabular file:
//   datasets        c,p,y
//   utility curves  c,u,omega,disposition,method[,flag|,basis]
//   posteriors      alpha,beta,weight
//   utility forms   fbar,utility,disutility,omnibus
// Numbers are written in shortest round-trip form.

#include <charconv>
#include <cstddef>
#include <istream>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "chance/estimation.hpp"
#include "chance/utility_point.hpp"

namespace chance {

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

inline std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i)
    if (i == line.size() || line[i] == ',') {
      out.push_back(trim(line.substr(start, i - start)));
      start = i + 1;
    }
  return out;
}

inline double parse_double(std::string_view s, std::size_t line) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw ParseError(line, "not a number: '" + std::string(s) + "'");
  return v;
}

// Reads header + rows; blank lines are skipped. Calls row(fields, line_no).
template <typename RowFn>
void read_table(std::istream& in, std::span<const std::string_view> header, bool allow_extra_column, RowFn&& row) {
  std::string raw;
  std::size_t line_no = 0;
  bool have_header = false;
  std::size_t width = header.size();
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = trim(raw);
    if (line.empty()) continue;
    auto fields = split(line);
    if (!have_header) {
      bool ok = fields.size() == header.size() || (allow_extra_column && fields.size() == header.size() + 1);
      for (std::size_t i = 0; ok && i < header.size(); ++i) ok = fields[i] == header[i];
      if (!ok) {
        std::string want;
        for (auto h : header) want += (want.empty() ? "" : ",") + std::string(h);
        throw ParseError(line_no, "expected header '" + want + "'");
      }
      width = fields.size();
      have_header = true;
      continue;
    }
    if (fields.size() != width)
      throw ParseError(line_no, "expected " + std::to_string(width) + " fields, found " + std::to_string(fields.size()));
    row(fields, line_no);
  }
  if (!have_header) throw ParseError(line_no, "empty input: missing header");
}

}  // namespace detail

inline void write_dataset(std::ostream& out, std::span<const ChoiceObservation> obs) {
  out << "c,p,y\n";
  for (const auto& o : obs) out << format_number(o.c) << ',' << format_number(o.p) << ',' << o.y << '\n';
}

inline std::vector<ChoiceObservation> read_dataset(std::istream& in) {
  static constexpr std::string_view header[] = {"c", "p", "y"};
  std::vector<ChoiceObservation> out;
  detail::read_table(in, header, false, [&](const auto& f, std::size_t line) {
    const double c = detail::parse_double(f[0], line);
    const double p = detail::parse_double(f[1], line);
    int y = -1;
    if (f[2] == "0") y = 0;
    if (f[2] == "1") y = 1;
    if (y < 0) throw ParseError(line, "y must be 0 or 1");
    try {
      out.emplace_back(c, p, y);
    } catch (const std::invalid_argument& e) {
      throw ParseError(line, e.what());
    }
  });
  if (out.empty()) throw ParseError(0, "dataset has no observations");
  return out;
}

// Optional sixth curve column: the estimator's bound flag, or the gamble kind
// the point was elicited with.
enum class CurveExtra { none, flag, basis };

inline void write_curve(std::ostream& out, std::span<const UtilityPoint> pts, CurveExtra extra = CurveExtra::none) {
  out << "c,u,omega,disposition,method";
  if (extra == CurveExtra::flag) out << ",flag";
  if (extra == CurveExtra::basis) out << ",basis";
  out << '\n';
  for (const auto& p : pts) {
    out << format_number(p.c) << ',' << format_number(p.u) << ',' << format_number(p.omega.value()) << ','
        << to_string(p.disposition) << ',' << to_string(p.method);
    if (extra == CurveExtra::flag) out << ',' << (p.at_bound ? "at_bound" : "ok");
    if (extra == CurveExtra::basis) out << ',' << to_string(p.basis);
    out << '\n';
  }
}

inline std::vector<UtilityPoint> read_curve(std::istream& in) {
  static constexpr std::string_view header[] = {"c", "u", "omega", "disposition", "method"};
  std::vector<UtilityPoint> out;
  detail::read_table(in, header, true, [&](const auto& f, std::size_t line) {
    try {
      UtilityPoint p;
      p.c = detail::parse_double(f[0], line);
      p.u = detail::parse_double(f[1], line);
      p.omega = Offset(detail::parse_double(f[2], line));
      p.disposition = parse_disposition(f[3]);
      p.method = parse_method(f[4]);
      if (f.size() > 5) {
        if (f[5] == "at_bound" || f[5] == "ok")
          p.at_bound = f[5] == "at_bound";
        else
          p.basis = parse_gamble_kind(f[5]);
      }
      out.push_back(p);
    } catch (const std::invalid_argument& e) {
      throw ParseError(line, e.what());
    }
  });
  return out;
}

inline void write_posterior(std::ostream& out, const PosteriorGrid& g) {
  out << "alpha,beta,weight\n";
  for (std::size_t i = 0; i < g.alpha_nodes().size(); ++i)
    for (std::size_t j = 0; j < g.beta_nodes().size(); ++j)
      out << format_number(g.alpha_nodes()[i]) << ',' << format_number(g.beta_nodes()[j]) << ','
          << format_number(g.weight(i, j)) << '\n';
}

}  // namespace chance
