#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bvspec/problem.hpp"
#include "bvspec/types.hpp"

namespace bvspec {

/// 17 significant digits, locale-independent, -0 normalized; byte-stable.
inline std::string fmt17(double x) {
  if (x == 0.0) x = 0.0;  // collapse -0
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

namespace io {

using nlohmann::json;

inline Complex parse_complex(const json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ValidationError("complex values must be [re, im] pairs");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline std::vector<Complex> parse_complex_list(const json& j) {
  std::vector<Complex> out;
  if (!j.is_array()) throw ValidationError("expected an array of [re, im] pairs");
  for (const auto& e : j) out.push_back(parse_complex(e));
  return out;
}

inline ScalarExpr parse_expression(const json& j) {
  if (!j.is_object() || !j.contains("kind"))
    throw ValidationError("expression objects need a \"kind\" field");
  std::string kind = j["kind"].get<std::string>();
  if (kind == "zero") return ScalarExpr::zero();
  if (kind == "const") return ScalarExpr::constant(parse_complex(j.at("data")));
  if (kind == "poly") return ScalarExpr::poly(parse_complex_list(j.at("data")));
  if (kind == "piecewise") {
    const json& data = j.at("data");
    std::vector<double> breaks = data.at("breakpoints").get<std::vector<double>>();
    std::vector<std::vector<Complex>> pieces;
    for (const auto& piece : data.at("pieces")) pieces.push_back(parse_complex_list(piece));
    return ScalarExpr::piecewise(std::move(breaks), std::move(pieces));
  }
  throw ValidationError("unknown expression kind: " + kind);
}

inline MatrixXc parse_matrix(const json& j, int n) {
  if (!j.is_array() || static_cast<int>(j.size()) != n)
    throw ValidationError("matrix must have n rows");
  MatrixXc m(n, n);
  for (int r = 0; r < n; ++r) {
    if (!j[static_cast<std::size_t>(r)].is_array() ||
        static_cast<int>(j[static_cast<std::size_t>(r)].size()) != n)
      throw ValidationError("matrix rows must have n entries");
    for (int c = 0; c < n; ++c)
      m(r, c) = parse_complex(j[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]);
  }
  return m;
}

inline ProblemSpec parse_problem(const json& j) {
  if (!j.is_object()) throw ValidationError("problem file must hold a JSON object");
  int n = j.value("n", 2);
  ProblemSpec p;
  p.B = WeightMatrix(parse_complex_list(j.at("B")));
  if (p.B.n() != n) throw ValidationError("B has wrong length for n");
  if (j.contains("Q")) {
    const json& q = j["Q"];
    if (q.contains("Q12")) p.Q.q12 = parse_expression(q["Q12"]);
    if (q.contains("Q21")) p.Q.q21 = parse_expression(q["Q21"]);
  }
  p.bc = BoundarySpec(parse_matrix(j.at("C"), n), parse_matrix(j.at("D"), n));
  if (j.contains("solver")) {
    const json& s = j["solver"];
    p.solver.rel_tol = s.value("rel_tol", p.solver.rel_tol);
    p.solver.abs_tol = s.value("abs_tol", p.solver.abs_tol);
    p.solver.panels = s.value("panels", p.solver.panels);
    p.solver.trust_im = s.value("trust_im", p.solver.trust_im);
  }
  return p;
}

inline ProblemSpec load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open problem file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ValidationError("malformed JSON in " + path + ": " + e.what());
  }
  return parse_problem(j);
}

/// Minimal ordered JSON emitter; numbers go through fmt17 so output is
/// byte-stable regardless of the underlying JSON library.
class JsonWriter {
 public:
  JsonWriter& begin_object() {
    sep();
    out_ << '{';
    fresh_ = true;
    return *this;
  }
  JsonWriter& end_object() {
    out_ << '}';
    fresh_ = false;
    return *this;
  }
  JsonWriter& begin_array() {
    sep();
    out_ << '[';
    fresh_ = true;
    return *this;
  }
  JsonWriter& end_array() {
    out_ << ']';
    fresh_ = false;
    return *this;
  }
  JsonWriter& key(const std::string& k) {
    sep();
    out_ << '"' << k << "\":";
    fresh_ = true;
    return *this;
  }
  JsonWriter& value(double v) {
    sep();
    out_ << fmt17(v);
    fresh_ = false;
    return *this;
  }
  JsonWriter& value(int v) {
    sep();
    out_ << v;
    fresh_ = false;
    return *this;
  }
  JsonWriter& value(bool v) {
    sep();
    out_ << (v ? "true" : "false");
    fresh_ = false;
    return *this;
  }
  JsonWriter& value(const std::string& v) {
    sep();
    out_ << '"';
    for (char c : v) {
      if (c == '"' || c == '\\') out_ << '\\';
      out_ << c;
    }
    out_ << '"';
    fresh_ = false;
    return *this;
  }
  JsonWriter& value(Complex z) {
    begin_array();
    value(z.real());
    value(z.imag());
    return end_array();
  }
  JsonWriter& null_value() {
    sep();
    out_ << "null";
    fresh_ = false;
    return *this;
  }

  std::string str() const { return out_.str(); }

 private:
  void sep() {
    if (!fresh_) out_ << ',';
    fresh_ = true;
  }
  std::ostringstream out_;
  bool fresh_ = true;
};

}  // namespace io

}  // namespace bvspec
