#include "ordcomp/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace ordcomp {

using nlohmann::json;

std::string fmt_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

double parse_value(const std::string& tok, int line_no) {
  if (tok == "inf") return std::numeric_limits<double>::infinity();
  if (tok == "-inf") return -std::numeric_limits<double>::infinity();
  try {
    size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw FormatError("malformed number '" + tok + "' at line " + std::to_string(line_no));
  }
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(line);
  while (std::getline(in, cur, ',')) out.push_back(cur);
  return out;
}

// minimal JSON writer with explicit 17-significant-digit doubles
class JsonWriter {
 public:
  JsonWriter& raw(const std::string& s) {
    out_ += s;
    fresh_ = false;
    return *this;
  }
  JsonWriter& num(double v) { return raw(std::isfinite(v) ? fmt_double(v) : ("\"" + fmt_double(v) + "\"")); }
  JsonWriter& str(const std::string& s) {
    out_ += '"';
    for (char c : s) {
      switch (c) {
        case '"': out_ += "\\\""; break;
        case '\\': out_ += "\\\\"; break;
        case '\n': out_ += "\\n"; break;
        case '\t': out_ += "\\t"; break;
        default: out_ += c;
      }
    }
    out_ += '"';
    fresh_ = false;
    return *this;
  }
  JsonWriter& key(const std::string& k) {
    comma();
    str(k);
    out_ += ':';
    fresh_ = true;
    return *this;
  }
  JsonWriter& begin_obj() {
    comma();
    out_ += '{';
    fresh_ = true;
    return *this;
  }
  JsonWriter& end_obj() {
    out_ += '}';
    fresh_ = false;
    return *this;
  }
  JsonWriter& begin_arr() {
    comma();
    out_ += '[';
    fresh_ = true;
    return *this;
  }
  JsonWriter& end_arr() {
    out_ += ']';
    fresh_ = false;
    return *this;
  }
  JsonWriter& item() {
    comma();
    fresh_ = true;
    return *this;
  }
  const std::string& text() const { return out_; }

 private:
  void comma() {
    if (!fresh_ && !out_.empty() && out_.back() != '{' && out_.back() != '[' && out_.back() != ':')
      out_ += ',';
    fresh_ = false;
  }
  std::string out_;
  bool fresh_ = true;
};

void write_coords(JsonWriter& w, const Point& p) {
  w.begin_arr();
  for (int i = 0; i < p.dim(); ++i) w.item().num(p[i]);
  w.end_arr();
}

Point read_coords(const json& j) {
  std::vector<double> c;
  for (const auto& v : j) c.push_back(v.get<double>());
  return Point(std::move(c));
}

std::string mi_key(const MultiIndex& mi) {
  std::string s;
  for (int i = 0; i < mi.dim(); ++i) {
    if (i) s += ',';
    s += std::to_string(mi[i]);
  }
  return s;
}

MultiIndex parse_mi_key(const std::string& key) {
  std::vector<int> o;
  for (const std::string& tok : split_csv(key)) o.push_back(std::stoi(tok));
  return MultiIndex(std::move(o));
}

void write_poly_body(JsonWriter& w, const Poly& p) {
  w.key("center");
  write_coords(w, p.center());
  w.key("coeffs").begin_obj();
  for (const auto& [alpha, c] : p.coeffs()) w.key(mi_key(alpha)).num(c);
  w.end_obj();
}

Poly read_poly(const json& j) {
  Point center = read_coords(j.at("center"));
  std::map<MultiIndex, double> coeffs;
  for (const auto& [k, v] : j.at("coeffs").items()) coeffs[parse_mi_key(k)] = v.get<double>();
  return Poly(std::move(center), std::move(coeffs));
}

void write_piece_expr(JsonWriter& w, const PieceExpr& e) {
  if (!e.serializable())
    throw FormatError("PwExpr with composed residual pieces is not serializable");
  if (e.is_poly()) {
    w.begin_obj();
    write_poly_body(w, *e.as_poly());
    w.end_obj();
    return;
  }
  w.begin_obj();
  w.key("op").str(e.kind() == PieceExpr::Kind::Min ? "min" : "max");
  w.key("args").begin_arr();
  for (const PieceExpr& c : e.children()) {
    w.item();
    write_piece_expr(w, c);
  }
  w.end_arr();
  w.end_obj();
}

PieceExpr read_piece_expr(const json& j) {
  if (j.contains("op")) {
    std::vector<PieceExpr> kids;
    for (const auto& a : j.at("args")) kids.push_back(read_piece_expr(a));
    const std::string op = j.at("op").get<std::string>();
    if (op == "min") return PieceExpr::min_of(std::move(kids));
    if (op == "max") return PieceExpr::max_of(std::move(kids));
    throw FormatError("unknown piece op '" + op + "'");
  }
  return PieceExpr::poly(read_poly(j));
}

json parse_json(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw FormatError("malformed JSON input");
  return j;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write file: " + path);
  out << text;
}

}  // namespace

// ----------------------------------------------------------- GridFn CSV

std::string write_gridfn_csv(const GridFn& u) {
  std::ostringstream out;
  const Grid& g = u.grid;
  out << g.dim();
  for (int k : g.nodes_per_axis) out << ',' << k;
  for (int i = 0; i < g.dim(); ++i) out << ',' << fmt_double(g.box.lo[i]);
  for (int i = 0; i < g.dim(); ++i) out << ',' << fmt_double(g.box.hi[i]);
  out << '\n';
  for (const XReal& v : u.values) out << fmt_double(v.value()) << '\n';
  return out.str();
}

GridFn read_gridfn_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty GridFn file at line 1");
  const std::vector<std::string> head = split_csv(line);
  if (head.empty()) throw FormatError("missing header at line 1");
  int ndim = 0;
  try {
    ndim = std::stoi(head[0]);
  } catch (const std::exception&) {
    throw FormatError("malformed dimension in header at line 1");
  }
  if (ndim < 1 || static_cast<int>(head.size()) != 1 + 3 * ndim)
    throw FormatError("header must be ndim,n1..nk,lo..,hi.. at line 1");
  std::vector<int> nodes;
  for (int i = 0; i < ndim; ++i) {
    try {
      nodes.push_back(std::stoi(head[static_cast<size_t>(1 + i)]));
    } catch (const std::exception&) {
      throw FormatError("malformed node count in header at line 1");
    }
  }
  std::vector<double> lo, hi;
  for (int i = 0; i < ndim; ++i)
    lo.push_back(parse_value(head[static_cast<size_t>(1 + ndim + i)], 1));
  for (int i = 0; i < ndim; ++i)
    hi.push_back(parse_value(head[static_cast<size_t>(1 + 2 * ndim + i)], 1));
  Grid grid(Box(Point(std::move(lo)), Point(std::move(hi))), std::move(nodes));

  std::vector<XReal> values;
  values.reserve(grid.node_count());
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    values.emplace_back(parse_value(line, line_no));
  }
  if (values.size() != grid.node_count())
    throw FormatError("expected " + std::to_string(grid.node_count()) + " values, got " +
                      std::to_string(values.size()));
  return GridFn(std::move(grid), std::move(values));
}

GridFn read_gridfn_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open file: " + path);
  return read_gridfn_csv(in);
}

void write_gridfn_csv_file(const GridFn& u, const std::string& path) {
  write_file(path, write_gridfn_csv(u));
}

// ----------------------------------------------------------- PwPoly JSON

namespace {

void write_domain(JsonWriter& w, const Box& b) {
  w.begin_obj();
  w.key("lo");
  write_coords(w, b.lo);
  w.key("hi");
  write_coords(w, b.hi);
  w.end_obj();
}

Box read_domain(const json& j) {
  return Box(read_coords(j.at("lo")), read_coords(j.at("hi")));
}

}  // namespace

std::string write_pwpoly_json(const PwPoly& f) {
  JsonWriter w;
  w.begin_obj();
  w.key("domain");
  write_domain(w, f.complex().domain());
  w.key("cells").begin_arr();
  for (size_t c = 0; c < f.complex().size(); ++c) {
    const Box& cell = f.complex().cells()[c];
    w.item().begin_obj();
    w.key("lo");
    write_coords(w, cell.lo);
    w.key("hi");
    write_coords(w, cell.hi);
    write_poly_body(w, f.pieces()[c]);
    w.end_obj();
  }
  w.end_arr();
  w.end_obj();
  return w.text();
}

PwPoly read_pwpoly_json(const std::string& text) {
  const json j = parse_json(text);
  Box domain = read_domain(j.at("domain"));
  std::vector<Box> cells;
  std::vector<Poly> pieces;
  for (const auto& cj : j.at("cells")) {
    cells.emplace_back(read_coords(cj.at("lo")), read_coords(cj.at("hi")));
    pieces.push_back(read_poly(cj));
  }
  return PwPoly(CellComplex(std::move(domain), std::move(cells)), std::move(pieces));
}

PwPoly read_pwpoly_json_file(const std::string& path) { return read_pwpoly_json(read_file(path)); }

void write_pwpoly_json_file(const PwPoly& f, const std::string& path) {
  write_file(path, write_pwpoly_json(f));
}

std::string write_pwexpr_json(const PwExpr& f) {
  JsonWriter w;
  w.begin_obj();
  w.key("domain");
  write_domain(w, f.complex().domain());
  w.key("cells").begin_arr();
  for (size_t c = 0; c < f.complex().size(); ++c) {
    const Box& cell = f.complex().cells()[c];
    w.item().begin_obj();
    w.key("lo");
    write_coords(w, cell.lo);
    w.key("hi");
    write_coords(w, cell.hi);
    w.key("expr");
    write_piece_expr(w, f.pieces()[c]);
    w.end_obj();
  }
  w.end_arr();
  w.end_obj();
  return w.text();
}

PwExpr read_pwexpr_json(const std::string& text) {
  const json j = parse_json(text);
  Box domain = read_domain(j.at("domain"));
  std::vector<Box> cells;
  std::vector<PieceExpr> pieces;
  for (const auto& cj : j.at("cells")) {
    cells.emplace_back(read_coords(cj.at("lo")), read_coords(cj.at("hi")));
    if (cj.contains("expr")) {
      pieces.push_back(read_piece_expr(cj.at("expr")));
    } else {
      pieces.push_back(PieceExpr::poly(read_poly(cj)));
    }
  }
  return PwExpr(CellComplex(std::move(domain), std::move(cells)), std::move(pieces));
}

PwExpr read_pwexpr_json_file(const std::string& path) { return read_pwexpr_json(read_file(path)); }

// ------------------------------------------------------------ solutions

namespace {

void write_certificate_body(JsonWriter& w, const Certificate& cert) {
  w.key("pass").raw(cert.pass ? "true" : "false");
  w.key("worst_margin").num(cert.worst_margin);
  w.key("initial_defect").num(cert.initial_defect);
  w.key("u0_fit_residual").num(cert.u0_fit_residual);
  w.key("sample_density").num(cert.sample_density);
  w.key("seed").raw(std::to_string(cert.seed));
  w.key("depth_histogram").begin_arr();
  for (int c : cert.depth_histogram) w.item().raw(std::to_string(c));
  w.end_arr();
  w.key("cells").begin_arr();
  for (const CellReport& r : cert.cells) {
    w.item().begin_obj();
    w.key("lo");
    write_coords(w, r.cell.lo);
    w.key("hi");
    write_coords(w, r.cell.hi);
    w.key("depth").raw(std::to_string(r.depth));
    w.key("initial").raw(r.initial ? "true" : "false");
    w.key("samples").raw(std::to_string(r.samples));
    w.key("margin_min").begin_arr();
    for (double m : r.margin_min) w.item().num(m);
    w.end_arr();
    w.key("margin_max").begin_arr();
    for (double m : r.margin_max) w.item().num(m);
    w.end_arr();
    w.end_obj();
  }
  w.end_arr();
}

Certificate read_certificate(const json& j) {
  Certificate cert;
  cert.pass = j.at("pass").get<bool>();
  cert.worst_margin = j.at("worst_margin").get<double>();
  cert.initial_defect = j.at("initial_defect").get<double>();
  cert.u0_fit_residual = j.at("u0_fit_residual").get<double>();
  cert.sample_density = j.at("sample_density").get<int>();
  cert.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& v : j.at("depth_histogram")) cert.depth_histogram.push_back(v.get<int>());
  for (const auto& cj : j.at("cells")) {
    CellReport r;
    r.cell = Box(read_coords(cj.at("lo")), read_coords(cj.at("hi")));
    r.depth = cj.at("depth").get<int>();
    r.initial = cj.at("initial").get<bool>();
    r.samples = cj.at("samples").get<int>();
    for (const auto& m : cj.at("margin_min")) r.margin_min.push_back(m.get<double>());
    for (const auto& m : cj.at("margin_max")) r.margin_max.push_back(m.get<double>());
    cert.cells.push_back(std::move(r));
  }
  return cert;
}

void write_solve_cfg(JsonWriter& w, const SolveCfg& cfg, const JetSolverCfg& jcfg) {
  w.begin_obj();
  w.key("eps").num(cfg.eps);
  w.key("theta").num(cfg.theta);
  w.key("initial_cells").begin_arr();
  for (int c : cfg.initial_cells) w.item().raw(std::to_string(c));
  w.end_arr();
  w.key("max_depth").raw(std::to_string(cfg.max_depth));
  w.key("verify_density").raw(std::to_string(cfg.verify_density));
  w.key("cert_density").raw(std::to_string(cfg.cert_density));
  w.key("seed").raw(std::to_string(cfg.seed));
  w.key("degree").raw(std::to_string(cfg.degree));
  w.key("neighbor_matching").raw(cfg.neighbor_matching ? "true" : "false");
  w.key("u0_tol").num(cfg.u0_tol);
  w.key("jet_tolerance").num(jcfg.tolerance);
  w.key("jet_max_iterations").raw(std::to_string(jcfg.max_iterations));
  w.end_obj();
}

}  // namespace

std::string write_certificate_json(const Certificate& cert) {
  JsonWriter w;
  w.begin_obj();
  write_certificate_body(w, cert);
  w.end_obj();
  return w.text();
}

std::string write_solution_json(const ApproxSolution& sol) {
  JsonWriter w;
  w.begin_obj();
  w.key("system").begin_obj();
  w.key("dsl").str(pretty_print(sol.sys));
  w.key("n_spatial").raw(std::to_string(sol.sys.n_spatial()));
  w.key("has_time").raw(sol.sys.has_time ? "true" : "false");
  w.key("params").begin_obj();
  for (const auto& [k, v] : sol.sys.params) w.key(k).num(v);
  w.end_obj();
  w.key("ns_builtin").raw(sol.sys.hooks.regular ? "true" : "false");
  w.end_obj();
  w.key("eps").num(sol.eps);
  w.key("theta").num(sol.theta);
  w.key("rhs").begin_arr();
  for (const std::string& t : sol.g.texts) w.item().str(t);
  w.end_arr();
  if (sol.u0) {
    w.key("u0").begin_obj();
    w.key("unknowns").begin_arr();
    for (const std::string& u : sol.u0->unknowns) w.item().str(u);
    w.end_arr();
    w.key("exprs").begin_arr();
    for (const std::string& t : sol.u0->texts) w.item().str(t);
    w.end_arr();
    w.end_obj();
  }
  w.key("unknowns").begin_arr();
  for (size_t i = 0; i < sol.w.size(); ++i) {
    w.item().begin_obj();
    w.key("name").str(sol.sys.jet.unknowns[i]);
    w.key("fn").raw(write_pwpoly_json(sol.w[i]));
    w.end_obj();
  }
  w.end_arr();
  w.key("config");
  write_solve_cfg(w, sol.cfg, sol.jcfg);
  w.key("certificate").begin_obj();
  write_certificate_body(w, sol.certificate);
  w.end_obj();
  w.end_obj();
  return w.text();
}

ApproxSolution read_solution_json(const std::string& text) {
  const json j = parse_json(text);
  ApproxSolution sol;

  const json& sj = j.at("system");
  const int ns = sj.at("n_spatial").get<int>();
  const bool ht = sj.at("has_time").get<bool>();
  const bool ns_builtin = sj.value("ns_builtin", false);
  std::map<std::string, double> params;
  for (const auto& [k, v] : sj.at("params").items()) params[k] = v.get<double>();
  if (ns_builtin && params.count("nu")) {
    sol.sys = ns_system(params.at("nu"));
    // re-parse to honor a possibly non-default convective form
    PdeSystem parsed = parse_operator(sj.at("dsl").get<std::string>(), ns, ht ? 1 : 0);
    sol.sys.equations = parsed.equations;
    sol.sys.rhs_labels = parsed.rhs_labels;
    sol.sys.jet = parsed.jet;
  } else {
    sol.sys = parse_operator(sj.at("dsl").get<std::string>(), ns, ht ? 1 : 0);
  }
  sol.sys.params = std::move(params);

  sol.eps = j.at("eps").get<double>();
  sol.theta = j.at("theta").get<double>();

  std::vector<std::string> rhs_texts;
  for (const auto& t : j.at("rhs")) rhs_texts.push_back(t.get<std::string>());
  std::vector<ExprPtr> rhs_exprs;
  for (const std::string& t : rhs_texts)
    rhs_exprs.push_back(parse_scalar_expr(t, sol.sys.n, sol.sys.has_time));
  sol.g = Rhs::from_exprs(std::move(rhs_exprs), std::move(rhs_texts));

  if (j.contains("u0")) {
    std::vector<std::string> unknowns;
    std::vector<std::string> texts;
    for (const auto& u : j.at("u0").at("unknowns")) unknowns.push_back(u.get<std::string>());
    for (const auto& t : j.at("u0").at("exprs")) texts.push_back(t.get<std::string>());
    sol.u0 = InitialData::from_exprs(std::move(unknowns), std::move(texts), sol.sys.n_spatial());
  }

  for (const auto& uj : j.at("unknowns"))
    sol.w.push_back(read_pwpoly_json(uj.at("fn").dump()));

  const json& cj = j.at("config");
  sol.cfg.eps = sol.eps;
  sol.cfg.theta = sol.theta;
  for (const auto& c : cj.at("initial_cells")) sol.cfg.initial_cells.push_back(c.get<int>());
  sol.cfg.max_depth = cj.at("max_depth").get<int>();
  sol.cfg.verify_density = cj.at("verify_density").get<int>();
  sol.cfg.cert_density = cj.at("cert_density").get<int>();
  sol.cfg.seed = cj.at("seed").get<std::uint64_t>();
  sol.cfg.degree = cj.at("degree").get<int>();
  sol.cfg.neighbor_matching = cj.at("neighbor_matching").get<bool>();
  sol.cfg.u0_tol = cj.at("u0_tol").get<double>();
  sol.jcfg.tolerance = cj.at("jet_tolerance").get<double>();
  sol.jcfg.max_iterations = cj.at("jet_max_iterations").get<int>();

  sol.certificate = read_certificate(j.at("certificate"));
  return sol;
}

ApproxSolution read_solution_json_file(const std::string& path) {
  return read_solution_json(read_file(path));
}

std::string write_sample_dump_csv(const ApproxSolution& sol, int density) {
  std::ostringstream out;
  const int n = sol.w.front().complex().domain().dim();
  for (int i = 0; i < n; ++i) out << "x" << (i + 1) << ",";
  out << "component,residual,band_lo,band_hi\n";
  const CellComplex& cx = sol.w.front().complex();
  const SampleSet samples = sample_cells(cx.domain(), cx.cells(), density);
  for (const Point& x : samples.points) {
    const size_t ci = cx.interior_cell(x);
    std::vector<Poly> cell_polys;
    for (const PwPoly& w : sol.w) cell_polys.push_back(w.pieces()[ci]);
    const std::vector<double> jet =
        jet_of_polys(sol.sys.jet, cell_polys, sol.sys.jet.unknowns, x);
    const std::vector<double> F = eval_F(sol.sys, x, jet);
    for (int k = 0; k < sol.sys.m(); ++k) {
      for (int i = 0; i < n; ++i) out << fmt_double(x[i]) << ",";
      const double hi = sol.g.eval(k, x);
      out << (k + 1) << "," << fmt_double(F[static_cast<size_t>(k)]) << ","
          << fmt_double(hi - sol.eps) << "," << fmt_double(hi) << "\n";
    }
  }
  return out.str();
}

std::string write_converge_report_json(const ConvergeResult& res, const LatticeCfg& cfg) {
  JsonWriter w;
  w.begin_obj();
  w.key("verdict").str(res.converged ? "Converged" : "NotConverged");
  if (!res.converged) w.key("reason").str(res.reason);
  w.key("residual").num(res.witness.residual);
  w.key("candidate_dist").num(res.witness.candidate_dist);
  w.key("config").begin_obj();
  w.key("gap_tol").num(cfg.gap_tol);
  w.key("candidate_tol").num(cfg.cand_tol());
  w.key("density").raw(std::to_string(cfg.density));
  w.key("r_inner").raw(std::to_string(cfg.r_inner));
  w.key("r_outer").raw(std::to_string(cfg.r_outer));
  w.key("truncation").raw(std::to_string(res.witness.lambda_seq.size()));
  w.end_obj();
  w.end_obj();
  return w.text();
}

std::string write_chain_report_json(const std::vector<std::vector<ChainVerdict>>& verdicts,
                                    const LatticeCfg& cfg) {
  JsonWriter w;
  w.begin_obj();
  w.key("chains").begin_arr();
  for (const auto& row : verdicts) {
    w.item().begin_arr();
    for (const ChainVerdict& v : row) {
      w.item().begin_obj();
      w.key("verdict").str(v.pinched ? "Pinched" : "Gap");
      w.key("gap").num(v.gap);
      if (!v.pinched) {
        w.key("witness");
        write_coords(w, v.witness);
      }
      w.end_obj();
    }
    w.end_arr();
  }
  w.end_arr();
  w.key("config").begin_obj();
  w.key("gap_tol").num(cfg.gap_tol);
  w.key("density").raw(std::to_string(cfg.density));
  w.key("r_inner").raw(std::to_string(cfg.r_inner));
  w.key("r_outer").raw(std::to_string(cfg.r_outer));
  w.end_obj();
  w.end_obj();
  return w.text();
}

}  // namespace ordcomp
