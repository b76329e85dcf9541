#pragma once

#include <iosfwd>
#include <string>

#include "ordcomp/gridfn.hpp"
#include "ordcomp/lattice.hpp"
#include "ordcomp/ordsolve.hpp"
#include "ordcomp/pwpoly.hpp"

namespace ordcomp {

// All floating-point output is printed with 17 significant digits so that
// finite values round-trip bit-exactly. Infinities use the tokens inf/-inf.
std::string fmt_double(double v);

// GridFn CSV: header `ndim,n1,...,nk,lo1,...,lok,hi1,...,hik`, then one
// value per line in row-major node order (axis 0 slowest).
std::string write_gridfn_csv(const GridFn& u);
GridFn read_gridfn_csv(std::istream& in);
GridFn read_gridfn_csv_file(const std::string& path);
void write_gridfn_csv_file(const GridFn& u, const std::string& path);

// PwPoly JSON: {"domain":{"lo":[...],"hi":[...]},"cells":[{"lo":[...],
// "hi":[...],"center":[...],"coeffs":{"2,0":1.5,...}},...]} with
// comma-joined multi-index keys.
std::string write_pwpoly_json(const PwPoly& f);
PwPoly read_pwpoly_json(const std::string& text);
PwPoly read_pwpoly_json_file(const std::string& path);
void write_pwpoly_json_file(const PwPoly& f, const std::string& path);

// PwExpr JSON: the PwPoly layout with per-cell expression trees
// {"op":"max","args":[...]} whose leaves are {"center":[...],"coeffs":{...}}.
// Only min/max/poly trees are serializable.
std::string write_pwexpr_json(const PwExpr& f);
PwExpr read_pwexpr_json(const std::string& text);
PwExpr read_pwexpr_json_file(const std::string& path);

// Certificates and solutions. A solution file embeds everything needed to
// re-verify it: the system text, parameters, right-hand side, band
// parameters, initial data and the per-unknown piecewise polynomials.
std::string write_certificate_json(const Certificate& cert);
std::string write_solution_json(const ApproxSolution& sol);
ApproxSolution read_solution_json(const std::string& text);
ApproxSolution read_solution_json_file(const std::string& path);

// Long-format sample dump: point coords, component, residual, band-lo,
// band-hi; one row per (sample, component).
std::string write_sample_dump_csv(const ApproxSolution& sol, int density);

// Report fragments used by the CLI.
std::string write_converge_report_json(const ConvergeResult& res, const LatticeCfg& cfg);
std::string write_chain_report_json(const std::vector<std::vector<ChainVerdict>>& verdicts,
                                    const LatticeCfg& cfg);

}  // namespace ordcomp
