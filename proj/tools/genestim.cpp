#include "io.hpp"

#include "genestim/families.hpp"
#include "genestim/information.hpp"
#include "genestim/intervals.hpp"
#include "genestim/location_lab.hpp"
#include "genestim/odds_ratio.hpp"
#include "genestim/registry.hpp"
#include "genestim/verify.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace genestim;
using io::json;

namespace {

struct Common {
  std::string out = ".";
  std::uint64_t seed = 0;
};

json manifest(const std::string& command, const Common& common, json params) {
  return {{"tool", "genestim"},
          {"version", kVersion},
          {"command", command},
          {"seed", common.seed},
          {"params", std::move(params)}};
}

fs::path out_dir(const Common& c) {
  fs::path p(c.out);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (!fs::is_directory(p)) fail(ErrorKind::InvalidArgument, "output directory not writable: " + c.out);
  return p;
}

void finish(const Common& c, json m, const std::vector<std::string>& files) {
  m["files"] = files;
  io::write_json(out_dir(c) / "manifest.json", m);
  for (const auto& f : files) std::cout << (out_dir(c) / f).string() << "\n";
}

// ---- binom-curves

struct BinomCurves {
  int n = 20, y = 6, grid = 512;
  double margin = 1e-4;
  std::vector<double> slices{0.5, 0.55};
};

void run_binom_curves(const Common& c, const BinomCurves& o) {
  require_count(o.n, o.y);
  require(o.grid >= 2, "grid must have at least 2 points");
  json m = manifest("binom-curves", c,
                    {{"n", o.n}, {"y", o.y}, {"grid", o.grid}, {"margin", o.margin}, {"slices", o.slices}});
  auto grid = default_grid(static_cast<std::size_t>(o.grid), o.margin);
  const fs::path dir = out_dir(c);
  auto emit = [&](const CurveGrid& curves, const std::string& file) {
    io::CsvWriter w(m, {"y", "p", "value", "slope_sign", "realized"});
    for (const auto& r : curve_rows(curves)) w.row(r.y, r.p, r.value, r.slope_sign, r.realized);
    w.save(dir / file);
  };
  emit(score_curves(o.n, grid, o.y), "fig1_score_curves.csv");
  emit(llr_curves(o.n, grid, o.y), "fig2_llr_curves.csv");
  io::CsvWriter s(m, {"curve", "p", "y", "value", "probability", "slope_sign", "as_extreme"});
  for (CurveKind kind : {CurveKind::StandardizedScore, CurveKind::LogLikelihoodRatio})
    for (double p : o.slices) {
      auto slice = vertical_slice(kind, o.n, p, o.y);
      auto ext = slice.as_extreme();
      for (const auto& r : slice.rows) {
        bool marked = std::find(ext.begin(), ext.end(), r.y) != ext.end();
        s.row(kind == CurveKind::StandardizedScore ? "score" : "llr", p, r.y, r.value, r.probability,
              r.slope_sign, marked);
      }
    }
  s.save(dir / "slices.csv");
  finish(c, m, {"fig1_score_curves.csv", "fig2_llr_curves.csv", "slices.csv"});
}

// ---- binom-ci

struct BinomCi {
  int n = 20, y = 6;
  double z = odds::kZ95;
  std::string side = "two-sided", method = "score", parameterization = "p";
  double alpha = 0.025;
};

void run_binom_ci(const Common& c, const BinomCi& o) {
  IntervalSide side = parse_side(o.side);
  IntervalResult r;
  if (o.method == "score") {
    if (o.parameterization == "p") r = binomial_ci_z(o.n, o.y, o.z, side);
    else if (o.parameterization == "log-odds") r = binomial_log_odds_ci_z(o.n, o.y, o.z, side);
    else fail(ErrorKind::InvalidArgument, "parameterization must be p or log-odds");
  } else if (o.method == "tail") {
    r = binomial_tail_ci(o.n, o.y, o.alpha, side);
  } else {
    fail(ErrorKind::InvalidArgument, "method must be score or tail");
  }
  json params{{"n", o.n}, {"y", o.y}, {"side", o.side}, {"method", o.method}};
  if (o.method == "score") {
    params["z"] = o.z;
    params["parameterization"] = o.parameterization;
  } else {
    params["alpha"] = o.alpha;
  }
  json m = manifest("binom-ci", c, params);
  io::write_json(out_dir(c) / "interval.json", {{"manifest", m}, {"interval", io::to_json(r)}});
  finish(c, m, {"interval.json"});
}

// ---- info-report

struct InfoReport {
  std::string family = "bernoulli-sum";
  std::vector<int> sizes{20};
  std::vector<double> params;
  std::string estimator = "all";
  std::string mode = "exact";
  std::int64_t reps = 100000;
};

void run_info_report(const Common& c, const InfoReport& o) {
  ModelFamily fam = make_builtin_family(o.family, o.sizes);
  const int dim = fam.dim_interest + fam.dim_nuisance;
  std::vector<double> flat = o.params;
  if (flat.empty()) {
    if (o.family == "bernoulli-sum")
      for (int i = 1; i <= 9; ++i) flat.push_back(i / 10.0);
    else
      fail(ErrorKind::InvalidArgument, "--param is required for family " + o.family);
  }
  if (flat.size() % static_cast<std::size_t>(dim) != 0)
    fail(ErrorKind::InvalidArgument, "--param count must be a multiple of " + std::to_string(dim));

  ExpectationEngine engine = ExpectationEngine::exact();
  if (o.mode == "mc") engine = ExpectationEngine::monte_carlo(o.reps, c.seed);
  else if (o.mode != "exact") fail(ErrorKind::InvalidArgument, "mode must be exact or mc");

  std::vector<RegisteredEstimator> regs;
  if (o.family == "bernoulli-sum") regs = bernoulli_suite(o.sizes.at(0));
  else regs = {{"score", "model score", [](const ExpectationEngine& e, const ModelFamily& f) {
                  return score_estimator(e, f);
                }}};
  if (o.estimator != "all") {
    std::erase_if(regs, [&](const RegisteredEstimator& r) { return r.label != o.estimator; });
    if (regs.empty()) fail(ErrorKind::InvalidArgument, "unknown estimator '" + o.estimator + "'");
  }

  json reports = json::array();
  for (std::size_t k = 0; k < flat.size(); k += static_cast<std::size_t>(dim)) {
    Vec param(dim);
    for (int i = 0; i < dim; ++i) param(i) = flat[k + static_cast<std::size_t>(i)];
    for (const auto& reg : regs) {
      auto g = reg.make(engine, fam);
      json j = io::to_json(information(engine, fam, g, param));
      j["score_equation_residual"] = io::to_json(check_score_equation(engine, fam, g, param));
      j["score_equation_tolerance"] = score_equation_tolerance(engine);
      reports.push_back(j);
    }
  }
  json m = manifest("info-report", c,
                    {{"family", o.family},
                     {"sizes", o.sizes},
                     {"params", flat},
                     {"estimator", o.estimator},
                     {"mode", o.mode},
                     {"reps", o.mode == "mc" ? json(o.reps) : json(nullptr)}});
  io::write_json(out_dir(c) / "info_report.json", {{"manifest", m}, {"reports", reports}});
  finish(c, m, {"info_report.json"});
}

// ---- zeta-lab

struct ZetaLab {
  std::string family = "normal";
  int n = 10;
  std::int64_t reps = 100000;
  std::optional<double> rescale;
  std::vector<int> n_overlays;
  std::vector<double> rescale_overlays;
  bool no_default_overlays = false;
};

void run_zeta_lab(const Common& c, const ZetaLab& o) {
  auto fam = location::parse_data_family(o.family);
  location::McRunConfig cfg = o.no_default_overlays ? location::McRunConfig{}
                                                    : location::McRunConfig::figure_defaults(fam, c.seed);
  cfg.data_family = fam;
  cfg.seed = c.seed;
  cfg.n = o.n;
  cfg.reps = o.reps;
  cfg.rescale = o.rescale;
  if (!o.n_overlays.empty()) cfg.n_overlays = o.n_overlays;
  if (!o.rescale_overlays.empty()) cfg.rescale_overlays = o.rescale_overlays;
  cfg.validate();

  auto res = location::run_comparison(cfg);
  auto curves = location::zeta_curves(res);
  json m = manifest("zeta-lab", c,
                    {{"data_family", o.family},
                     {"n", cfg.n},
                     {"reps", cfg.reps},
                     {"estimators", cfg.estimators},
                     {"rescale", cfg.rescale ? json(*cfg.rescale) : json(nullptr)},
                     {"n_overlays", cfg.n_overlays},
                     {"rescale_overlays", cfg.rescale_overlays},
                     {"quantile_probabilities", "99 equispaced from 0.005 to 0.995"},
                     {"quantile_type", "linear interpolation between order statistics (type 7)"},
                     {"t3_failures", res.t3_failures}});
  const fs::path dir = out_dir(c);
  io::CsvWriter eff(m, {"estimator", "data_family", "eff", "se", "var_ratio"});
  for (const auto& r : res.efficiency) eff.row(r.estimator, o.family, r.efficiency, r.se, r.var_ratio);
  eff.save(dir / "efficiency.csv");
  io::CsvWriter z(m, {"curve_label", "ref_zeta", "comp_zeta", "prob"});
  for (const auto& cv : curves)
    for (std::size_t i = 0; i < cv.reference_zeta.size(); ++i)
      z.row(cv.estimator_label, cv.reference_zeta[i], cv.comparison_zeta[i], cv.reference_quantile_probs[i]);
  z.save(dir / "zeta_curves.csv");
  for (const auto& cv : curves)
    if (cv.dropped_points > 0)
      std::cerr << cv.estimator_label << ": dropped " << cv.dropped_points << " points with an empty tail\n";
  finish(c, m, {"efficiency.csv", "zeta_curves.csv"});
}

// ---- or-interval

struct OrInterval {
  int x1 = 0, x2 = 0, n1 = 20, n2 = 30;
  double z = odds::kZ95, confidence = 0.95;
  std::optional<double> c;
  std::string side = "two-sided";
  bool strict = false;
};

void run_or_interval(const Common& c, const OrInterval& o) {
  odds::TwoBinomialData d{o.x1, o.x2, o.n1, o.n2};
  d.validate();
  auto rule = o.c ? odds::NuisanceRule::plus_c(*o.c) : odds::NuisanceRule::profiled();
  auto zr = odds::z_interval(d, o.z, rule, parse_side(o.side), !o.strict);
  auto fr = odds::fisher_exact_interval(d, o.confidence);
  json m = manifest("or-interval", c,
                    {{"x1", o.x1},
                     {"x2", o.x2},
                     {"n1", o.n1},
                     {"n2", o.n2},
                     {"z", o.z},
                     {"nuisance", odds::to_string(rule)},
                     {"side", o.side},
                     {"equal_sign", !o.strict},
                     {"confidence", o.confidence}});
  json body{{"manifest", m},
            {"log_odds_ratio_estimate", io::num(odds::log_odds_ratio_estimate(d))},
            {"nuisance_estimate", odds::resolve_nuisance(d, rule)},
            {"z_standard_log_odds_ratio", io::to_json(zr)},
            {"fisher_exact_odds_ratio", io::to_json(fr)},
            {"fisher_exact_log_odds_ratio", io::to_json(odds::to_log_scale(fr))}};
  io::write_json(out_dir(c) / "interval.json", body);
  finish(c, m, {"interval.json"});
}

// ---- or-table1

struct OrTable {
  int n1 = 20, n2 = 30;
  double z = odds::kZ95, confidence = 0.95;
  std::vector<double> c_list{0.0, 0.5, 1.0};
};

void run_or_table1(const Common& c, const OrTable& o) {
  odds::CoverageConfig cfg;
  cfg.n1 = o.n1;
  cfg.n2 = o.n2;
  cfg.z = o.z;
  cfg.confidence = o.confidence;
  cfg.c_list = o.c_list;
  auto cells = odds::coverage_table(cfg, odds::table1_design());
  json m = manifest("or-table1", c,
                    {{"n1", o.n1}, {"n2", o.n2}, {"z", o.z}, {"confidence", o.confidence}, {"c", o.c_list}});
  io::CsvWriter w(m, {"odds_ratio", "p1", "p2", "method", "c", "equal_sign", "coverage"});
  for (const auto& cell : cells)
    w.row(cell.odds_ratio, cell.p1, cell.p2, odds::to_string(cell.method),
          cell.method == odds::Method::FisherExact ? std::string("NA") : io::fmt(cell.c), cell.equal_sign,
          cell.coverage);
  w.save(out_dir(c) / "table1.csv");
  finish(c, m, {"table1.csv"});
}

// ---- or-fig5

struct OrFig5 {
  int n1 = 20, n2 = 30;
  double confidence = 0.95;
};

void run_or_fig5(const Common& c, const OrFig5& o) {
  auto rows = odds::fisher_endpoint_tails(o.n1, o.n2, o.confidence);
  const double level = (1.0 - o.confidence) / 2.0;
  json m = manifest("or-fig5", c, {{"n1", o.n1}, {"n2", o.n2}, {"confidence", o.confidence}, {"level", level}});
  io::CsvWriter w(m, {"x1", "x2", "left_tail", "right_tail", "exceeds"});
  for (const auto& r : rows) w.row(r.x1, r.x2, r.left_tail, r.right_tail, r.left_tail > level || r.right_tail > level);
  w.save(out_dir(c) / "fig5_tails.csv");
  std::cerr << "cells exceeding " << level << ": " << odds::count_exceeding(rows, level) << "\n";
  finish(c, m, {"fig5_tails.csv"});
}

// ---- verify

int run_verify(const Common& c, bool write) {
  auto results = verify::run_all();
  bool ok = true;
  json arr = json::array();
  for (const auto& r : results) {
    ok = ok && r.passed;
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << "  measured=" << io::fmt(r.measured)
              << " tol=" << io::fmt(r.tolerance) << (r.note.empty() ? "" : "  [" + r.note + "]") << "\n";
    arr.push_back({{"name", r.name},
                   {"passed", r.passed},
                   {"measured", io::num(r.measured)},
                   {"tolerance", r.tolerance},
                   {"note", r.note}});
  }
  if (write) {
    json m = manifest("verify", c, json::object());
    io::write_json(out_dir(c) / "verify.json", {{"manifest", m}, {"properties", arr}});
    m["files"] = {"verify.json"};
    io::write_json(out_dir(c) / "manifest.json", m);
  }
  return ok ? 0 : 1;
}

void error_json(const std::string& kind, const std::string& message) {
  std::cerr << json{{"error", kind}, {"message", message}}.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generalized-estimation toolkit"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out", common.out, "output directory")->capture_default_str();
    sub->add_option("--seed", common.seed, "random seed")->capture_default_str();
  };

  BinomCurves bc;
  auto* s_bc = app.add_subcommand("binom-curves", "standardized-score and LLR curves for a binomial count");
  s_bc->add_option("--n", bc.n)->capture_default_str();
  s_bc->add_option("--y", bc.y)->capture_default_str();
  s_bc->add_option("--grid", bc.grid)->capture_default_str();
  s_bc->add_option("--margin", bc.margin)->capture_default_str();
  s_bc->add_option("--slice", bc.slices, "p values for vertical slices")->capture_default_str();
  add_common(s_bc);

  BinomCi bi;
  auto* s_bi = app.add_subcommand("binom-ci", "binomial interval by score inversion or tail inversion");
  s_bi->add_option("--n", bi.n)->capture_default_str();
  s_bi->add_option("--y", bi.y)->capture_default_str();
  s_bi->add_option("--z", bi.z)->capture_default_str();
  s_bi->add_option("--side", bi.side, "two-sided | lower-only | upper-only")->capture_default_str();
  s_bi->add_option("--method", bi.method, "score | tail")->capture_default_str();
  s_bi->add_option("--parameterization", bi.parameterization, "p | log-odds")->capture_default_str();
  s_bi->add_option("--alpha", bi.alpha, "tail level for --method tail")->capture_default_str();
  add_common(s_bi);

  InfoReport ir;
  auto* s_ir = app.add_subcommand("info-report", "Lambda-information, efficiency and score-equation report");
  s_ir->add_option("--family", ir.family)->capture_default_str();
  s_ir->add_option("--size", ir.sizes, "sample size(s) of the family")->capture_default_str();
  s_ir->add_option("--param", ir.params, "parameter values, interest then nuisance, repeated per point");
  s_ir->add_option("--estimator", ir.estimator)->capture_default_str();
  s_ir->add_option("--mode", ir.mode, "exact | mc")->capture_default_str();
  s_ir->add_option("--reps", ir.reps)->capture_default_str();
  add_common(s_ir);

  ZetaLab zl;
  auto* s_zl = app.add_subcommand("zeta-lab", "mean / median / t3-MLE comparison with zeta curves");
  s_zl->add_option("--family", zl.family, "normal | t3")->capture_default_str();
  s_zl->add_option("--n", zl.n)->capture_default_str();
  s_zl->add_option("--reps", zl.reps)->capture_default_str();
  s_zl->add_option("--rescale", zl.rescale, "multiply every observation");
  s_zl->add_option("--n-overlay", zl.n_overlays, "alternate sample sizes for the mean");
  s_zl->add_option("--rescale-overlay", zl.rescale_overlays, "factors applied to the mean");
  s_zl->add_flag("--no-default-overlays", zl.no_default_overlays);
  add_common(s_zl);

  OrInterval oi;
  auto* s_oi = app.add_subcommand("or-interval", "log-odds-ratio z-standard and Fisher exact intervals");
  s_oi->add_option("--x1", oi.x1)->required();
  s_oi->add_option("--x2", oi.x2)->required();
  s_oi->add_option("--n1", oi.n1)->capture_default_str();
  s_oi->add_option("--n2", oi.n2)->capture_default_str();
  s_oi->add_option("--z", oi.z)->capture_default_str();
  s_oi->add_option("--c", oi.c, "plus-c nuisance constant; omitted means profiled");
  s_oi->add_option("--side", oi.side)->capture_default_str();
  s_oi->add_flag("--strict", oi.strict, "use |s_bar| < z instead of <=");
  s_oi->add_option("--confidence", oi.confidence)->capture_default_str();
  add_common(s_oi);

  OrTable ot;
  auto* s_ot = app.add_subcommand("or-table1", "exact coverage of the odds-ratio intervals");
  s_ot->add_option("--n1", ot.n1)->capture_default_str();
  s_ot->add_option("--n2", ot.n2)->capture_default_str();
  s_ot->add_option("--z", ot.z)->capture_default_str();
  s_ot->add_option("--confidence", ot.confidence)->capture_default_str();
  s_ot->add_option("--c", ot.c_list)->capture_default_str();
  add_common(s_ot);

  OrFig5 of;
  auto* s_of = app.add_subcommand("or-fig5", "score-test tails at Fisher exact endpoints");
  s_of->add_option("--n1", of.n1)->capture_default_str();
  s_of->add_option("--n2", of.n2)->capture_default_str();
  s_of->add_option("--confidence", of.confidence)->capture_default_str();
  add_common(s_of);

  auto* s_v = app.add_subcommand("verify", "run the invariant suites");
  bool verify_write = false;
  s_v->add_flag("--write", verify_write, "also write verify.json and manifest.json to --out");
  add_common(s_v);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    error_json("schema", e.what());
    return 2;
  }

  try {
    if (s_bc->parsed()) run_binom_curves(common, bc);
    else if (s_bi->parsed()) run_binom_ci(common, bi);
    else if (s_ir->parsed()) run_info_report(common, ir);
    else if (s_zl->parsed()) run_zeta_lab(common, zl);
    else if (s_oi->parsed()) run_or_interval(common, oi);
    else if (s_ot->parsed()) run_or_table1(common, ot);
    else if (s_of->parsed()) run_or_fig5(common, of);
    else if (s_v->parsed()) return run_verify(common, verify_write);
  } catch (const Error& e) {
    error_json(to_string(e.kind()), e.what());
    return e.kind() == ErrorKind::Numeric ? 3 : 2;
  } catch (const std::exception& e) {
    error_json("numeric", e.what());
    return 3;
  }
  return 0;
}
