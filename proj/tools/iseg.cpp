// iseg: command-line front end for the loss library, matching, attention
// demo, synthetic data, training demo and NoC evaluation.
//
// Exit codes: 0 success, 1 an invariant check failed (or a run diverged),
// 2 bad input (arguments, files, shapes, parameters).

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "iseg/adaptive.hpp"
#include "iseg/attention.hpp"
#include "iseg/clicksim.hpp"
#include "iseg/gradcheck.hpp"
#include "iseg/io.hpp"
#include "iseg/loss_config.hpp"
#include "iseg/matching.hpp"
#include "iseg/synthgen.hpp"
#include "iseg/trainer.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace iseg;

namespace {

constexpr const char* kSpecVersion = "1.0";

// ---------------------------------------------------------------------------
// Run report

struct Check {
  std::string name;
  bool pass = true;
  double measured = 0.0;
  double tolerance = 0.0;
};

struct Report {
  std::string command;
  json config = json::object();
  json results = json::object();
  std::vector<Check> checks;

  /// Passes when measured <= tolerance.
  void at_most(const std::string& name, double measured, double tolerance) {
    checks.push_back({name, std::isfinite(measured) && measured <= tolerance, measured, tolerance});
  }

  void holds(const std::string& name, bool ok) { checks.push_back({name, ok, ok ? 0.0 : 1.0, 0.0}); }

  bool ok() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
  }

  json to_json() const {
    json j;
    j["command"] = command;
    j["config"] = config;
    j["config_hash"] = hash_hex(config.dump());
    j["results"] = results;
    j["invariant_checks"] = json::array();
    for (const auto& c : checks)
      j["invariant_checks"].push_back(
          {{"name", c.name}, {"pass", c.pass}, {"measured", c.measured}, {"tolerance", c.tolerance}});
    j["versions"] = {{"spec_version", kSpecVersion}, {"protocol_version", kProtocolVersion}};
    return j;
  }

  static std::string hash_hex(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
  }
};

void write_json(const fs::path& p, const json& j) { io::write_atomic(p, j.dump(2) + "\n"); }

void ensure_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw ParameterError("cannot create directory '" + p.string() + "': " + ec.message());
}

json read_json(const fs::path& p) {
  const std::string text = io::detail::read_all(p);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw io::ParseError(p.string() + ": invalid JSON: " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Shared option groups

struct LossOpts {
  std::string name = "afl";
  double gamma = 2.0;
  double alpha = 1.0;
  double delta = 0.4;
  bool no_ada = false;
  bool no_agr = false;
  double beta = 0.0;
  CLI::Option* beta_opt = nullptr;
  double smooth = 1.0;
  double eps_clip = kDefaultEpsClip;
  std::string reduction = "sum";

  void add(CLI::App* app, bool with_name = true) {
    if (with_name) app->add_option("--loss", name, "Loss name")->capture_default_str();
    app->add_option("--gamma", gamma, "Focusing parameter")->capture_default_str();
    app->add_option("--alpha", alpha, "Poly coefficient")->capture_default_str();
    app->add_option("--delta", delta, "Gradient-representation delta")->capture_default_str();
    app->add_flag("--no-ada", no_ada, "Disable the difficulty adjustment");
    app->add_flag("--no-agr", no_agr, "Disable the gradient-representation factor");
    beta_opt = app->add_option("--beta", beta, "Class weight for wbce/balanced_ce (default: automatic)");
    app->add_option("--smooth", smooth, "Dice smoothing")->capture_default_str();
    app->add_option("--eps-clip", eps_clip, "Lower clamp on pt")->capture_default_str();
    app->add_option("--reduction", reduction, "sum or mean")
        ->check(CLI::IsMember({"sum", "mean"}))
        ->capture_default_str();
  }

  LossConfig config() const {
    LossConfig c;
    c.kind = parse_loss_kind(name);
    c.gamma = gamma;
    c.alpha = alpha;
    c.delta = delta;
    c.ada_enabled = !no_ada;
    c.agr_enabled = !no_agr;
    if (beta_opt && beta_opt->count()) c.beta = beta;
    c.smooth = smooth;
    c.eps_clip = eps_clip;
    c.reduction = reduction == "mean" ? Reduction::mean : Reduction::sum;
    return c;
  }
};

json to_json(const LossConfig& c) {
  json j = {{"loss", to_string(c.kind)}, {"gamma", c.gamma},         {"alpha", c.alpha},
            {"delta", c.delta},          {"ada", c.ada_enabled},     {"agr", c.agr_enabled},
            {"smooth", c.smooth},        {"eps_clip", c.eps_clip},
            {"reduction", c.reduction == Reduction::mean ? "mean" : "sum"}};
  j["beta"] = c.beta ? json(*c.beta) : json(nullptr);
  return j;
}

std::vector<double> parse_list(const std::string& s, const char* what) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw ParameterError(std::string(what) + ": cannot parse '" + tok + "' as a number");
    }
  }
  if (out.empty()) throw ParameterError(std::string(what) + ": empty list");
  return out;
}

// Synthetic spec from a JSON object. Missing keys keep their defaults.
SynthSpec parse_spec(const json& j, std::optional<std::uint64_t> seed_override) {
  if (!j.is_object()) throw ParameterError("spec must be a JSON object");
  SynthSpec s;
  s.height = j.value("height", s.height);
  s.width = j.value("width", s.width);
  s.n_instances = j.value("n_instances", s.n_instances);
  if (j.contains("shape_kind")) s.shape_kind = parse_shape_kind(j.at("shape_kind").get<std::string>());
  s.boundary_noise = j.value("boundary_noise", s.boundary_noise);
  s.nesting = j.value("nesting", s.nesting);
  s.intensity_noise = j.value("intensity_noise", s.intensity_noise);
  if (seed_override)
    s.seed = Seed{*seed_override};
  else if (j.contains("seed"))
    s.seed = Seed{j.at("seed").get<std::uint64_t>()};
  else
    throw ParameterError("a seed is required: pass --seed or set \"seed\" in the spec");
  s.validate();
  return s;
}

json to_json(const SynthSpec& s) {
  return {{"height", s.height},
          {"width", s.width},
          {"n_instances", s.n_instances},
          {"shape_kind", to_string(s.shape_kind)},
          {"boundary_noise", s.boundary_noise},
          {"nesting", s.nesting},
          {"intensity_noise", s.intensity_noise},
          {"seed", s.seed.value}};
}

SynthSpec load_spec(const std::string& path, std::optional<std::uint64_t> seed) {
  return parse_spec(path.empty() ? json::object() : read_json(path), seed);
}

// ---------------------------------------------------------------------------
// loss eval

int cmd_loss_eval(Report& r, const LossOpts& lo, const std::string& pred_path,
                  const std::string& gt_path, const std::string& grad_out) {
  const LossConfig cfg = lo.config();
  r.config = to_json(cfg);
  r.config["pred"] = pred_path;
  r.config["gt"] = gt_path;
  const ProbMap pred = io::read_prob_map(pred_path);
  const BinaryMask gt = io::read_pgm(gt_path);
  const LossOutput out = evaluate_loss(cfg, pred, gt);

  double gmin = INFINITY, gmax = -INFINITY, l2 = 0.0;
  bool finite = true;
  for (double g : out.grad.values()) {
    gmin = std::min(gmin, g);
    gmax = std::max(gmax, g);
    l2 += g * g;
    finite = finite && std::isfinite(g);
  }
  r.results = {{"loss", to_string(cfg.kind)},
               {"value", out.value},
               {"diagnostics", out.diagnostics},
               {"grad_stats", {{"min", gmin}, {"max", gmax}, {"l2", std::sqrt(l2)}}}};
  if (!grad_out.empty()) {
    io::write_pm(grad_out, out.grad);
    r.results["grad_file"] = grad_out;
  }
  r.holds("value_finite", std::isfinite(out.value));
  r.holds("gradient_finite", finite);
  r.at_most("value_nonnegative", std::max(0.0, -out.value), 1e-12);
  return 0;
}

// ---------------------------------------------------------------------------
// loss grad-check

int cmd_grad_check(Report& r, const std::string& which, int cases, std::uint64_t seed, double tol) {
  if (cases < 1) throw ParameterError("--cases must be >= 1");
  std::vector<LossKind> kinds;
  if (which == "all")
    kinds.assign(kAllLosses.begin(), kAllLosses.end());
  else
    kinds.push_back(parse_loss_kind(which));
  r.config = {{"loss", which}, {"cases", cases}, {"seed", seed}, {"tolerance", tol}, {"fd_step", kFdStep}};

  const Rng root(Seed{seed}, Stream::gradcheck);
  json per = json::object();
  for (LossKind k : kinds) {
    Rng rng = root.split(static_cast<std::uint64_t>(k));
    double worst_rel = 0.0, worst_abs = 0.0;
    for (int i = 0; i < cases; ++i) {
      const GradCheckResult g = grad_check(random_grad_case(rng, k));
      worst_rel = std::max(worst_rel, g.max_rel_error);
      worst_abs = std::max(worst_abs, g.max_abs_error);
    }
    per[std::string(to_string(k))] = {{"cases", cases}, {"max_rel_error", worst_rel}, {"max_abs_error", worst_abs}};
    r.at_most("grad_check." + std::string(to_string(k)), worst_rel, tol);
  }
  r.results["losses"] = per;
  return 0;
}

// ---------------------------------------------------------------------------
// loss identity-check

double max_dev(const LossOutput& a, const LossOutput& b) {
  double d = std::abs(a.value - b.value) / std::max(1.0, std::abs(b.value));
  for (std::size_t i = 0; i < a.grad.size(); ++i)
    d = std::max(d, std::abs(a.grad[i] - b.grad[i]) / std::max(1.0, std::abs(b.grad[i])));
  return d;
}

int cmd_identity_check(Report& r, std::uint64_t seed, int maps) {
  if (maps < 1) throw ParameterError("--maps must be >= 1");
  r.config = {{"seed", seed}, {"maps", maps}};
  Rng rng(Seed{seed}, Stream::gradcheck);

  double ladder_poly = 0, ladder_focal = 0, ladder_bce = 0, mu_dev = 0;
  double ga_min = 1.0, ga_max = 0.0;
  for (int m = 0; m < maps; ++m) {
    const std::size_t h = 2 + rng.below(6), w = 2 + rng.below(6);
    std::vector<double> p(h * w);
    std::vector<std::uint8_t> y(h * w);
    for (std::size_t i = 0; i < p.size(); ++i) {
      p[i] = rng.uniform(0.01, 0.99);
      y[i] = rng.uniform() < 0.4;
    }
    y[rng.below(y.size())] = 1;
    const ProbMap pred(h, w, std::move(p));
    const BinaryMask gt(h, w, std::move(y));

    AflParams prm;
    prm.gamma = rng.uniform(0.0, 5.0);
    prm.alpha = rng.uniform(0.0, 2.0);
    prm.delta = rng.uniform();
    const auto [full, d] = afl(pred, gt, prm);
    const PtMap pt = pt_map(pred, gt);
    double mean = 0.0;
    for (double v : pt.values()) mean += d.mu * std::pow(1.0 - v, d.gamma_d) * (1.0 + prm.delta * d.gamma_d);
    mu_dev = std::max(mu_dev, std::abs(mean / static_cast<double>(pt.size()) - 1.0));
    ga_min = std::min(ga_min, d.gamma_a);
    ga_max = std::max(ga_max, d.gamma_a);

    prm.ada_enabled = prm.agr_enabled = false;
    ladder_poly = std::max(ladder_poly, max_dev(afl(pred, gt, prm).first, poly(pred, gt, prm.gamma, prm.alpha)));
    prm.alpha = 0.0;
    ladder_focal = std::max(ladder_focal, max_dev(afl(pred, gt, prm).first, focal(pred, gt, prm.gamma)));
    prm.gamma = 0.0;
    ladder_bce = std::max(ladder_bce, max_dev(afl(pred, gt, prm).first, bce(pred, gt)));
  }

  double log_dev = 0.0, series_dev = 0.0;
  for (int k = 60; k <= 99; ++k) {
    const double pt = k / 100.0;
    log_dev = std::max(log_dev, std::abs(log_series(pt, 50) + std::log(pt)));
    series_dev = std::max(series_dev, std::abs(afl_grad_series(PtMap(1, 1, pt), 0.0, 0.0, 400)[0] - 1.0 / pt));
  }
  double cheb_const = 0.0;
  for (double c : {0.2, 0.5, 0.9, 1.0}) cheb_const = std::max(cheb_const, chebyshev_identity_check(PtMap(3, 3, c), 2.5));
  const double cheb_pair = chebyshev_identity_check(PtMap(1, 2, std::vector<double>{0.5, 1.0}), 2.0);
  const auto [worked, wd] = afl(ProbMap(1, 1, 0.5), BinaryMask(1, 1, std::uint8_t{1}));

  // Residual sweep over random maps, reported for inspection.
  json sweep = json::array();
  for (double gd : {0.0, 1.0, 2.0, 3.0}) {
    double acc = 0.0;
    for (int m = 0; m < 20; ++m) {
      std::vector<double> v(16);
      for (double& x : v) x = rng.uniform(0.05, 1.0);
      acc += chebyshev_identity_check(PtMap(4, 4, std::move(v)), gd);
    }
    sweep.push_back({{"gamma_d", gd}, {"mean_residual", acc / 20.0}});
  }

  r.at_most("ladder.afl_equals_poly", ladder_poly, 1e-12);
  r.at_most("ladder.afl_equals_focal", ladder_focal, 1e-12);
  r.at_most("ladder.afl_equals_bce", ladder_bce, 1e-12);
  r.at_most("mu.mean_identity", mu_dev, 1e-12);
  r.holds("gamma_a.in_unit_interval", ga_min >= 0.0 && ga_max <= 1.0);
  r.at_most("series.log_50_terms", log_dev, 1e-8);
  r.at_most("series.afl_to_inverse_pt", series_dev, 1e-6);
  r.at_most("chebyshev.constant_map", cheb_const, 0.0);
  r.at_most("chebyshev.two_pixel", std::abs(cheb_pair - 0.125), 1e-15);
  r.at_most("afl.worked_value", std::abs(worked.value - 0.4349619379), 1e-6);
  r.at_most("afl.worked_mu", std::abs(wd.mu - 2.8284271247), 1e-6);
  r.results = {{"ladder", {{"poly", ladder_poly}, {"focal", ladder_focal}, {"bce", ladder_bce}}},
               {"mu_max_deviation", mu_dev},
               {"gamma_a_range", {ga_min, ga_max}},
               {"series", {{"log_max_error", log_dev}, {"afl_max_error", series_dev}}},
               {"chebyshev", {{"constant", cheb_const}, {"two_pixel", cheb_pair}, {"sweep", sweep}}},
               {"worked_afl", {{"value", worked.value}, {"mu", wd.mu}, {"gamma_d", wd.gamma_d}}}};
  return 0;
}

// ---------------------------------------------------------------------------
// loss curve

int cmd_curve(Report& r, const std::string& gammas_s, const std::string& gamma_a_s, int points,
              double alpha, const std::string& out) {
  if (points < 2) throw ParameterError("--points must be >= 2");
  if (alpha < 0.0) throw ParameterError("--alpha must be >= 0");
  const auto gammas = parse_list(gammas_s, "--gamma");
  const auto gas = parse_list(gamma_a_s, "--gamma-a");
  for (double g : gammas) detail::check_gamma(g);
  for (double g : gas)
    if (g < 0.0 || g > 1.0) throw ParameterError("--gamma-a values must lie in [0, 1]");
  r.config = {{"gamma", gammas}, {"gamma_a", gas}, {"points", points}, {"alpha", alpha}, {"out", out}};

  std::ostringstream csv;
  csv.precision(17);
  csv << "gamma,gamma_a,gamma_d,pt,loss,grad,focal\n";
  std::size_t rows = 0;
  double worst_rise = 0.0, fl_dev = 0.0;
  for (double g : gammas)
    for (double ga : gas) {
      const double gd = g + ga;
      double prev = INFINITY;
      for (int k = 1; k <= points; ++k) {
        const double pt = static_cast<double>(k) / (points + 1);
        const LossOutput l = afl_with_coefficients(ProbMap(1, 1, pt), BinaryMask(1, 1, std::uint8_t{1}), gd, 1.0, alpha);
        const LossOutput f = poly(ProbMap(1, 1, pt), BinaryMask(1, 1, std::uint8_t{1}), g, alpha);
        csv << g << ',' << ga << ',' << gd << ',' << pt << ',' << l.value << ',' << -l.grad[0] << ','
            << f.value << '\n';
        if (ga == 0.0) fl_dev = std::max(fl_dev, std::abs(l.value - f.value));
        worst_rise = std::max(worst_rise, l.value - prev);
        prev = l.value;
        ++rows;
      }
    }
  io::write_atomic(out, csv.str());
  const std::size_t expected = gammas.size() * gas.size() * static_cast<std::size_t>(points);
  r.results = {{"file", out}, {"rows", rows}};
  r.at_most("curves_monotone_decreasing", worst_rise, 0.0);
  r.at_most("gamma_a_zero_matches_focal_family", fl_dev, 1e-12);
  r.holds("row_count", rows == expected);
  return 0;
}

// ---------------------------------------------------------------------------
// pt-plot

int cmd_pt_plot(Report& r, const std::string& pred_path, const std::string& gt_path, double eps,
                const std::string& out) {
  r.config = {{"pred", pred_path}, {"gt", gt_path}, {"eps_clip", eps}, {"out", out}};
  const PtMap pt = pt_map(io::read_prob_map(pred_path), io::read_pgm(gt_path), eps);
  io::write_pm(out, pt);
  const PtMap back = io::parse_pm<Confidence>(io::detail::read_all(out), out);
  double dev = 0.0;
  for (std::size_t i = 0; i < pt.size(); ++i) dev = std::max(dev, std::abs(pt[i] - back[i]));
  const auto [mn, mx] = std::minmax_element(pt.values().begin(), pt.values().end());
  const double mean = std::accumulate(pt.values().begin(), pt.values().end(), 0.0) / static_cast<double>(pt.size());
  r.results = {{"file", out}, {"height", pt.height()}, {"width", pt.width()},
               {"min", *mn},  {"max", *mx},            {"mean", mean}};
  r.at_most("reparse_roundtrip", dev, 0.0);
  return 0;
}

// ---------------------------------------------------------------------------
// match

double brute_force(const CostMatrix& c) {
  const bool rows_short = c.rows <= c.cols;
  const std::size_t k = std::min(c.rows, c.cols), big = std::max(c.rows, c.cols);
  std::vector<std::size_t> perm(big);
  std::iota(perm.begin(), perm.end(), 0);
  double best = INFINITY;
  do {
    double s = 0.0;
    for (std::size_t i = 0; i < k; ++i) s += rows_short ? c(i, perm[i]) : c(perm[i], i);
    best = std::min(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

json to_json(const MatchResult& m) {
  json a = json::array();
  for (std::size_t k = 0; k < m.assignment.size(); ++k)
    a.push_back({{"prediction", m.assignment[k].first}, {"gt", m.assignment[k].second}, {"cost", m.pair_costs[k]}});
  return {{"assignment", a}, {"unmatched_predictions", m.unmatched_predictions}, {"total_cost", m.total_cost}};
}

CostMatrix parse_costs(const json& j) {
  const json& rows = j.is_object() ? j.at("costs") : j;
  if (!rows.is_array() || rows.empty()) throw ParameterError("cost matrix must be a non-empty array of rows");
  CostMatrix c{rows.size(), rows.front().size(), {}};
  for (const auto& row : rows) {
    if (!row.is_array() || row.size() != c.cols) throw DimensionError("cost matrix rows must have equal length");
    for (const auto& v : row) {
      if (!v.is_number()) throw ParameterError("cost entries must be finite numbers");
      c.values.push_back(v.get<double>());
    }
  }
  return c;
}

// Files named <prefix><index><ext>, sorted by index.
std::vector<fs::path> indexed_files(const fs::path& dir, const std::string& prefix, const std::string& ext) {
  std::vector<std::pair<long, fs::path>> found;
  if (!fs::is_directory(dir)) throw io::ParseError(dir.string() + ": not a directory");
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (name.size() <= prefix.size() + ext.size() || name.rfind(prefix, 0) != 0 ||
        name.substr(name.size() - ext.size()) != ext)
      continue;
    const std::string mid = name.substr(prefix.size(), name.size() - prefix.size() - ext.size());
    if (mid.empty() || !std::all_of(mid.begin(), mid.end(), [](unsigned char ch) { return std::isdigit(ch); }))
      continue;
    found.emplace_back(std::stol(mid), e.path());
  }
  std::sort(found.begin(), found.end());
  std::vector<fs::path> out;
  for (auto& f : found) out.push_back(std::move(f.second));
  return out;
}

int cmd_match(Report& r, const std::string& costs_path, const std::string& dir) {
  if (costs_path.empty() == dir.empty()) throw ParameterError("pass exactly one of --costs or --instances");
  r.config = {{"costs", costs_path}, {"instances", dir}};
  CostMatrix cm;
  if (!costs_path.empty()) {
    cm = parse_costs(read_json(costs_path));
    const MatchResult m = hungarian(cm);
    r.results = to_json(m);
    r.holds("assignment_size", m.assignment.size() == std::min(cm.rows, cm.cols));
    if (std::max(cm.rows, cm.cols) <= 8) r.at_most("brute_force_optimal", std::abs(m.total_cost - brute_force(cm)), 1e-9);
    return 0;
  }

  std::vector<InstancePrediction> preds;
  std::vector<GroundTruthInstance> gts;
  for (const auto& p : indexed_files(dir, "pred_", ".pm")) preds.push_back({io::read_prob_map(p), {0.5, 0.5}});
  for (const auto& p : indexed_files(dir, "gt_", ".pgm")) gts.push_back({io::read_pgm(p), ClickClass::object});
  if (preds.empty()) throw ParameterError(dir + ": no pred_<i>.pm files");
  if (fs::exists(fs::path(dir) / "classes.json")) {
    const json c = read_json(fs::path(dir) / "classes.json");
    if (c.contains("pred_click_probs")) {
      const auto& probs = c.at("pred_click_probs");
      if (probs.size() != preds.size()) throw DimensionError("classes.json: one click distribution per prediction");
      for (std::size_t i = 0; i < preds.size(); ++i) preds[i].click_probs = probs[i].get<std::array<double, 2>>();
    }
    if (c.contains("gt_classes")) {
      const auto& cls = c.at("gt_classes");
      if (cls.size() != gts.size()) throw DimensionError("classes.json: one class per ground truth");
      for (std::size_t j = 0; j < gts.size(); ++j) {
        const std::string s = cls[j].get<std::string>();
        if (s != "object" && s != "unclick") throw ParameterError("classes.json: class must be object or unclick");
        gts[j].click_class = s == "object" ? ClickClass::object : ClickClass::unclick;
      }
    }
  }
  const TotalLoss t = total_loss(preds, gts);
  r.results = to_json(t.match);
  r.results["loss"] = {{"total", t.total},
                       {"mask_term", t.mask_term},
                       {"click_term", t.click_term},
                       {"unclick_term", t.unclick_term}};
  r.holds("assignment_size", t.match.assignment.size() == std::min(preds.size(), gts.size()));
  r.at_most("loss_breakdown_sums", std::abs(t.total - t.mask_term - t.click_term - t.unclick_term), 1e-9);
  return 0;
}

// ---------------------------------------------------------------------------
// attention demo

int cmd_attention(Report& r, std::size_t queries, std::size_t dim, std::vector<std::size_t> hw,
                  std::size_t blocks, std::uint64_t seed) {
  if (hw.size() != 2) throw ParameterError("--hw takes two values");
  r.config = {{"queries", queries}, {"dim", dim}, {"hw", hw}, {"blocks", blocks}, {"seed", seed}};
  SynthSpec spec;
  spec.height = hw[0];
  spec.width = hw[1];
  spec.shape_kind = ShapeKind::blob;
  spec.seed = Seed{seed};
  const SynthSample s = generate(spec);
  const BinaryMask& gt = s.gt_instances.front();
  std::vector<ClickRecord> clicks = {next_click(BinaryMask(gt.height(), gt.width(), std::uint8_t{0}), gt)};

  auto run = [&] {
    return camd_forward(build_pyramid(feature_channels(s), clicks, dim, Seed{seed}),
                        AttentionParams::random(queries, dim, Seed{seed}), blocks);
  };
  const ForwardResult a = run();
  const ForwardResult b = run();

  bool finite = true, identical = true;
  double row_dev = 0.0, masked_weight = 0.0;
  json layers = json::array();
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    const AttentionState& st = a.layers[l];
    identical = identical && st.x == b.layers[l].x && st.attention == b.layers[l].attention;
    std::size_t masked = 0;
    for (double v : st.x.data) finite = finite && std::isfinite(v);
    for (std::size_t q = 0; q < st.attention.rows; ++q) {
      double sum = 0.0;
      for (std::size_t j = 0; j < st.attention.cols; ++j) {
        const double w = st.attention(q, j);
        finite = finite && std::isfinite(w);
        if (st.attn_mask(q, j) == kNegInf) {
          ++masked;
          masked_weight = std::max(masked_weight, std::abs(w));
        }
        sum += w;
      }
      row_dev = std::max(row_dev, std::abs(sum - 1.0));
    }
    layers.push_back({{"layer", st.layer_index},
                      {"stride", kPyramidStrides[l % 3]},
                      {"attention_shape", {st.attention.rows, st.attention.cols}},
                      {"masked_fraction", static_cast<double>(masked) / static_cast<double>(st.attention.data.size())}});
  }
  json preds = json::array();
  for (const auto& p : a.predictions) {
    for (double v : p.mask.values()) finite = finite && std::isfinite(v);
    preds.push_back({{"shape", {p.mask.height(), p.mask.width()}},
                     {"click_probs", p.click_probs},
                     {"foreground_fraction", static_cast<double>(count_ones(binarize(p.mask))) / static_cast<double>(p.mask.size())}});
  }
  r.results = {{"clicks", json::array({{{"row", clicks[0].row}, {"col", clicks[0].col}, {"positive", clicks[0].positive}}})},
               {"layers", layers},
               {"predictions", preds}};
  r.holds("all_finite", finite);
  r.at_most("attention_rows_sum_to_one", row_dev, 1e-9);
  r.at_most("masked_weight_is_zero", masked_weight, 0.0);
  r.holds("rerun_bit_identical", identical);
  return 0;
}

// ---------------------------------------------------------------------------
// synth gen

const std::array<const char*, kFeatureChannels> kChannelNames = {"row", "col", "radial", "intensity"};

json write_sample(const SynthSample& s, const fs::path& dir) {
  ensure_dir(dir);
  json files = json::array();
  for (std::size_t i = 0; i < s.gt_instances.size(); ++i) {
    const fs::path p = dir / ("mask_" + std::to_string(i) + ".pgm");
    io::write_pgm(p, s.gt_instances[i]);
    files.push_back(p.filename().string());
  }
  for (std::size_t c = 0; c < kFeatureChannels; ++c) {
    const fs::path p = dir / ("feature_" + std::to_string(c) + ".pm");
    io::write_pm(p, s.features[c]);
    files.push_back(p.filename().string());
  }
  json inst = json::array();
  for (std::size_t i = 0; i < s.instances.size(); ++i) {
    const auto& in = s.instances[i];
    inst.push_back({{"mask", "mask_" + std::to_string(i) + ".pgm"},
                    {"cy", in.cy},
                    {"cx", in.cx},
                    {"radius", in.radius},
                    {"scale", in.scale},
                    {"area", count_ones(s.gt_instances[i])}});
  }
  write_json(dir / "metadata.json", {{"spec", to_json(s.spec)}, {"instances", inst}, {"channels", kChannelNames}});
  files.push_back("metadata.json");
  return files;
}

int cmd_synth(Report& r, const std::string& spec_path, std::optional<std::uint64_t> seed, const std::string& out) {
  const SynthSpec spec = load_spec(spec_path, seed);
  r.config = to_json(spec);
  r.config["out"] = out;
  const SynthSample s = generate(spec);
  r.results = {{"files", write_sample(s, out)}, {"instances", s.gt_instances.size()}};
  bool nonempty = true;
  for (const auto& m : s.gt_instances) nonempty = nonempty && count_ones(m) > 0;
  r.holds("instances_nonempty", nonempty);
  r.holds("instance_count", s.gt_instances.size() == spec.n_instances);
  return 0;
}

// ---------------------------------------------------------------------------
// train demo

json to_json(const PixelModel& m) {
  std::vector<std::string> inputs(kChannelNames.begin(), kChannelNames.end());
  inputs.push_back("positive_clicks");
  inputs.push_back("negative_clicks");
  return {{"weights", m.weights}, {"bias", m.bias}, {"click_radius", m.click_radius}, {"inputs", inputs}};
}

PixelModel read_model(const std::string& path) {
  const json j = read_json(path);
  PixelModel m;
  try {
    m.weights = j.at("weights").get<std::vector<double>>();
    m.bias = j.at("bias").get<double>();
    m.click_radius = j.value("click_radius", kDefaultClickRadius);
  } catch (const json::exception& e) {
    throw io::ParseError(path + ": invalid model: " + e.what());
  }
  if (m.weights.size() < 3) throw ParameterError(path + ": model needs at least one feature weight plus two click weights");
  return m;
}

struct TrainOpts {
  std::string spec;
  std::optional<std::uint64_t> seed;
  std::size_t steps = 500;
  double lr = 0.5;
  std::string optimizer = "adam";
  std::size_t instance = 0;
  std::string out;
  std::string compare;
};

int cmd_train(Report& r, const LossOpts& lo, const TrainOpts& o) {
  const SynthSpec spec = load_spec(o.spec, o.seed);
  TrainConfig cfg;
  cfg.loss = lo.config();
  cfg.steps = o.steps;
  cfg.learning_rate = o.lr;
  cfg.optimizer = o.optimizer == "sgd" ? Optimizer::sgd : Optimizer::adam;
  cfg.seed = spec.seed;
  cfg.instance = o.instance;
  r.config = {{"spec", to_json(spec)},
              {"loss", to_json(cfg.loss)},
              {"steps", o.steps},
              {"lr", o.lr},
              {"optimizer", o.optimizer},
              {"instance", o.instance},
              {"compare", o.compare},
              {"out", o.out}};
  ensure_dir(o.out);
  const SynthSample s = generate(spec);
  const fs::path dir(o.out);

  const TrainResult t = train(s, cfg);
  write_json(dir / "model.json", to_json(t.model));
  io::write_atomic(dir / "log.csv", log_csv(t.log));
  r.results = {{"final_iou", t.final_iou},
               {"final_loss", t.final_loss},
               {"steps", t.log.size()},
               {"files", {"model.json", "log.csv"}}};
  r.holds("final_loss_finite", std::isfinite(t.final_loss));
  r.holds("log_rows", t.log.size() == o.steps);

  if (!o.compare.empty()) {
    std::vector<LossConfig> losses;
    std::stringstream ss(o.compare);
    std::string name;
    while (std::getline(ss, name, ',')) {
      LossConfig c = cfg.loss;
      c.kind = parse_loss_kind(name);
      losses.push_back(c);
    }
    const auto rows = compare_losses(s, losses, cfg);
    std::ostringstream table;
    table.precision(17);
    table << "loss,final_iou,final_loss\n";
    json cmp = json::array();
    for (std::size_t i = 0; i < rows.size(); ++i) {
      table << rows[i].name << ',' << rows[i].final_iou << ',' << rows[i].final_loss << '\n';
      const std::string log_name = "log_" + std::to_string(i) + "_" + rows[i].name + ".csv";
      io::write_atomic(dir / log_name, log_csv(rows[i].log));
      cmp.push_back({{"loss", rows[i].name}, {"final_iou", rows[i].final_iou}, {"final_loss", rows[i].final_loss}, {"log", log_name}});
    }
    io::write_atomic(dir / "comparison.csv", table.str());
    r.results["comparison"] = cmp;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// noc run

struct DatasetItem {
  std::string name;
  NocSample sample;
};

std::vector<DatasetItem> load_dir_dataset(const fs::path& root) {
  auto load_one = [](const fs::path& dir, std::vector<DatasetItem>& out) {
    const auto masks = indexed_files(dir, "mask_", ".pgm");
    std::vector<Field> features;
    for (const auto& f : indexed_files(dir, "feature_", ".pm")) features.push_back(io::read_field(f));
    for (const auto& m : masks) {
      BinaryMask gt = io::read_pgm(m);
      std::vector<Field> feats = features;
      if (feats.empty()) feats.emplace_back(gt.height(), gt.width(), 0.0);
      for (const auto& f : feats) require_same_shape(f, gt, m.string().c_str());
      out.push_back({m.string(), {std::move(feats), std::move(gt)}});
    }
  };
  std::vector<DatasetItem> out;
  if (!fs::is_directory(root)) throw io::ParseError(root.string() + ": not a directory");
  if (!indexed_files(root, "mask_", ".pgm").empty()) {
    load_one(root, out);
  } else {
    std::vector<fs::path> subs;
    for (const auto& e : fs::directory_iterator(root))
      if (e.is_directory()) subs.push_back(e.path());
    std::sort(subs.begin(), subs.end());
    for (const auto& d : subs) load_one(d, out);
  }
  if (out.empty()) throw ParameterError(root.string() + ": no mask_<i>.pgm files found");
  return out;
}

std::vector<DatasetItem> synth_dataset(const std::string& arg, std::uint64_t seed) {
  std::vector<SynthSpec> specs;
  const bool numeric = !arg.empty() && std::all_of(arg.begin(), arg.end(), [](unsigned char c) { return std::isdigit(c); });
  if (numeric) {
    const std::size_t n = std::stoul(arg);
    if (n == 0) throw ParameterError("synth:<N> needs N >= 1");
    const std::array<ShapeKind, 3> kinds = {ShapeKind::disk, ShapeKind::ellipse, ShapeKind::blob};
    const Rng root(Seed{seed}, Stream::synthgen);
    for (std::size_t i = 0; i < n; ++i) {
      SynthSpec s;
      s.shape_kind = kinds[i % 3];
      s.n_instances = 1 + i % 3;
      s.boundary_noise = 0.5 * static_cast<double>(i % 4);
      s.seed = Seed{root.split(i).next_u64()};
      specs.push_back(s);
    }
  } else {
    specs.push_back(load_spec(arg, seed));
  }
  std::vector<DatasetItem> out;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const SynthSample s = generate(specs[i]);
    const auto samples = noc_samples(s);
    for (std::size_t k = 0; k < samples.size(); ++k)
      out.push_back({"synth_" + std::to_string(i) + "/instance_" + std::to_string(k), samples[k]});
  }
  return out;
}

int cmd_noc(Report& r, const std::string& predictor, const std::string& dataset, std::uint64_t seed,
            const std::string& out, std::size_t max_clicks) {
  if (max_clicks < 1 || max_clicks > kMaxClicks) throw ParameterError("--max-clicks must lie in [1, 20]");
  r.config = {{"predictor", predictor}, {"dataset", dataset}, {"seed", seed}, {"max_clicks", max_clicks}, {"out", out}};

  const std::vector<DatasetItem> items =
      dataset.rfind("synth:", 0) == 0 ? synth_dataset(dataset.substr(6), seed) : load_dir_dataset(dataset);

  std::function<Predictor(std::size_t)> make;
  if (predictor == "oracle") {
    make = [](std::size_t) { return make_oracle(); };
  } else if (predictor.rfind("noisy:", 0) == 0) {
    const double rate = parse_list(predictor.substr(6), "--predictor noisy:<rate>").at(0);
    if (!(rate >= 0.0 && rate <= 1.0)) throw ParameterError("noisy error rate must lie in [0, 1]");
    const Rng root(Seed{seed}, Stream::clicksim);
    make = [rate, root](std::size_t i) { return make_noisy_oracle(rate, Seed{root.split(i).next_u64()}); };
  } else if (predictor.rfind("trained:", 0) == 0) {
    const PixelModel m = read_model(predictor.substr(8));
    for (const auto& it : items)
      if (it.sample.features.size() + 2 != m.weights.size())
        throw ParameterError("model expects " + std::to_string(m.weights.size() - 2) + " feature channels, sample " +
                             it.name + " has " + std::to_string(it.sample.features.size()));
    make = [m](std::size_t) { return make_trained_predictor(m); };
  } else {
    throw ParameterError("unknown predictor '" + predictor + "' (oracle, noisy:<rate>, trained:<model.json>)");
  }

  std::vector<SimTrace> traces;
  json tj = json::array();
  std::size_t order_violations = 0;
  double iou_out_of_range = 0.0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const SimTrace t = run_noc(make(i), items[i].sample, max_clicks);
    order_violations += t.noc85 > t.noc90;
    for (double v : t.ious) iou_out_of_range = std::max({iou_out_of_range, -v, v - 1.0});
    json clicks = json::array();
    for (const auto& c : t.clicks)
      clicks.push_back({{"row", c.row}, {"col", c.col}, {"positive", c.positive}, {"index", c.index}});
    tj.push_back({{"sample", items[i].name},
                  {"clicks", clicks},
                  {"ious", t.ious},
                  {"noc85", t.noc85},
                  {"noc90", t.noc90},
                  {"failed85", t.failed85},
                  {"failed90", t.failed90}});
    traces.push_back(t);
  }
  const NocSummary s = summarize(traces);
  const json miou = s.miou;  // entry k-1 holds mIoU after k clicks
  const json summary = {{"samples", s.samples},          {"mean_noc85", s.mean_noc85}, {"mean_noc90", s.mean_noc90},
                        {"failures85", s.failures85},    {"failures90", s.failures90}, {"miou_at_k", miou}};
  write_json(out, {{"protocol_version", kProtocolVersion},
                   {"max_clicks", max_clicks},
                   {"predictor", predictor},
                   {"dataset", dataset},
                   {"seed", seed},
                   {"traces", tj},
                   {"summary", summary}});
  r.results = summary;
  r.results["trace_file"] = out;
  r.at_most("noc85_le_noc90", static_cast<double>(order_violations), 0.0);
  r.at_most("iou_in_unit_interval", std::max(0.0, iou_out_of_range), 0.0);
  return 0;
}

std::string join_args(int argc, char** argv) {
  std::string s;
  for (int i = 0; i < argc; ++i) {
    if (i) s += ' ';
    s += argv[i];
  }
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive focal loss toolkit: losses, matching, attention demo, synthetic data, training and NoC evaluation"};
  app.require_subcommand(1);
  Report report;
  report.command = join_args(argc, argv);
  std::string report_path;
  std::function<int()> run;

  auto add_report = [&](CLI::App* sub) {
    sub->add_option("--report", report_path, "Also write the run report to this file");
  };

  // loss ...
  auto* loss = app.add_subcommand("loss", "Loss evaluation and verification");
  loss->require_subcommand(1);

  LossOpts eval_opts;
  std::string eval_pred, eval_gt, eval_grad;
  auto* eval = loss->add_subcommand("eval", "Evaluate a loss on a (PM, PGM) pair");
  eval_opts.add(eval);
  eval->add_option("--pred", eval_pred, "Prediction map (PM)")->required();
  eval->add_option("--gt", eval_gt, "Ground-truth mask (PGM)")->required();
  eval->add_option("--grad-out", eval_grad, "Write dL/dp as a PM file");
  add_report(eval);
  eval->callback([&] { run = [&] { return cmd_loss_eval(report, eval_opts, eval_pred, eval_gt, eval_grad); }; });

  std::string gc_loss = "all";
  int gc_cases = 100;
  std::uint64_t gc_seed = 0;
  double gc_tol = 1e-5;
  auto* gc = loss->add_subcommand("grad-check", "Finite-difference check of every analytic gradient");
  gc->add_option("--loss", gc_loss, "Loss name or 'all'")->capture_default_str();
  gc->add_option("--cases", gc_cases, "Random cases per loss")->capture_default_str();
  gc->add_option("--seed", gc_seed, "PRNG seed")->required();
  gc->add_option("--tol", gc_tol, "Relative error tolerance")->capture_default_str();
  add_report(gc);
  gc->callback([&] { run = [&] { return cmd_grad_check(report, gc_loss, gc_cases, gc_seed, gc_tol); }; });

  std::uint64_t id_seed = 0;
  int id_maps = 100;
  auto* idc = loss->add_subcommand("identity-check", "Reduction ladder, mu identity, series and Chebyshev checks");
  idc->add_option("--seed", id_seed, "PRNG seed")->required();
  idc->add_option("--maps", id_maps, "Random maps")->capture_default_str();
  add_report(idc);
  idc->callback([&] { run = [&] { return cmd_identity_check(report, id_seed, id_maps); }; });

  std::string cv_gammas = "0,0.5,1,1.5,2,2.5,3", cv_ga = "0", cv_out;
  int cv_points = 99;
  double cv_alpha = 0.0;
  auto* curve = loss->add_subcommand("curve", "Per-pixel loss and gradient against pt over a gamma grid (CSV)");
  curve->add_option("--gamma", cv_gammas, "Comma-separated gamma values")->capture_default_str();
  curve->add_option("--gamma-a", cv_ga, "Comma-separated difficulty offsets")->capture_default_str();
  curve->add_option("--points", cv_points, "pt samples in (0, 1)")->capture_default_str();
  curve->add_option("--alpha", cv_alpha, "Poly coefficient")->capture_default_str();
  curve->add_option("--out", cv_out, "Output CSV")->required();
  add_report(curve);
  curve->callback([&] { run = [&] { return cmd_curve(report, cv_gammas, cv_ga, cv_points, cv_alpha, cv_out); }; });

  // pt-plot
  std::string pp_pred, pp_gt, pp_out;
  double pp_eps = kDefaultEpsClip;
  auto* pp = app.add_subcommand("pt-plot", "Write the per-pixel pt map as a PM file");
  pp->add_option("--pred", pp_pred, "Prediction map (PM)")->required();
  pp->add_option("--gt", pp_gt, "Ground-truth mask (PGM)")->required();
  pp->add_option("--eps-clip", pp_eps, "Lower clamp on pt")->capture_default_str();
  pp->add_option("--out", pp_out, "Output PM")->required();
  add_report(pp);
  pp->callback([&] { run = [&] { return cmd_pt_plot(report, pp_pred, pp_gt, pp_eps, pp_out); }; });

  // match
  std::string m_costs, m_dir;
  auto* match = app.add_subcommand("match", "Minimum-cost assignment of predictions to ground truths");
  match->add_option("--costs", m_costs, "JSON cost matrix (array of rows or {\"costs\": ...})");
  match->add_option("--instances", m_dir, "Directory with pred_<i>.pm, gt_<j>.pgm and optional classes.json");
  add_report(match);
  match->callback([&] { run = [&] { return cmd_match(report, m_costs, m_dir); }; });

  // attention demo
  auto* attention = app.add_subcommand("attention", "Toy clicks-aware masked-attention decoder");
  attention->require_subcommand(1);
  std::size_t at_q = 10, at_d = 16, at_blocks = 3;
  std::vector<std::size_t> at_hw = {64, 64};
  std::uint64_t at_seed = 0;
  auto* demo = attention->add_subcommand("demo", "Run the decoder on a synthetic sample and check its invariants");
  demo->add_option("--queries", at_q, "Number of queries")->capture_default_str();
  demo->add_option("--dim", at_d, "Feature dimension")->capture_default_str();
  demo->add_option("--hw", at_hw, "Image height and width")->expected(2)->capture_default_str();
  demo->add_option("--blocks", at_blocks, "Decoder blocks (3 layers each)")->capture_default_str();
  demo->add_option("--seed", at_seed, "PRNG seed")->required();
  add_report(demo);
  demo->callback([&] { run = [&] { return cmd_attention(report, at_q, at_d, at_hw, at_blocks, at_seed); }; });

  // synth gen
  auto* synth = app.add_subcommand("synth", "Synthetic segmentation samples");
  synth->require_subcommand(1);
  std::string sg_spec, sg_out;
  std::optional<std::uint64_t> sg_seed;
  auto* gen = synth->add_subcommand("gen", "Write masks, feature channels and metadata for one sample");
  gen->add_option("--spec", sg_spec, "Spec JSON (defaults apply to missing keys)");
  gen->add_option("--seed", sg_seed, "PRNG seed (overrides the spec)");
  gen->add_option("--out", sg_out, "Output directory")->required();
  add_report(gen);
  gen->callback([&] { run = [&] { return cmd_synth(report, sg_spec, sg_seed, sg_out); }; });

  // train demo
  auto* trainc = app.add_subcommand("train", "Pixel-model training");
  trainc->require_subcommand(1);
  LossOpts tr_loss;
  TrainOpts tr;
  auto* tdemo = trainc->add_subcommand("demo", "Train the logistic pixel model on a synthetic sample");
  tr_loss.add(tdemo);
  tdemo->add_option("--spec", tr.spec, "Spec JSON");
  tdemo->add_option("--seed", tr.seed, "PRNG seed (overrides the spec)");
  tdemo->add_option("--steps", tr.steps, "Optimizer steps")->capture_default_str();
  tdemo->add_option("--lr", tr.lr, "Learning rate")->capture_default_str();
  tdemo->add_option("--optimizer", tr.optimizer, "adam or sgd")->check(CLI::IsMember({"adam", "sgd"}))->capture_default_str();
  tdemo->add_option("--instance", tr.instance, "Target instance index")->capture_default_str();
  tdemo->add_option("--compare", tr.compare, "Comma-separated losses to train side by side");
  tdemo->add_option("--out", tr.out, "Output directory")->required();
  add_report(tdemo);
  tdemo->callback([&] { run = [&] { return cmd_train(report, tr_loss, tr); }; });

  // noc run
  auto* noc = app.add_subcommand("noc", "Click-simulation evaluation");
  noc->require_subcommand(1);
  std::string nc_pred = "oracle", nc_data, nc_out;
  std::uint64_t nc_seed = 0;
  std::size_t nc_max = kMaxClicks;
  auto* nrun = noc->add_subcommand("run", "Simulate clicks and report NoC85/NoC90 and mIoU@k");
  nrun->add_option("--predictor", nc_pred, "oracle | noisy:<rate> | trained:<model.json>")->capture_default_str();
  nrun->add_option("--dataset", nc_data, "<dir> | synth:<N> | synth:<spec.json>")->required();
  nrun->add_option("--seed", nc_seed, "PRNG seed")->required();
  nrun->add_option("--max-clicks", nc_max, "Click budget")->capture_default_str();
  nrun->add_option("--out", nc_out, "Trace JSON")->required();
  add_report(nrun);
  nrun->callback([&] { run = [&] { return cmd_noc(report, nc_pred, nc_data, nc_seed, nc_out, nc_max); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  auto input_error = [](const std::string& what) {
    std::cerr << "error: " << what << "\n";
    return 2;
  };
  try {
    run();
    const json j = report.to_json();
    if (!report_path.empty()) write_json(report_path, j);
    std::cout << j.dump(2) << "\n";
    if (!report.ok()) {
      for (const auto& c : report.checks)
        if (!c.pass) std::cerr << "invariant failed: " << c.name << " (measured " << c.measured << ", tolerance " << c.tolerance << ")\n";
      return 1;
    }
    return 0;
  } catch (const io::ParseError& e) {
    return input_error(e.what());
  } catch (const DimensionError& e) {
    return input_error(std::string("dimension error: ") + e.what());
  } catch (const ParameterError& e) {
    return input_error(std::string("parameter error: ") + e.what());
  } catch (const DomainError& e) {
    return input_error(std::string("domain error: ") + e.what());
  } catch (const GenerationError& e) {
    return input_error(std::string("generation error: ") + e.what());
  } catch (const json::exception& e) {
    return input_error(std::string("invalid JSON input: ") + e.what());
  } catch (const fs::filesystem_error& e) {
    return input_error(e.what());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
