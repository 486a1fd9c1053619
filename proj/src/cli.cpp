#include "jetcalc/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <ostream>

#include "CLI11.hpp"
#include "jetcalc/io.hpp"

namespace jetcalc {

namespace {

using io::json;

class UsageError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

std::vector<double> parse_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t comma = text.find(',', pos);
    if (comma == std::string::npos) comma = text.size();
    const std::string item = text.substr(pos, comma - pos);
    char* end = nullptr;
    const double v = std::strtod(item.c_str(), &end);
    while (end && *end == ' ') ++end;
    if (item.empty() || end == item.c_str() || *end != '\0' || !std::isfinite(v))
      throw UsageError(std::string("cannot read ") + what + " '" + text + "'");
    out.push_back(v);
    pos = comma + 1;
  }
  return out;
}

std::vector<std::vector<double>> parse_points(const std::vector<std::string>& texts) {
  std::vector<std::vector<double>> pts;
  for (const auto& t : texts) pts.push_back(parse_list(t, "point"));
  for (const auto& p : pts)
    if (p.size() != pts.front().size()) throw UsageError("all --at points must have the same dimension");
  return pts;
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct Run {
  json body;
  json config = json::object();
  json inputs = json::array();
  std::optional<std::uint64_t> seed;
  int code = kExitOk;
};

json load_input(Run& run, const std::string& path) {
  std::string bytes;
  json j = io::read_json_file(path, &bytes);
  run.inputs.push_back({{"path", path}, {"sha256", io::sha256_hex(bytes)}});
  return j;
}

struct Options {
  std::string expr, file, out, u, v, mode = "generic", scales;
  std::vector<std::string> at;
  int order = -1, k_max = -1, jobs = 1, dimension = 2, samples = -1, trials = 8, working_order = 8,
      cert_order = -1;
  std::uint64_t seed = 0;
  double tol = -1.0;
  bool roundtrip = false;
};

ProbeConfig probe_config(const Options& o, Run& run) {
  ProbeConfig cfg;
  cfg.seed = o.seed;
  cfg.jobs = o.jobs;
  cfg.trials = o.trials;
  cfg.M = o.working_order;
  if (o.tol >= 0.0) cfg.rel_tol = o.tol;
  cfg.validate();
  run.seed = o.seed;
  run.config["trials"] = cfg.trials;
  run.config["working_order"] = cfg.M;
  run.config["rel_tol"] = cfg.rel_tol;
  run.config["amplitudes"] = cfg.amplitudes;
  run.config["jobs"] = cfg.jobs;
  return cfg;
}

Run cmd_prolong(const Options& o) {
  Run run;
  if (o.expr.empty() == o.file.empty()) throw UsageError("prolong needs exactly one of --expr or --file");
  if (o.at.size() != 1) throw UsageError("prolong needs one --at point");
  if (o.order < 0) throw UsageError("prolong needs --order >= 0");
  const auto x = parse_list(o.at.front(), "point");
  const int n = static_cast<int>(x.size());
  Section s;
  if (!o.expr.empty()) {
    s = Section::scalar(parse(o.expr, n), n);
    run.config["expr"] = o.expr;
  } else {
    s = io::section_from_json(load_input(run, o.file));
    if (s.dimension() != n) throw UsageError("--at has the wrong dimension for the section");
  }
  run.config["at"] = x;
  run.config["order"] = o.order;
  const auto jets = s.prolong(x, o.order);
  json js = json::array();
  for (const auto& J : jets) js.push_back(io::to_json(J));
  json indices = json::array();
  for (const auto& i : mi_enumerate(n, o.order)) indices.push_back(io::to_json(i));
  run.body = {{"kind", "prolong"}, {"point", x}, {"order", o.order}, {"indices", indices}, {"jets", js}};
  return run;
}

Run cmd_whitney_check(const Options& o) {
  Run run;
  if (o.file.empty()) throw UsageError("whitney-check needs --file");
  const JetFamily fam = io::family_from_json(load_input(run, o.file));
  const int m = o.order >= 0 ? o.order : fam.order / 2;
  const std::vector<double> scales = o.scales.empty() ? default_scales() : parse_list(o.scales, "scales");
  const double tol = o.tol >= 0.0 ? o.tol : 0.5;
  run.config = {{"m", m}, {"scales", scales}, {"tol", tol}, {"jobs", o.jobs}};
  const auto rep = check_taylor_condition(fam, m, scales, [tol](double) { return tol; }, o.jobs);
  run.body = io::to_json(rep);
  run.code = rep.holds() ? kExitOk : kExitVerdictNegative;
  return run;
}

Run cmd_cone_glue(const Options& o) {
  Run run;
  if (o.u.empty() || o.v.empty()) throw UsageError("cone-glue needs --u and --v");
  if (o.order < 0) throw UsageError("cone-glue needs --order >= 0");
  const int n = o.dimension;
  if (n < 2) throw UsageError("cone-glue needs --dimension >= 2");
  const Expression u = parse(o.u, n), v = parse(o.v, n);
  const int samples = o.samples >= 0 ? o.samples : 200;
  const int cert_order = o.cert_order >= 0 ? o.cert_order : std::min(o.order, 4);
  const double tol = o.tol >= 0.0 ? o.tol : 1e-12;
  run.seed = o.seed;
  run.config = {{"u", o.u}, {"v", o.v}, {"dimension", n}, {"order", o.order}, {"samples", samples},
                {"certificate_order", cert_order}, {"tol", tol}};
  const ConeGeometry geom{n};
  const ConeGlue f = cone_glue(u, v, geom, o.order);
  const Program pu(u), pv(v);
  auto agreement = [&](ConeRegion nappe, const Program& want) {
    double worst = 0.0;
    for (const auto& x : sample_nappe(geom, nappe, static_cast<std::size_t>(samples), o.seed))
      worst = std::max(worst, std::abs(f(x) - want.evaluate(x)));
    return worst;
  };
  const double e1 = agreement(ConeRegion::K1, pu);
  const double e2 = agreement(ConeRegion::K2, pv);
  const std::vector<double> apex(static_cast<std::size_t>(n), 0.0);
  const auto cert = smoothness_certificate(f, apex, cert_order);
  const bool ok = e1 <= tol && e2 <= tol && cert.passed;
  run.body = {{"kind", "cone_glue"},
              {"expression", f.expression.to_string()},
              {"cutoff", f.cutoff.to_string()},
              {"agreement",
               {{"K1", {{"samples", samples}, {"max_error", e1}}}, {"K2", {{"samples", samples}, {"max_error", e2}}}}},
              {"certificate", io::to_json(cert)},
              {"passed", ok}};
  run.code = ok ? kExitOk : kExitVerdictNegative;
  return run;
}

Run cmd_estimate_order(const Options& o) {
  Run run;
  if (o.file.empty()) throw UsageError("estimate-order needs --file");
  if (o.at.empty()) throw UsageError("estimate-order needs at least one --at point");
  const json spec = load_input(run, o.file);
  const OperatorHandle h = io::operator_from_json(spec);
  const auto points = parse_points(o.at);
  const ProbeConfig cfg = probe_config(o, run);
  const int k_max = o.k_max >= 0 ? o.k_max : cfg.M - 2;
  run.config["k_max"] = k_max;
  run.config["points"] = points;
  json verdicts = json::array();
  json column = json::array();
  bool all_determined = true;
  for (const auto& x : points) {
    const auto v = estimate_order(h, x, k_max, cfg);
    json vj = io::to_json(v);
    column.push_back(vj["estimated_order"]);
    verdicts.push_back(std::move(vj));
    all_determined = all_determined && v.order.has_value();
  }
  run.body = {{"kind", "order_estimate"}, {"operator", spec}, {"orders", column}, {"verdicts", verdicts}};
  run.code = all_determined ? kExitOk : kExitVerdictNegative;
  return run;
}

constexpr std::uint64_t kRoundTripTag = 0x726f756e64;

Run cmd_reconstruct(const Options& o) {
  Run run;
  if (o.file.empty()) throw UsageError("reconstruct needs --file");
  if (o.at.empty()) throw UsageError("reconstruct needs at least one --at point");
  if (o.order < 0) throw UsageError("reconstruct needs --order >= 0");
  if (o.mode != "generic" && o.mode != "linear") throw UsageError("--mode must be 'generic' or 'linear'");
  const json spec = load_input(run, o.file);
  const OperatorHandle h = io::operator_from_json(spec);
  const auto points = parse_points(o.at);
  const ProbeConfig cfg = probe_config(o, run);
  const int k = o.order;
  const int n = static_cast<int>(points.front().size());
  const int r = h.metadata().components;
  run.config["order"] = k;
  run.config["mode"] = o.mode;
  run.config["points"] = points;

  if (o.mode == "linear") {
    const auto rec = reconstruct_linear(h, points, k, cfg);
    run.body = io::to_json(rec);
    run.body["operator"] = spec;
    run.code = rec.linear ? kExitOk : kExitVerdictNegative;
    return run;
  }

  const auto indices = mi_enumerate(n, k);
  json table = json::array();
  for (const auto& x : points) {
    const Reconstruction P = reconstruct(h, x, k);
    std::vector<Jet> zero(static_cast<std::size_t>(r), Jet::zero(x, k));
    json units = json::array();
    for (int a = 0; a < r; ++a)
      for (std::size_t j = 0; j < indices.size(); ++j) {
        auto jets = zero;
        jets[static_cast<std::size_t>(a)].mutable_coeffs()[j] = 1.0;
        units.push_back(P(jets));
      }
    table.push_back({{"point", x}, {"at_zero_jet", P(zero)}, {"at_unit_jets", units}});
  }
  json indices_json = json::array();
  for (const auto& i : indices) indices_json.push_back(io::to_json(i));
  run.body = {{"kind", "reconstruction"}, {"mode", "generic"}, {"operator", spec},
              {"order", k},               {"indices", indices_json}, {"table", table}};

  if (o.roundtrip) {
    const int samples = o.samples >= 0 ? o.samples : 100;
    const double threshold = 1e-8;
    run.config["roundtrip_samples"] = samples;
    double worst = 0.0;
    for (int i = 0; i < samples; ++i) {
      const auto& x = points[static_cast<std::size_t>(i) % points.size()];
      Rng rng(o.seed, {kRoundTripTag, static_cast<std::uint64_t>(i)});
      const Section s = random_probe_section(n, r, cfg.M, x, rng, Box::around(x));
      const auto want = h(s, x);
      const auto got = reconstruct(h, x, k)(s.prolong(x, k));
      for (std::size_t c = 0; c < want.size(); ++c)
        worst = std::max(worst, std::abs(got.at(c) - want[c]) / (1.0 + std::abs(want[c])));
    }
    const bool ok = worst <= threshold;
    run.body["roundtrip"] = {{"samples", samples}, {"max_residual", worst}, {"threshold", threshold}, {"passed", ok}};
    run.code = ok ? kExitOk : kExitVerdictNegative;
  }
  return run;
}

void add_probe_flags(CLI::App* c, Options& o) {
  c->add_option("--seed", o.seed, "Seed for every random draw");
  c->add_option("--jobs", o.jobs, "Worker threads (0: one per core)");
  c->add_option("--trials", o.trials, "Trials per probe");
  c->add_option("--working-order", o.working_order, "Degree M of probe polynomials");
  c->add_option("--tol", o.tol, "Relative tolerance of probe comparisons");
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Jet calculus: prolongation, Whitney checks, extensions and operator probes", "jetcalc"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);
  Options o;

  auto* prolong_cmd = app.add_subcommand("prolong", "Jet of a section at a point");
  prolong_cmd->add_option("--expr", o.expr, "Scalar section as an expression in x1..xn");
  prolong_cmd->add_option("--file", o.file, "Section document");
  prolong_cmd->add_option("--at", o.at, "Base point, comma separated");
  prolong_cmd->add_option("--order", o.order, "Jet order")->required();

  auto* whitney_cmd = app.add_subcommand("whitney-check", "Taylor condition of a jet family");
  whitney_cmd->add_option("--file", o.file, "Jet family document")->required();
  whitney_cmd->add_option("--order", o.order, "Order m (default: family order / 2)");
  whitney_cmd->add_option("--scales", o.scales, "Scales, comma separated");
  whitney_cmd->add_option("--tol", o.tol, "Allowed modulus at every scale (default 0.5)");
  whitney_cmd->add_option("--jobs", o.jobs, "Worker threads (0: one per core)");

  auto* cone_cmd = app.add_subcommand("cone-glue", "Glue two functions across a cone");
  cone_cmd->add_option("--u", o.u, "Function kept on the upper nappe")->required();
  cone_cmd->add_option("--v", o.v, "Function kept on the lower nappe")->required();
  cone_cmd->add_option("--order", o.order, "Order m of jet agreement at the apex")->required();
  cone_cmd->add_option("--dimension", o.dimension, "Ambient dimension n (default 2)");
  cone_cmd->add_option("--samples", o.samples, "Samples per nappe (default 200)");
  cone_cmd->add_option("--cert-order", o.cert_order, "Certificate order at the apex (default min(m, 4))");
  cone_cmd->add_option("--tol", o.tol, "Agreement tolerance (default 1e-12)");
  cone_cmd->add_option("--seed", o.seed, "Sampling seed");

  auto* order_cmd = app.add_subcommand("estimate-order", "Order of a black-box operator at points");
  order_cmd->add_option("--file", o.file, "Operator document")->required();
  order_cmd->add_option("--at", o.at, "Probe point, comma separated; repeat for a sweep")->required();
  order_cmd->add_option("--k-max", o.k_max, "Largest order tested (default M - 2)");
  add_probe_flags(order_cmd, o);

  auto* rec_cmd = app.add_subcommand("reconstruct", "Finite-order operator behind a handle");
  rec_cmd->add_option("--file", o.file, "Operator document")->required();
  rec_cmd->add_option("--at", o.at, "Grid point, comma separated; repeatable")->required();
  rec_cmd->add_option("--order", o.order, "Jet order k")->required();
  rec_cmd->add_option("--mode", o.mode, "generic or linear");
  rec_cmd->add_flag("--check-roundtrip", o.roundtrip, "Compare the reconstruction with the handle on probes");
  rec_cmd->add_option("--samples", o.samples, "Round-trip probes (default 100)");
  add_probe_flags(rec_cmd, o);

  for (auto* c : {prolong_cmd, whitney_cmd, cone_cmd, order_cmd, rec_cmd})
    c->add_option("--out", o.out, "Write the report here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  const auto started = std::chrono::steady_clock::now();
  const std::string started_at = utc_now();
  std::string command;
  Run run;
  try {
    if (prolong_cmd->parsed()) {
      command = "prolong";
      run = cmd_prolong(o);
    } else if (whitney_cmd->parsed()) {
      command = "whitney-check";
      run = cmd_whitney_check(o);
    } else if (cone_cmd->parsed()) {
      command = "cone-glue";
      run = cmd_cone_glue(o);
    } else if (order_cmd->parsed()) {
      command = "estimate-order";
      run = cmd_estimate_order(o);
    } else {
      command = "reconstruct";
      run = cmd_reconstruct(o);
    }
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const PreconditionError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DomainError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const OverflowError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  json manifest = {{"command", command},
                   {"inputs", run.inputs},
                   {"seed", run.seed ? json(*run.seed) : json(nullptr)},
                   {"config", run.config},
                   {"tool_version", kToolVersion},
                   {"wall_clock", {{"started_at", started_at}, {"elapsed_seconds", elapsed}}}};
  const json doc = {{"manifest", manifest}, {"body", run.body}};
  const std::string text = doc.dump(2) + "\n";
  if (o.out.empty()) {
    out << text;
  } else {
    std::ofstream f(o.out, std::ios::binary);
    if (!f || !(f << text)) {
      err << "error: cannot write '" << o.out << "'\n";
      return kExitUsage;
    }
  }
  return run.code;
}

}  // namespace jetcalc
