#include "jetcalc/io.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <iterator>

namespace jetcalc::io {

namespace {

[[noreturn]] void bad(const std::string& where, const std::string& what) {
  throw SchemaError(where + ": " + what);
}

const json& field(const json& j, const char* key, const std::string& where) {
  if (!j.is_object()) bad(where, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) bad(where, std::string("missing field '") + key + "'");
  return *it;
}

int int_field(const json& j, const char* key, const std::string& where) {
  const json& v = field(j, key, where);
  if (!v.is_number_integer()) bad(where, std::string("field '") + key + "' must be an integer");
  return v.get<int>();
}

std::vector<double> number_array(const json& v, const std::string& where) {
  if (!v.is_array()) bad(where, "expected an array of numbers");
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& c : v) {
    if (!c.is_number()) bad(where, "expected an array of numbers");
    out.push_back(c.get<double>());
  }
  return out;
}

void expect_kind(const json& j, const char* kind, const std::string& where) {
  if (!j.is_object()) bad(where, "expected an object");
  auto it = j.find("kind");
  if (it != j.end() && *it != kind) bad(where, std::string("expected kind '") + kind + "'");
}

json number_or_null(const std::optional<int>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

json to_json(const MultiIndex& i) { return json(std::vector<int>(i.exponents().begin(), i.exponents().end())); }

json to_json(const Jet& j) {
  return {{"kind", "jet"}, {"dimension", j.dimension()}, {"order", j.order()}, {"base", j.base()}, {"coeffs", j.coeffs()}};
}

json to_json(const JetFamily& f) {
  json entries = json::array();
  for (const auto& e : f.entries) entries.push_back(to_json(e));
  json out{{"kind", "jet_family"}, {"dimension", f.dimension}, {"order", f.order}, {"entries", entries}};
  if (f.limit) out["limit"] = to_json(*f.limit);
  return out;
}

json to_json(const Section& s) {
  std::vector<std::string> comps;
  for (const auto& c : s.components()) comps.push_back(c.to_string());
  return {{"kind", "section"},
          {"dimension", s.dimension()},
          {"components", comps},
          {"domain", {{"lo", s.domain().lo}, {"hi", s.domain().hi}}}};
}

json to_json(const CertificateReport& r) {
  json entries = json::array();
  for (const auto& e : r.entries)
    entries.push_back({{"index", to_json(e.index)},
                       {"estimates", e.estimates},
                       {"gaps", e.gaps},
                       {"bounds", e.bounds},
                       {"pass", e.pass}});
  return {{"order", r.order},
          {"passed", r.passed},
          {"first_failing_order", number_or_null(r.first_failing_order)},
          {"entries", entries}};
}

json to_json(const WhitneyReport& r) {
  json entries = json::array();
  for (const auto& e : r.entries) {
    json scales = json::array();
    for (const auto& s : e.scales)
      scales.push_back({{"delta", s.delta},
                        {"modulus", s.modulus},
                        {"tolerance", s.tolerance},
                        {"vacuous", s.vacuous},
                        {"holds", s.holds},
                        {"pairs", s.pairs},
                        {"witness", s.vacuous ? json(nullptr)
                                              : json{{"from", s.witness_from}, {"to", s.witness_to}}}});
    entries.push_back({{"index", to_json(e.index)}, {"scales", scales}});
  }
  json holds = json::array();
  for (std::size_t s = 0; s < r.scales.size(); ++s) holds.push_back(r.holds_at(s));
  return {{"kind", "whitney_report"},
          {"m", r.m},
          {"scales", r.scales},
          {"holds", r.holds()},
          {"holds_at", holds},
          {"entries", entries}};
}

json to_json(const ProbeVerdict& v) {
  json trials = json::array();
  for (const auto& t : v.trials)
    trials.push_back({{"trial", t.trial},
                      {"valid", t.valid},
                      {"failed", t.failed},
                      {"differences", t.differences},
                      {"tolerance", t.tolerance},
                      {"perturbation", t.perturbation}});
  return {{"status", to_string(v.status)},
          {"valid_trials", v.valid_trials},
          {"witness", v.witness ? json(*v.witness) : json(nullptr)},
          {"trials", trials}};
}

json to_json(const OrderVerdict& v) {
  json levels = json::array();
  for (const auto& L : v.levels)
    levels.push_back({{"k", L.k},
                      {"raw", to_string(L.raw)},
                      {"status", to_string(L.status)},
                      {"witness_trial", L.witness_trial ? json(*L.witness_trial) : json(nullptr)},
                      {"witness", L.witness},
                      {"demoted_by", number_or_null(L.demoted_by)}});
  json estimate;
  if (v.order)
    estimate = *v.order;
  else if (v.exceeds)
    estimate = "exceeds k_max";
  else
    estimate = "inconclusive";
  return {{"kind", "order_verdict"},
          {"point", v.point},
          {"k_max", v.k_max},
          {"seed", v.seed},
          {"estimated_order", estimate},
          {"levels", levels}};
}

json to_json(const RegularityReport& r) {
  json comps = json::array();
  for (const auto& c : r.components) comps.push_back(to_json(c));
  return {{"passed", r.passed()}, {"components", comps}};
}

json to_json(const LinearReconstruction& r) {
  json indices = json::array();
  for (const auto& i : r.indices) indices.push_back(to_json(i));
  json table = json::array();
  for (const auto& e : r.table) table.push_back({{"point", e.point}, {"coefficients", e.coefficients}});
  json witness = nullptr;
  if (r.witness) {
    const auto& w = *r.witness;
    witness = {{"grid_index", w.grid_index}, {"alpha", w.alpha},       {"beta", w.beta},
               {"s1", w.s1},                 {"s2", w.s2},             {"combined", w.combined},
               {"separate", w.separate},     {"residual", w.residual}, {"tolerance", w.tolerance}};
  }
  return {{"kind", "linear_table"},
          {"order", r.k},
          {"seed", r.seed},
          {"indices", indices},
          {"table", table},
          {"linear", r.linear},
          {"flagged", !r.linear},
          {"max_residual", r.max_residual},
          {"witness", witness}};
}

Jet jet_from_json(const json& j) {
  const std::string where = "jet";
  expect_kind(j, "jet", where);
  const int m = int_field(j, "order", where);
  const auto base = number_array(field(j, "base", where), where + ".base");
  const auto coeffs = number_array(field(j, "coeffs", where), where + ".coeffs");
  if (base.empty()) bad(where, "base point must have dimension >= 1");
  if (j.contains("dimension") && j.at("dimension") != static_cast<int>(base.size()))
    bad(where, "dimension does not match the base point");
  if (m < 0) bad(where, "order must be >= 0");
  if (coeffs.size() != mi_count(static_cast<int>(base.size()), m))
    bad(where, "expected " + std::to_string(mi_count(static_cast<int>(base.size()), m)) + " coefficients");
  return Jet(base, m, coeffs);
}

JetFamily family_from_json(const json& j) {
  const std::string where = "jet_family";
  expect_kind(j, "jet_family", where);
  JetFamily f;
  f.dimension = int_field(j, "dimension", where);
  f.order = int_field(j, "order", where);
  const json& entries = field(j, "entries", where);
  if (!entries.is_array() || entries.empty()) bad(where, "entries must be a non-empty array");
  for (const auto& e : entries) f.entries.push_back(jet_from_json(e));
  if (j.contains("limit") && !j.at("limit").is_null()) f.limit = jet_from_json(j.at("limit"));
  try {
    f.validate();
  } catch (const PreconditionError& e) {
    bad(where, e.what());
  }
  return f;
}

Section section_from_json(const json& j) {
  const std::string where = "section";
  expect_kind(j, "section", where);
  const int n = int_field(j, "dimension", where);
  if (n < 1) bad(where, "dimension must be >= 1");
  const json& comps = field(j, "components", where);
  if (!comps.is_array() || comps.empty()) bad(where, "components must be a non-empty array of strings");
  std::vector<Expression> exprs;
  for (const auto& c : comps) {
    if (!c.is_string()) bad(where, "components must be strings");
    exprs.push_back(parse(c.get<std::string>(), n));
  }
  std::optional<Box> domain;
  if (j.contains("domain")) {
    const json& d = j.at("domain");
    Box b{number_array(field(d, "lo", where + ".domain"), where + ".domain.lo"),
          number_array(field(d, "hi", where + ".domain"), where + ".domain.hi")};
    if (b.dimension() != n || static_cast<int>(b.hi.size()) != n) bad(where, "domain has the wrong dimension");
    for (int i = 0; i < n; ++i)
      if (!(b.lo[static_cast<std::size_t>(i)] < b.hi[static_cast<std::size_t>(i)])) bad(where, "domain needs lo < hi");
    domain = std::move(b);
  }
  return Section(n, std::move(exprs), std::move(domain));
}

OperatorHandle operator_from_json(const json& j) {
  const std::string where = "operator";
  if (!j.is_object()) bad(where, "expected an object");
  const json& kind = field(j, "kind", where);
  if (kind == "jet_operator") {
    const int n = j.contains("dimension") ? int_field(j, "dimension", where) : 1;
    const int r = j.contains("components") ? int_field(j, "components", where) : 1;
    const int k = int_field(j, "order", where);
    const json& exprs = field(j, "exprs", where);
    if (!exprs.is_array() || exprs.empty()) bad(where, "exprs must be a non-empty array of strings");
    std::vector<std::string> texts;
    for (const auto& e : exprs) {
      if (!e.is_string()) bad(where, "exprs must be strings");
      texts.push_back(e.get<std::string>());
    }
    if (n < 1 || r < 1 || k < 0) bad(where, "need dimension >= 1, components >= 1, order >= 0");
    return from_jet_operator(JetOperator::parse(n, r, k, texts));
  }
  if (kind == "catalog") {
    const json& name = field(j, "name", where);
    if (!name.is_string()) bad(where, "name must be a string");
    const json params = j.contains("params") ? j.at("params") : json::object();
    if (!params.is_object()) bad(where, "params must be an object");
    try {
      return catalog_make(name.get<std::string>(), params);
    } catch (const ParseError&) {
      throw;
    } catch (const PreconditionError& e) {
      bad(where, e.what());
    }
  }
  bad(where, "kind must be 'jet_operator' or 'catalog'");
}

json read_json_file(const std::string& path, std::string* bytes) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot read '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw SchemaError("'" + path + "' is not valid JSON");
  if (bytes) *bytes = std::move(text);
  return j;
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 computation failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 15]);
  }
  return out;
}

}  // namespace jetcalc::io
