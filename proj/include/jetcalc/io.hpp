#pragma once

// JSON documents for jets, families, sections, operators and reports. The
// layouts are described in docs/schemas.md.

#include <string>
#include <string_view>

#include "json.hpp"
#include "jetcalc/error.hpp"
#include "jetcalc/jet.hpp"
#include "jetcalc/operator.hpp"
#include "jetcalc/peetre.hpp"
#include "jetcalc/whitney.hpp"

namespace jetcalc::io {

using nlohmann::json;

/// An input document does not match its schema.
class SchemaError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

json to_json(const MultiIndex& i);
json to_json(const Jet& j);
json to_json(const JetFamily& f);
json to_json(const Section& s);
json to_json(const CertificateReport& r);
json to_json(const WhitneyReport& r);
json to_json(const ProbeVerdict& v);
json to_json(const OrderVerdict& v);
json to_json(const RegularityReport& r);
json to_json(const LinearReconstruction& r);

Jet jet_from_json(const json& j);
JetFamily family_from_json(const json& j);
Section section_from_json(const json& j);
/// {"kind": "jet_operator", ...} or {"kind": "catalog", "name": ..., "params": {...}}.
OperatorHandle operator_from_json(const json& j);

/// Reads and parses a JSON file; the raw bytes are returned through `bytes`.
json read_json_file(const std::string& path, std::string* bytes = nullptr);

/// Lower-case hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view bytes);

}  // namespace jetcalc::io
