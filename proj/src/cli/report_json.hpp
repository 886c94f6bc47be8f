#pragma once

#include <json.hpp>

#include "dem/envelope.hpp"
#include "dem/verifier.hpp"

namespace dem::cli {

using nlohmann::json;

// Non-finite doubles serialize as null.
json to_json(const TheoremParams& p);
json to_json(const ProbabilityBound& bound);
json to_json(const CooperativityWitness& witness);
json to_json(const CooperativityReport& report);
json to_json(const AuditFailure& failure);
json to_json(const VerificationReport& report);
json to_json(const ComparisonReport& report);

}  // namespace dem::cli
