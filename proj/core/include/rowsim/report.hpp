#pragma once

#include <string>

#include "rowsim/contract_verifier.hpp"
#include "rowsim/engine.hpp"
#include "rowsim/sizing.hpp"

namespace rowsim {

std::string compliance_to_json(const ComplianceReport& report);
/// One line per check, failing checks first named with their measured value and limit.
std::string compliance_to_text(const ComplianceReport& report);

std::string sizing_to_json(const SizingReport& report);
std::string sizing_to_text(const SizingReport& report);

/// Markers, protection actions, FLISR plans, DRU engagements and the energy ledger.
std::string events_to_json(const SimResult& result);

}  // namespace rowsim
