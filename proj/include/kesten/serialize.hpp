#pragma once

#include <cstdint>
#include <string>

#include "kesten/extremes.hpp"
#include "kesten/model.hpp"
#include "kesten/simulate.hpp"
#include "kesten/spectral.hpp"

// JSON report payloads.  All numbers are emitted with 17 significant digits
// so envelopes round-trip losslessly.
namespace kesten::io {

std::string diagnostics_json(const ModelDiagnostics& d);
std::string spectral_json(const SpectralSolution& s);
std::string constants_json(const ConstantsReport& r);
std::string tail_json(const TailReport& r);
std::string passage_json(const PassageLawReport& r);
std::string extremal_json(const ExtremalIndexReport& r);
std::string conditioned_json(const ConditionedPathReport& r);
std::string empirical_json(const EmpiricalLawReport& r);
std::string renewal_json(const RenewalCheckReport& r);
std::string overjump_json(const OverjumpData& d);

/// Wraps a payload in the result envelope {command, config_hash, seed,
/// wall_time_s, version, payload}.
std::string envelope(const std::string& command, std::uint64_t config_hash, std::uint64_t seed,
                     double wall_time_s, const std::string& payload_json);

/// FNV-1a over the canonical config string.
std::uint64_t config_hash(const std::string& canonical);

/// Trajectory CSV: header step,V_1..V_d,S,logZ,event with '.' decimals and
/// '\n' line endings.
std::string trajectory_csv(const Trajectory& t, const ModelSpec& spec);

std::string scaled_times_csv(const PassageLawReport& r);
std::string overjump_csv(const OverjumpData& d);
std::string tail_csv(const TailReport& r);

}  // namespace kesten::io
