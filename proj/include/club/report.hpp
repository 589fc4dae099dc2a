// Copyright 2026 The CLUB Auction Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "club/harness.hpp"
#include "club/oracle.hpp"

namespace club {

inline constexpr std::string_view kLedgerHeader =
    "episode,k_tilde,in_buffer,used_pi_rand,lie_episode,policy_value,optimal_value,suboptimality,"
    "cum_regret,delta_bucket";

// Reals are printed with %.17g so a read-back is exact.
void write_ledger_csv(std::ostream& os, const std::vector<LedgerRow>& rows);
// Inverse of write_ledger_csv. Columns absent from the file (truthful_value)
// are set equal to policy_value. Throws std::runtime_error on malformed input.
std::vector<LedgerRow> read_ledger_csv(std::istream& is);

nlohmann::json summary_to_json(const RunSummary& s);

inline constexpr std::string_view kSweepHeader =
    "K,seed,final_regret,buffer_count,update_count,forced_buffers,buffer_episodes,pi_rand_episodes,"
    "lie_episodes,k_bound_violations,fhat_sup_error,fhat_samples";

void write_sweep_csv(std::ostream& os, const SweepResult& r);
// (K, final_regret) pairs from a sweep CSV.
std::vector<std::pair<long, double>> read_sweep_regrets(std::istream& is);
nlohmann::json sweep_to_json(const SweepResult& r);

struct PlotSeries {
  std::vector<double> x;
  std::vector<double> y;
};

// Log-log scatter with polyline and, if given, the fitted power law.
std::string render_loglog_svg(const PlotSeries& data, const std::optional<SlopeFit>& fit, const std::string& title,
                              const std::string& xlabel, const std::string& ylabel);

// Shallow well-formedness check: balanced tags, single <svg> root.
bool svg_well_formed(std::string_view svg);

}  // namespace club
