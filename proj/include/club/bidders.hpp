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

#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "club/auction.hpp"

namespace club {

// What a bidder remembers about its own past rounds. Bidders never see the
// other bidders' bids.
struct BidRecord {
  double valuation = 0.0;
  double bid = 0.0;
  double threshold = 0.0;  // m_i
  int won = 0;
};
using BidHistory = std::vector<BidRecord>;

// Quantities some strategies scale against.
struct BidContext {
  int episode = 1;  // k, 1-based
  int step = 0;     // h, 0-based
  int K = 1;
  int H = 1;
  int N = 1;
  double gamma = 0.9;
};

struct Truthful {};
// Bid v + delta, clamped at zero.
struct ConstantShift {
  double delta = 0.0;
};
// Shift by delta while episode <= until_episode, truthful afterwards.
struct EarlyManipulator {
  double delta = 0.0;
  int until_episode = 0;
};
// Shift by factor * 3H sqrt(2N) / (K sqrt(1 - gamma)): deviations that shrink
// with the horizon at the rate a rational bidder is held to.
struct HorizonScaledShift {
  double factor = 0.0;
};
struct Custom {
  std::function<double(const BidContext&, double valuation, const BidHistory&)> bid;
};

using BidderStrategy = std::variant<Truthful, ConstantShift, EarlyManipulator, HorizonScaledShift, Custom>;

// "truthful", "shift:+0.3", "early:+0.5@200", "scaled:+1.0".
BidderStrategy parse_strategy(const std::string& text);
std::string strategy_to_string(const BidderStrategy& s);

// The additive deviation this strategy applies in the given context, or
// nullopt-like NaN for Custom strategies that are not a plain shift.
double strategy_shift(const BidderStrategy& s, const BidContext& ctx);

double make_bid(const BidderStrategy& s, const BidContext& ctx, double valuation,
                const BidHistory& history);
std::vector<double> make_bids(std::span<const BidderStrategy> strategies,
                              std::span<const double> valuations, const BidContext& ctx,
                              std::span<const BidHistory> histories);

// Per-bidder discounted utility sum_k gamma^k (v - m) q and raw per-episode
// utility.
class UtilityLedger {
 public:
  explicit UtilityLedger(int bidders) : discounted_(bidders, 0.0), raw_(bidders) {}

  void accrue(int episode, std::span<const double> valuations, const AuctionOutcome& outcome,
              double gamma);

  double discounted(int i) const { return discounted_.at(i); }
  // Raw (undiscounted) utility of bidder i in the given episode; 0 if none.
  double episode_utility(int i, int episode) const;
  int bidders() const { return static_cast<int>(discounted_.size()); }

 private:
  std::vector<double> discounted_;
  std::vector<std::vector<std::pair<int, double>>> raw_;
};

}  // namespace club
