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

#include "club/bidders.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace club {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double parse_signed(const std::string& s) {
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::invalid_argument("bad number: " + s);
  return v;
}

std::string signed_text(double v) {
  std::ostringstream os;
  os.precision(17);
  os << (v >= 0 ? "+" : "") << v;
  return os.str();
}

}  // namespace

BidderStrategy parse_strategy(const std::string& text) {
  if (text == "truthful") return Truthful{};
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw std::invalid_argument("unknown strategy: " + text);
  const std::string kind = text.substr(0, colon);
  const std::string arg = text.substr(colon + 1);
  try {
    if (kind == "shift") return ConstantShift{parse_signed(arg)};
    if (kind == "scaled") return HorizonScaledShift{parse_signed(arg)};
    if (kind == "early") {
      const auto at = arg.find('@');
      if (at == std::string::npos) throw std::invalid_argument("early strategy needs @episode");
      const int until = std::stoi(arg.substr(at + 1));
      if (until < 0) throw std::invalid_argument("early strategy episode must be >= 0");
      return EarlyManipulator{parse_signed(arg.substr(0, at)), until};
    }
  } catch (const std::logic_error&) {
    throw std::invalid_argument("malformed strategy: " + text);
  }
  throw std::invalid_argument("unknown strategy: " + text);
}

std::string strategy_to_string(const BidderStrategy& s) {
  return std::visit(Overloaded{
                        [](const Truthful&) { return std::string("truthful"); },
                        [](const ConstantShift& c) { return "shift:" + signed_text(c.delta); },
                        [](const EarlyManipulator& e) {
                          return "early:" + signed_text(e.delta) + "@" + std::to_string(e.until_episode);
                        },
                        [](const HorizonScaledShift& h) { return "scaled:" + signed_text(h.factor); },
                        [](const Custom&) { return std::string("custom"); },
                    },
                    s);
}

double strategy_shift(const BidderStrategy& s, const BidContext& ctx) {
  return std::visit(Overloaded{
                        [](const Truthful&) { return 0.0; },
                        [](const ConstantShift& c) { return c.delta; },
                        [&](const EarlyManipulator& e) {
                          return ctx.episode <= e.until_episode ? e.delta : 0.0;
                        },
                        [&](const HorizonScaledShift& h) {
                          return h.factor * 3.0 * ctx.H * std::sqrt(2.0 * ctx.N) /
                                 (ctx.K * std::sqrt(1.0 - ctx.gamma));
                        },
                        [](const Custom&) { return std::numeric_limits<double>::quiet_NaN(); },
                    },
                    s);
}

double make_bid(const BidderStrategy& s, const BidContext& ctx, double valuation,
                const BidHistory& history) {
  if (const auto* c = std::get_if<Custom>(&s)) {
    return std::max(0.0, c->bid(ctx, valuation, history));
  }
  return std::max(0.0, valuation + strategy_shift(s, ctx));
}

std::vector<double> make_bids(std::span<const BidderStrategy> strategies,
                              std::span<const double> valuations, const BidContext& ctx,
                              std::span<const BidHistory> histories) {
  if (strategies.size() != valuations.size()) throw std::invalid_argument("strategy count mismatch");
  static const BidHistory kEmpty;
  std::vector<double> bids(valuations.size());
  for (std::size_t i = 0; i < valuations.size(); ++i) {
    const BidHistory& h = i < histories.size() ? histories[i] : kEmpty;
    bids[i] = make_bid(strategies[i], ctx, valuations[i], h);
  }
  return bids;
}

void UtilityLedger::accrue(int episode, std::span<const double> valuations,
                           const AuctionOutcome& outcome, double gamma) {
  if (valuations.size() != discounted_.size() || outcome.q.size() != discounted_.size()) {
    throw std::invalid_argument("ledger size mismatch");
  }
  const double weight = std::pow(gamma, episode);
  for (std::size_t i = 0; i < discounted_.size(); ++i) {
    if (!outcome.q[i]) continue;
    const double u = valuations[i] - outcome.m[i];
    discounted_[i] += weight * u;
    auto& rows = raw_[i];
    if (!rows.empty() && rows.back().first == episode) rows.back().second += u;
    else rows.emplace_back(episode, u);
  }
}

double UtilityLedger::episode_utility(int i, int episode) const {
  for (const auto& [k, u] : raw_.at(i)) {
    if (k == episode) return u;
  }
  return 0.0;
}

}  // namespace club
