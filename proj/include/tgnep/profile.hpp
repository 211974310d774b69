#pragma once

#include <stdexcept>
#include <utility>
#include <vector>

#include "tgnep/fnspace.hpp"

namespace tgnep {

// One strategy block per player, all on a shared grid.
class StrategyProfile {
 public:
  StrategyProfile() = default;

  explicit StrategyProfile(std::vector<Trajectory> blocks)
      : blocks_(std::move(blocks)) {
    if (blocks_.empty())
      throw std::invalid_argument("StrategyProfile: need at least one block");
    for (const auto& b : blocks_)
      if (!(b.grid() == blocks_.front().grid()))
        throw ShapeError("StrategyProfile: blocks disagree on the grid");
  }

  int player_count() const { return static_cast<int>(blocks_.size()); }
  const TimeGrid& grid() const { return blocks_.front().grid(); }

  const Trajectory& block(int nu) const { return blocks_.at(nu); }
  const std::vector<Trajectory>& blocks() const { return blocks_; }

  StrategyProfile with_block(int nu, Trajectory t) const {
    if (!(t.grid() == grid()) || t.dim() != blocks_.at(nu).dim())
      throw ShapeError("with_block: replacement has wrong shape");
    StrategyProfile out = *this;
    out.blocks_[nu] = std::move(t);
    return out;
  }

  void set_block(int nu, Trajectory t) {
    if (!(t.grid() == grid()) || t.dim() != blocks_.at(nu).dim())
      throw ShapeError("set_block: replacement has wrong shape");
    blocks_[nu] = std::move(t);
  }

  bool operator==(const StrategyProfile&) const = default;

 private:
  std::vector<Trajectory> blocks_;
};

// Everybody's strategy except one player's own block. Owns a snapshot of the
// full profile, so it stays valid independent of the source profile.
class Rivals {
 public:
  Rivals(StrategyProfile full, int skip)
      : full_(std::move(full)), skip_(skip) {
    if (skip < 0 || skip >= full_.player_count())
      throw std::invalid_argument("Rivals: skip index out of range");
  }

  // Index in the original numbering; the skipped player is not accessible.
  const Trajectory& block(int nu) const {
    if (nu == skip_)
      throw std::invalid_argument("Rivals: asked for the skipped player's block");
    return full_.block(nu);
  }

  int player_count() const { return full_.player_count(); }
  int skipped() const { return skip_; }
  const TimeGrid& grid() const { return full_.grid(); }

 private:
  StrategyProfile full_;
  int skip_;
};

inline std::pair<Trajectory, Rivals> split(const StrategyProfile& x, int nu) {
  return {x.block(nu), Rivals(x, nu)};
}

inline StrategyProfile merge(const Rivals& rivals, Trajectory own) {
  std::vector<Trajectory> blocks;
  blocks.reserve(rivals.player_count());
  for (int nu = 0; nu < rivals.player_count(); ++nu)
    blocks.push_back(nu == rivals.skipped() ? std::move(own) : rivals.block(nu));
  return StrategyProfile(std::move(blocks));
}

}  // namespace tgnep
