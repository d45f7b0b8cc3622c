#pragma once

#include <algorithm>
#include <optional>
#include <vector>

namespace mucalc {

// Reward order on priorities: p ⊑ q iff p is at least as good for Player
// Diamond as q. 0 ⊏ 2 ⊏ 4 ⊏ ... ⊏ 5 ⊏ 3 ⊏ 1. Total.
inline bool reward_leq(int p, int q) {
  bool pe = (p % 2) == 0, qe = (q % 2) == 0;
  if (pe && !qe) return true;
  if (!pe && qe) return false;
  return pe ? p <= q : p >= q;
}
inline bool reward_lt(int p, int q) { return p != q && reward_leq(p, q); }

// A profile maps exit keys to the worst priority Player Box can force on the
// way there. Key meaning is contextual: game node ids for partial parity
// games, packed (anchor, closure element) pairs on the formula route.
struct ProfileEntry {
  int key;
  int priority;
  friend bool operator==(const ProfileEntry&, const ProfileEntry&) = default;
};

struct Profile {
  std::vector<ProfileEntry> entries;  // sorted by key, at most one entry per key

  void set_worst(int key, int priority);  // keep the ⊑-maximal (worst) value
  std::optional<int> lookup(int key) const;
  void sort_entries();

  friend bool operator==(const Profile&, const Profile&) = default;
  bool operator<(const Profile& o) const;  // arbitrary total order for set layouts
};

// y ⊑ z iff every entry of y is matched in z by a ⊑-worse-or-equal one.
bool profile_leq(const Profile& y, const Profile& z);
inline bool profile_lt(const Profile& y, const Profile& z) { return profile_leq(y, z) && !(y == z); }

// ⊑-minimal antichain of a set of profiles.
struct PType {
  std::vector<Profile> profiles;  // sorted, pairwise ⊑-incomparable

  void insert(const Profile& p);  // keeps the set a minimal antichain
  bool contains_leq(const Profile& p) const;  // some member ⊑ p
  friend bool operator==(const PType&, const PType&) = default;
  bool operator<(const PType& o) const { return profiles < o.profiles; }
};

} // namespace mucalc
