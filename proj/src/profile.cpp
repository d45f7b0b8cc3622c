#include "mucalc/profile.hpp"

namespace mucalc {

void Profile::set_worst(int key, int priority) {
  for (auto& e : entries) {
    if (e.key == key) {
      if (reward_lt(e.priority, priority)) e.priority = priority;
      return;
    }
  }
  entries.push_back({key, priority});
  sort_entries();
}

std::optional<int> Profile::lookup(int key) const {
  for (const auto& e : entries) {
    if (e.key == key) return e.priority;
  }
  return std::nullopt;
}

void Profile::sort_entries() {
  std::sort(entries.begin(), entries.end(),
            [](const ProfileEntry& a, const ProfileEntry& b) { return a.key < b.key; });
}

bool Profile::operator<(const Profile& o) const {
  return std::lexicographical_compare(
      entries.begin(), entries.end(), o.entries.begin(), o.entries.end(),
      [](const ProfileEntry& a, const ProfileEntry& b) {
        return a.key != b.key ? a.key < b.key : a.priority < b.priority;
      });
}

bool profile_leq(const Profile& y, const Profile& z) {
  for (const auto& e : y.entries) {
    auto p = z.lookup(e.key);
    if (!p || !reward_leq(e.priority, *p)) return false;
  }
  return true;
}

void PType::insert(const Profile& p) {
  for (const auto& q : profiles) {
    if (profile_leq(q, p)) return;  // dominated or duplicate
  }
  profiles.erase(std::remove_if(profiles.begin(), profiles.end(),
                                [&](const Profile& q) { return profile_lt(p, q); }),
                 profiles.end());
  profiles.push_back(p);
  std::sort(profiles.begin(), profiles.end());
}

bool PType::contains_leq(const Profile& p) const {
  for (const auto& q : profiles) {
    if (profile_leq(q, p)) return true;
  }
  return false;
}

} // namespace mucalc
