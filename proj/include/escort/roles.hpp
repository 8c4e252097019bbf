#pragma once

#include <cstddef>
#include <vector>

namespace escort {

/// Which agent plays which part. Agent order is VIP, bodyguards, bystanders.
struct RoleAssignment {
  std::size_t vip_index = 0;
  std::vector<std::size_t> bodyguard_indices;
  std::vector<std::size_t> bystander_indices;
  std::size_t vip_goal_landmark = 0;
  std::vector<std::size_t> bystander_waypoints;  // parallel to bystander_indices

  bool is_bodyguard(std::size_t agent) const {
    for (std::size_t b : bodyguard_indices)
      if (b == agent) return true;
    return false;
  }

  friend bool operator==(const RoleAssignment&, const RoleAssignment&) = default;
};

}  // namespace escort
