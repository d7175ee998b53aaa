#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "infoplane/types.hpp"

namespace infoplane {

/// Counter-based generator keyed by (run seed, stream name, index).
///
/// Every draw is a pure function of the key and a draw counter, so two
/// streams with the same key produce identical sequences regardless of what
/// other streams were consumed in between.
class RandomStream {
 public:
  RandomStream(std::uint64_t run_seed, std::string_view stream, std::uint64_t index = 0);

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double normal();
  /// Uniform integer in [0, n).
  std::size_t below(std::size_t n);

  Matrix normal_matrix(Eigen::Index rows, Eigen::Index cols);
  Matrix uniform_matrix(Eigen::Index rows, Eigen::Index cols);
  std::vector<std::size_t> permutation(std::size_t n);

  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t mix64(std::uint64_t x);
std::uint64_t hash_name(std::string_view name);

}  // namespace infoplane
