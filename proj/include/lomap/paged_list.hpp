#pragma once

#include "lomap/types.hpp"

#include <cstdint>
#include <memory>
#include <unordered_map>
#include <vector>

namespace lomap {

/// Growable integer array indexed by Morton code, value -1 meaning unvisited.
/// The array has dense semantics (grow to max code, every cell readable) but
/// is backed by lazily materialized fixed-size pages so the code range can
/// span the full 63-bit Morton budget. Pages only materialize on writes of
/// non-default values; reads of untouched cells return -1.
class PagedIndexList {
 public:
  static constexpr uint32_t kPageBits = 16;
  static constexpr uint64_t kPageSize = 1ull << kPageBits;

  explicit PagedIndexList(uint64_t max_resident_bytes = 1ull << 30)
      : max_resident_bytes_(max_resident_bytes) {}

  uint64_t size() const { return size_; }

  /// Alg. 1 growth step: extend to at least new_size, new cells -1.
  void grow_to(uint64_t new_size) {
    if (new_size > size_) size_ = new_size;
  }

  int32_t get(uint64_t code) const {
    if (code >= size_) {
      throw Error("lookup list: code " + std::to_string(code) + " beyond length " +
                  std::to_string(size_));
    }
    auto it = pages_.find(code >> kPageBits);
    if (it == pages_.end()) return -1;
    return it->second[code & (kPageSize - 1)];
  }

  void set(uint64_t code, int32_t value) {
    if (code >= size_) {
      throw Error("lookup list: code " + std::to_string(code) + " beyond length " +
                  std::to_string(size_));
    }
    page(code >> kPageBits)[code & (kPageSize - 1)] = value;
  }

  uint64_t resident_bytes() const { return pages_.size() * kPageSize * sizeof(int32_t); }
  size_t page_count() const { return pages_.size(); }

  PagedIndexList clone() const {
    PagedIndexList copy(max_resident_bytes_);
    copy.size_ = size_;
    for (const auto& [id, data] : pages_) {
      auto page = std::vector<int32_t>(data);
      copy.pages_.emplace(id, std::move(page));
    }
    return copy;
  }

 private:
  std::vector<int32_t>& page(uint64_t page_id) {
    auto it = pages_.find(page_id);
    if (it != pages_.end()) return it->second;
    if (resident_bytes() + kPageSize * sizeof(int32_t) > max_resident_bytes_) {
      throw Error("lookup list: memory ceiling of " + std::to_string(max_resident_bytes_) +
                  " bytes exceeded (" + std::to_string(pages_.size()) + " pages resident)");
    }
    auto [ins, ok] = pages_.emplace(page_id, std::vector<int32_t>(kPageSize, -1));
    return ins->second;
  }

  uint64_t size_ = 0;
  uint64_t max_resident_bytes_;
  std::unordered_map<uint64_t, std::vector<int32_t>> pages_;
};

}  // namespace lomap
