#pragma once

#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "binsim/core.hpp"

namespace binsim {

// Handle to a contiguous bit range inside a BitLedger.
struct RegionHandle {
  std::uint64_t offset = 0;
  std::uint64_t width = 0;
  std::uint32_t id = 0;
};

// A hard bit budget. Every piece of state a memory-bounded policy keeps
// between rounds must live in one of these; exceeding the budget throws
// instead of growing. Regions are never deallocated: algorithms that move
// or reset state rewrite region contents in place.
class BitLedger {
 public:
  explicit BitLedger(std::uint64_t capacity_bits)
      : capacity_(capacity_bits), words_((capacity_bits + 63) / 64, 0) {}

  RegionHandle alloc(std::uint64_t width, std::string label) {
    if (width > capacity_ - used_)
      throw std::length_error("bit ledger: allocation of " + std::to_string(width) +
                              " bits exceeds remaining budget (" +
                              std::to_string(capacity_ - used_) + " of " +
                              std::to_string(capacity_) + " left)");
    RegionHandle h{used_, width, static_cast<std::uint32_t>(labels_.size())};
    used_ += width;
    labels_.push_back(std::move(label));
    regions_.push_back(h);
    return h;
  }

  std::uint64_t bits_used() const { return used_; }
  std::uint64_t capacity() const { return capacity_; }

  // Values are stored LSB-first inside the region: bit i of the value goes
  // to region bit offset_in_region + i.
  void write_uint(const RegionHandle& r, std::uint64_t offset_in_region, unsigned width,
                  std::uint64_t value) {
    check_span(r, offset_in_region, width);
    if (width < 64 && (value >> width) != 0)
      throw std::invalid_argument("bit ledger: value does not fit in " + std::to_string(width) +
                                  " bits");
    std::uint64_t pos = r.offset + offset_in_region;
    for (unsigned i = 0; i < width; ++i, ++pos) {
      std::uint64_t bit = (value >> i) & 1u;
      std::uint64_t word = pos >> 6, at = pos & 63;
      words_[word] = (words_[word] & ~(1ull << at)) | (bit << at);
    }
  }

  std::uint64_t read_uint(const RegionHandle& r, std::uint64_t offset_in_region,
                          unsigned width) const {
    check_span(r, offset_in_region, width);
    std::uint64_t value = 0;
    std::uint64_t pos = r.offset + offset_in_region;
    for (unsigned i = 0; i < width; ++i, ++pos)
      value |= ((words_[pos >> 6] >> (pos & 63)) & 1u) << i;
    return value;
  }

  // Single-bit fast paths for bitmap-style regions.
  bool get_bit(const RegionHandle& r, std::uint64_t idx) const {
    if (idx >= r.width) throw std::out_of_range("bit ledger: bit index outside region");
    std::uint64_t pos = r.offset + idx;
    return (words_[pos >> 6] >> (pos & 63)) & 1u;
  }

  void set_bit(const RegionHandle& r, std::uint64_t idx, bool value) {
    if (idx >= r.width) throw std::out_of_range("bit ledger: bit index outside region");
    std::uint64_t pos = r.offset + idx;
    std::uint64_t mask = 1ull << (pos & 63);
    if (value)
      words_[pos >> 6] |= mask;
    else
      words_[pos >> 6] &= ~mask;
  }

  void clear_region(const RegionHandle& r) {
    for (std::uint64_t i = 0; i < r.width; ++i) set_bit(r, i, false);
  }

  std::uint64_t popcount_region(const RegionHandle& r) const {
    std::uint64_t total = 0;
    for (std::uint64_t i = 0; i < r.width; ++i) total += get_bit(r, i);
    return total;
  }

  // Hex words plus the region table; for failure forensics.
  std::string debug_dump() const {
    std::ostringstream os;
    os << "capacity=" << capacity_ << " used=" << used_ << "\n";
    for (std::size_t i = 0; i < regions_.size(); ++i)
      os << "  region " << i << " [" << regions_[i].offset << ", "
         << regions_[i].offset + regions_[i].width << ") " << labels_[i] << "\n";
    os << "  words:";
    os << std::hex;
    for (std::uint64_t w : words_) os << " " << w;
    os << std::dec << "\n";
    return os.str();
  }

 private:
  void check_span(const RegionHandle& r, std::uint64_t offset_in_region, unsigned width) const {
    if (width > 64) throw std::invalid_argument("bit ledger: field width above 64 bits");
    if (offset_in_region > r.width || width > r.width - offset_in_region)
      throw std::out_of_range("bit ledger: access outside region bounds");
  }

  std::uint64_t capacity_;
  std::uint64_t used_ = 0;
  std::vector<std::uint64_t> words_;
  std::vector<RegionHandle> regions_;
  std::vector<std::string> labels_;
};

// Unary load encoding: for each bin in order, one zero-bit per ball, with a
// single one-bit separating consecutive bins. A vector of n bins holding b
// balls always encodes to exactly n + b - 1 bits.
inline std::string unary_encode(const LoadVector& loads) {
  if (loads.size() == 0) throw std::invalid_argument("unary: need at least one bin");
  std::string bits;
  bits.reserve(loads.size() + loads.placed() - 1);
  for (std::size_t i = 0; i < loads.size(); ++i) {
    if (i) bits.push_back('1');
    bits.append(loads[i], '0');
  }
  return bits;
}

inline LoadVector unary_decode(std::string_view bits, std::size_t n) {
  if (n == 0) throw std::invalid_argument("unary: need at least one bin");
  std::vector<std::uint32_t> counts(n, 0);
  std::size_t bin = 0;
  for (char c : bits) {
    if (c == '0') {
      ++counts[bin];
    } else if (c == '1') {
      if (++bin >= n) throw std::runtime_error("unary: too many separators for bin count");
    } else {
      throw std::runtime_error("unary: invalid character in bit string");
    }
  }
  if (bin + 1 != n) throw std::runtime_error("unary: expected exactly n-1 separators");
  return LoadVector::from_counts(std::move(counts));
}

}  // namespace binsim
