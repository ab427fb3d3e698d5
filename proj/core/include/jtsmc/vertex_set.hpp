#pragma once

#include <bit>
#include <compare>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <iosfwd>
#include <iterator>
#include <string>
#include <vector>

namespace jtsmc {

/// Largest supported graph order. Vertex sets are stored as one machine word.
inline constexpr int kMaxOrder = 64;

/// A vertex label in 1..p.
struct VertexId {
  int value = 0;

  constexpr VertexId() = default;
  constexpr explicit VertexId(int v) : value(v) {}

  friend constexpr auto operator<=>(VertexId, VertexId) = default;
};

/// Sorted set of vertices backed by a 64-bit mask (bit v-1 holds vertex v).
///
/// Equality, ordering and hashing are structural. The total order used for
/// canonical forms is the numeric order of the mask; iteration is always
/// ascending by label.
class VertexSet {
 public:
  using Mask = std::uint64_t;

  class iterator {
   public:
    using iterator_category = std::forward_iterator_tag;
    using value_type = VertexId;
    using difference_type = std::ptrdiff_t;
    using pointer = void;
    using reference = VertexId;

    constexpr iterator() = default;
    constexpr explicit iterator(Mask rest) : rest_(rest) {}

    constexpr VertexId operator*() const { return VertexId(std::countr_zero(rest_) + 1); }
    constexpr iterator& operator++() {
      rest_ &= rest_ - 1;
      return *this;
    }
    constexpr iterator operator++(int) {
      iterator old = *this;
      ++*this;
      return old;
    }
    friend constexpr bool operator==(iterator, iterator) = default;

   private:
    Mask rest_ = 0;
  };

  constexpr VertexSet() = default;
  VertexSet(std::initializer_list<int> labels);

  static constexpr VertexSet from_mask(Mask m) {
    VertexSet s;
    s.bits_ = m;
    return s;
  }
  /// {1, ..., p}
  static VertexSet range(int p);
  static VertexSet singleton(VertexId v);

  constexpr Mask mask() const { return bits_; }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr int size() const { return std::popcount(bits_); }
  bool contains(VertexId v) const;
  constexpr bool subset_of(VertexSet other) const { return (bits_ & ~other.bits_) == 0; }
  constexpr bool intersects(VertexSet other) const { return (bits_ & other.bits_) != 0; }

  void insert(VertexId v);
  void erase(VertexId v);

  /// Smallest / largest member; undefined on the empty set.
  VertexId front() const { return VertexId(std::countr_zero(bits_) + 1); }
  VertexId back() const { return VertexId(64 - std::countl_zero(bits_)); }

  constexpr iterator begin() const { return iterator(bits_); }
  constexpr iterator end() const { return iterator(0); }

  std::vector<int> labels() const;
  std::string to_string() const;

  friend constexpr VertexSet operator|(VertexSet a, VertexSet b) { return from_mask(a.bits_ | b.bits_); }
  friend constexpr VertexSet operator&(VertexSet a, VertexSet b) { return from_mask(a.bits_ & b.bits_); }
  friend constexpr VertexSet operator-(VertexSet a, VertexSet b) { return from_mask(a.bits_ & ~b.bits_); }
  constexpr VertexSet& operator|=(VertexSet o) {
    bits_ |= o.bits_;
    return *this;
  }
  constexpr VertexSet& operator&=(VertexSet o) {
    bits_ &= o.bits_;
    return *this;
  }
  constexpr VertexSet& operator-=(VertexSet o) {
    bits_ &= ~o.bits_;
    return *this;
  }

  friend constexpr bool operator==(VertexSet, VertexSet) = default;
  friend constexpr auto operator<=>(VertexSet a, VertexSet b) { return a.bits_ <=> b.bits_; }

 private:
  Mask bits_ = 0;
};

std::ostream& operator<<(std::ostream& os, VertexSet s);

}  // namespace jtsmc

template <>
struct std::hash<jtsmc::VertexSet> {
  std::size_t operator()(jtsmc::VertexSet s) const noexcept { return std::hash<std::uint64_t>{}(s.mask()); }
};
