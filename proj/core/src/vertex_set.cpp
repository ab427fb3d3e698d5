#include "jtsmc/vertex_set.hpp"

#include <ostream>
#include <sstream>
#include <stdexcept>

namespace jtsmc {

namespace {

VertexSet::Mask bit_of(VertexId v) {
  if (v.value < 1 || v.value > kMaxOrder) {
    throw std::out_of_range("vertex label " + std::to_string(v.value) + " outside 1.." +
                            std::to_string(kMaxOrder));
  }
  return VertexSet::Mask{1} << (v.value - 1);
}

}  // namespace

VertexSet::VertexSet(std::initializer_list<int> labels) {
  for (int v : labels) bits_ |= bit_of(VertexId(v));
}

VertexSet VertexSet::range(int p) {
  if (p < 0 || p > kMaxOrder) throw std::out_of_range("graph order out of range");
  return from_mask(p == 64 ? ~Mask{0} : (Mask{1} << p) - 1);
}

VertexSet VertexSet::singleton(VertexId v) { return from_mask(bit_of(v)); }

bool VertexSet::contains(VertexId v) const {
  if (v.value < 1 || v.value > kMaxOrder) return false;
  return (bits_ >> (v.value - 1)) & 1U;
}

void VertexSet::insert(VertexId v) { bits_ |= bit_of(v); }
void VertexSet::erase(VertexId v) { bits_ &= ~bit_of(v); }

std::vector<int> VertexSet::labels() const {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(size()));
  for (VertexId v : *this) out.push_back(v.value);
  return out;
}

std::string VertexSet::to_string() const {
  std::ostringstream os;
  os << *this;
  return os.str();
}

std::ostream& operator<<(std::ostream& os, VertexSet s) {
  os << '{';
  bool first = true;
  for (VertexId v : s) {
    if (!first) os << ',';
    os << v.value;
    first = false;
  }
  return os << '}';
}

}  // namespace jtsmc
