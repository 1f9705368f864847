#ifndef ASCLTSIM_GRID_HPP
#define ASCLTSIM_GRID_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "ascltsim/errors.hpp"

namespace ascltsim {

// Index rectangle R_n = {1..n1} x {1..n2}. All site coordinates are 1-based.

struct Site {
  int i1 = 1;
  int i2 = 1;

  friend bool operator==(Site a, Site b) { return a.i1 == b.i1 && a.i2 == b.i2; }
  friend bool operator!=(Site a, Site b) { return !(a == b); }
  // Componentwise partial order (the paper's i <= j).
  friend bool leq(Site a, Site b) { return a.i1 <= b.i1 && a.i2 <= b.i2; }
};

struct GridSize {
  int n1 = 0;
  int n2 = 0;

  std::int64_t sites() const { return static_cast<std::int64_t>(n1) * n2; }
  bool contains(Site s) const { return s.i1 >= 1 && s.i1 <= n1 && s.i2 >= 1 && s.i2 <= n2; }
  bool positive() const { return n1 >= 1 && n2 >= 1; }

  friend bool operator==(GridSize a, GridSize b) { return a.n1 == b.n1 && a.n2 == b.n2; }
  friend bool operator!=(GridSize a, GridSize b) { return !(a == b); }
  friend bool leq(GridSize a, GridSize b) { return a.n1 <= b.n1 && a.n2 <= b.n2; }
};

inline std::string to_string(GridSize n) {
  return std::to_string(n.n1) + "x" + std::to_string(n.n2);
}

// Axis-aligned rectangle of sites, inclusive bounds.
struct Rect {
  int lo1 = 1, hi1 = 1, lo2 = 1, hi2 = 1;

  std::int64_t sites() const {
    return static_cast<std::int64_t>(hi1 - lo1 + 1) * (hi2 - lo2 + 1);
  }
  bool valid() const { return lo1 >= 1 && lo2 >= 1 && hi1 >= lo1 && hi2 >= lo2; }
  bool contains(Site s) const {
    return s.i1 >= lo1 && s.i1 <= hi1 && s.i2 >= lo2 && s.i2 <= hi2;
  }
  bool overlaps(const Rect& o) const {
    return lo1 <= o.hi1 && o.lo1 <= hi1 && lo2 <= o.hi2 && o.lo2 <= hi2;
  }
};

// Dense row-major storage over R_n with 1-based accessors.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(GridSize n, T fill = T{}) : n_(n), data_(static_cast<std::size_t>(n.sites()), fill) {
    if (!n.positive()) throw DomainError("Grid: size must be >= 1x1, got " + to_string(n));
  }

  GridSize size() const { return n_; }
  bool empty() const { return data_.empty(); }

  T& operator()(int i1, int i2) { return data_[index(i1, i2)]; }
  const T& operator()(int i1, int i2) const { return data_[index(i1, i2)]; }
  T& operator()(Site s) { return (*this)(s.i1, s.i2); }
  const T& operator()(Site s) const { return (*this)(s.i1, s.i2); }

  const std::vector<T>& data() const { return data_; }
  std::vector<T>& data() { return data_; }

  friend bool operator==(const Grid& a, const Grid& b) {
    return a.n_ == b.n_ && a.data_ == b.data_;
  }

 private:
  std::size_t index(int i1, int i2) const {
    return static_cast<std::size_t>(i1 - 1) * n_.n2 + static_cast<std::size_t>(i2 - 1);
  }

  GridSize n_{};
  std::vector<T> data_;
};

// Parses "N1xN2" (e.g. "64x64"); both components must be positive.
GridSize parse_grid_size(const std::string& text);

}  // namespace ascltsim

#endif
