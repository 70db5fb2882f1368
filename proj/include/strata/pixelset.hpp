#pragma once

// Sparse integer pixel sets stored as sorted scanlines of disjoint,
// non-touching inclusive spans.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace strata {

/// Largest coordinate magnitude a Shape may hold.
inline constexpr std::int64_t kCoordLimit = std::int64_t{1} << 30;

struct Span {
  std::int32_t start = 0;  // inclusive
  std::int32_t end = 0;    // inclusive

  std::int64_t length() const { return std::int64_t{end} - start + 1; }
  friend bool operator==(const Span&, const Span&) = default;
};

struct Scanline {
  std::int32_t y = 0;
  std::vector<Span> spans;

  friend bool operator==(const Scanline&, const Scanline&) = default;
};

/// Inclusive integer rectangle.
struct Rect {
  std::int32_t x0 = 0, y0 = 0, x1 = -1, y1 = -1;

  bool empty() const { return x1 < x0 || y1 < y0; }
  std::int32_t width() const { return empty() ? 0 : x1 - x0 + 1; }
  std::int32_t height() const { return empty() ? 0 : y1 - y0 + 1; }
  friend bool operator==(const Rect&, const Rect&) = default;
};

namespace detail {

inline void check_coord(std::int64_t v) {
  if (v < -kCoordLimit || v > kCoordLimit) {
    throw std::out_of_range("pixel coordinate " + std::to_string(v) +
                            " outside representable range");
  }
}

// Sorts and coalesces overlapping or touching spans in place.
inline void normalize_spans(std::vector<Span>& spans) {
  if (spans.size() < 2) return;
  std::sort(spans.begin(), spans.end(),
            [](const Span& a, const Span& b) { return a.start < b.start; });
  std::size_t out = 0;
  for (std::size_t i = 1; i < spans.size(); ++i) {
    Span& cur = spans[out];
    const Span& next = spans[i];
    if (std::int64_t{next.start} <= std::int64_t{cur.end} + 1) {
      cur.end = std::max(cur.end, next.end);
    } else {
      spans[++out] = next;
    }
  }
  spans.resize(out + 1);
}

inline std::vector<Span> intersect_spans(const std::vector<Span>& a,
                                         const std::vector<Span>& b) {
  std::vector<Span> out;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const std::int32_t lo = std::max(a[i].start, b[j].start);
    const std::int32_t hi = std::min(a[i].end, b[j].end);
    if (lo <= hi) out.push_back({lo, hi});
    if (a[i].end < b[j].end) {
      ++i;
    } else {
      ++j;
    }
  }
  return out;
}

inline std::vector<Span> unite_spans(const std::vector<Span>& a,
                                     const std::vector<Span>& b) {
  std::vector<Span> out;
  out.reserve(a.size() + b.size());
  std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out),
             [](const Span& l, const Span& r) { return l.start < r.start; });
  normalize_spans(out);
  return out;
}

inline std::vector<Span> subtract_spans(const std::vector<Span>& a,
                                        const std::vector<Span>& b) {
  std::vector<Span> out;
  std::size_t j = 0;
  for (const Span& s : a) {
    std::int64_t cur = s.start;
    while (j < b.size() && b[j].end < cur) ++j;
    std::size_t k = j;
    while (k < b.size() && b[k].start <= s.end) {
      if (b[k].start > cur) {
        out.push_back({static_cast<std::int32_t>(cur), b[k].start - 1});
      }
      cur = std::max<std::int64_t>(cur, std::int64_t{b[k].end} + 1);
      if (b[k].end > s.end) break;
      ++k;
    }
    if (cur <= s.end) out.push_back({static_cast<std::int32_t>(cur), s.end});
  }
  return out;
}

}  // namespace detail

/// A set of pixel coordinates. Always held in canonical form, so two shapes
/// with the same members compare equal structurally.
class Shape {
 public:
  Shape() = default;

  /// Filled inclusive rectangle; empty when x1 < x0 or y1 < y0.
  static Shape from_rect(std::int64_t x0, std::int64_t y0, std::int64_t x1,
                         std::int64_t y1) {
    Shape s;
    if (x1 < x0 || y1 < y0) return s;
    detail::check_coord(x0);
    detail::check_coord(y0);
    detail::check_coord(x1);
    detail::check_coord(y1);
    s.rows_.reserve(static_cast<std::size_t>(y1 - y0 + 1));
    for (std::int64_t y = y0; y <= y1; ++y) {
      s.rows_.push_back({static_cast<std::int32_t>(y),
                         {{static_cast<std::int32_t>(x0),
                           static_cast<std::int32_t>(x1)}}});
    }
    return s;
  }

  static Shape from_rect(const Rect& r) {
    return from_rect(r.x0, r.y0, r.x1, r.y1);
  }

  /// Builds a shape from arbitrary rows (any order, overlapping spans, empty
  /// rows and repeated y values allowed).
  static Shape from_rows(std::vector<Scanline> rows) {
    std::sort(rows.begin(), rows.end(),
              [](const Scanline& a, const Scanline& b) { return a.y < b.y; });
    Shape s;
    for (auto& row : rows) {
      if (row.spans.empty()) continue;
      for (const Span& sp : row.spans) {
        if (sp.start > sp.end) throw std::invalid_argument("span start > end");
      }
      if (!s.rows_.empty() && s.rows_.back().y == row.y) {
        auto& dst = s.rows_.back().spans;
        dst.insert(dst.end(), row.spans.begin(), row.spans.end());
      } else {
        s.rows_.push_back(std::move(row));
      }
    }
    for (auto& row : s.rows_) detail::normalize_spans(row.spans);
    return s;
  }

  const std::vector<Scanline>& scanlines() const { return rows_; }
  bool empty() const { return rows_.empty(); }

  std::int64_t area() const {
    std::int64_t n = 0;
    for (const auto& row : rows_) {
      for (const auto& sp : row.spans) n += sp.length();
    }
    return n;
  }

  std::size_t span_count() const {
    std::size_t n = 0;
    for (const auto& row : rows_) n += row.spans.size();
    return n;
  }

  std::size_t byte_size() const {
    return sizeof(Shape) + rows_.size() * sizeof(Scanline) +
           span_count() * sizeof(Span);
  }

  /// Row with the given y, or nullptr.
  const Scanline* row(std::int32_t y) const {
    auto it = std::lower_bound(
        rows_.begin(), rows_.end(), y,
        [](const Scanline& r, std::int32_t v) { return r.y < v; });
    if (it == rows_.end() || it->y != y) return nullptr;
    return &*it;
  }

  bool contains(std::int64_t x, std::int64_t y) const {
    if (y < -kCoordLimit || y > kCoordLimit) return false;
    const Scanline* r = row(static_cast<std::int32_t>(y));
    if (r == nullptr) return false;
    auto it = std::upper_bound(
        r->spans.begin(), r->spans.end(), x,
        [](std::int64_t v, const Span& s) { return v < s.start; });
    if (it == r->spans.begin()) return false;
    --it;
    return x <= it->end;
  }

  std::optional<Rect> bounds() const {
    if (rows_.empty()) return std::nullopt;
    Rect r{rows_.front().spans.front().start, rows_.front().y,
           rows_.front().spans.back().end, rows_.back().y};
    for (const auto& row : rows_) {
      r.x0 = std::min(r.x0, row.spans.front().start);
      r.x1 = std::max(r.x1, row.spans.back().end);
    }
    return r;
  }

  /// Debug text form: one line per scanline, `y: s0-e0, s1-e1`.
  std::string to_string() const {
    std::ostringstream os;
    for (const auto& row : rows_) {
      os << row.y << ':';
      for (std::size_t i = 0; i < row.spans.size(); ++i) {
        os << (i == 0 ? " " : ", ") << row.spans[i].start << '-'
           << row.spans[i].end;
      }
      os << '\n';
    }
    return os.str();
  }

  /// Parses the debug text form. Input need not be canonical.
  static Shape parse(std::string_view text) {
    std::vector<Scanline> rows;
    std::size_t line_no = 0;
    while (!text.empty()) {
      ++line_no;
      const auto nl = text.find('\n');
      std::string_view line = text.substr(0, nl);
      text = nl == std::string_view::npos ? std::string_view{}
                                          : text.substr(nl + 1);
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
      auto fail = [&](const char* what) {
        throw std::invalid_argument("shape text line " +
                                    std::to_string(line_no) + ": " + what);
      };
      const char* p = line.data();
      const char* end = line.data() + line.size();
      auto skip_ws = [&] {
        while (p < end && (*p == ' ' || *p == '\t')) ++p;
      };
      auto read_int = [&](std::int32_t& v) {
        skip_ws();
        auto [q, ec] = std::from_chars(p, end, v);
        if (ec != std::errc{}) fail("expected integer");
        p = q;
      };
      Scanline row;
      read_int(row.y);
      skip_ws();
      if (p == end || *p != ':') fail("expected ':'");
      ++p;
      skip_ws();
      while (p < end) {
        Span sp;
        read_int(sp.start);
        skip_ws();
        if (p == end || *p != '-') fail("expected '-'");
        ++p;
        read_int(sp.end);
        if (sp.start > sp.end) fail("span start > end");
        row.spans.push_back(sp);
        skip_ws();
        if (p < end) {
          if (*p != ',') fail("expected ','");
          ++p;
        }
      }
      rows.push_back(std::move(row));
    }
    return from_rows(std::move(rows));
  }

  friend bool operator==(const Shape&, const Shape&) = default;

 private:
  template <typename Op>
  friend Shape combine_rows(const Shape& a, const Shape& b, bool keep_a_only,
                            bool keep_b_only, Op op);

  std::vector<Scanline> rows_;
};

// Row-wise merge of two shapes. Rows present in only one operand are kept or
// dropped according to the flags; rows present in both go through `op`.
template <typename Op>
Shape combine_rows(const Shape& a, const Shape& b, bool keep_a_only,
                   bool keep_b_only, Op op) {
  Shape out;
  const auto& ra = a.rows_;
  const auto& rb = b.rows_;
  std::size_t i = 0, j = 0;
  while (i < ra.size() || j < rb.size()) {
    if (j == rb.size() || (i < ra.size() && ra[i].y < rb[j].y)) {
      if (keep_a_only) out.rows_.push_back(ra[i]);
      ++i;
    } else if (i == ra.size() || rb[j].y < ra[i].y) {
      if (keep_b_only) out.rows_.push_back(rb[j]);
      ++j;
    } else {
      auto spans = op(ra[i].spans, rb[j].spans);
      if (!spans.empty()) out.rows_.push_back({ra[i].y, std::move(spans)});
      ++i;
      ++j;
    }
  }
  return out;
}

inline Shape intersect(const Shape& a, const Shape& b) {
  return combine_rows(a, b, false, false, detail::intersect_spans);
}

inline Shape unite(const Shape& a, const Shape& b) {
  return combine_rows(a, b, true, true, detail::unite_spans);
}

inline Shape subtract(const Shape& a, const Shape& b) {
  return combine_rows(a, b, true, false, detail::subtract_spans);
}

inline Shape translate(const Shape& a, std::int64_t dx, std::int64_t dy) {
  if (dx == 0 && dy == 0) return a;
  std::vector<Scanline> rows;
  rows.reserve(a.scanlines().size());
  for (const auto& row : a.scanlines()) {
    const std::int64_t y = std::int64_t{row.y} + dy;
    detail::check_coord(y);
    Scanline out{static_cast<std::int32_t>(y), {}};
    out.spans.reserve(row.spans.size());
    for (const auto& sp : row.spans) {
      const std::int64_t s = std::int64_t{sp.start} + dx;
      const std::int64_t e = std::int64_t{sp.end} + dx;
      detail::check_coord(s);
      detail::check_coord(e);
      out.spans.push_back(
          {static_cast<std::int32_t>(s), static_cast<std::int32_t>(e)});
    }
    rows.push_back(std::move(out));
  }
  return Shape::from_rows(std::move(rows));
}

/// Minkowski sum with a (2w+1) x (2h+1) rectangle.
inline Shape dilate_rect(const Shape& a, std::int32_t w, std::int32_t h) {
  if (w < 0 || h < 0) throw std::invalid_argument("negative dilation");
  if (w == 0 && h == 0) return a;
  std::map<std::int32_t, std::vector<Span>> grown;
  for (const auto& row : a.scanlines()) {
    std::vector<Span> wide;
    wide.reserve(row.spans.size());
    for (const auto& sp : row.spans) {
      const std::int64_t s = std::int64_t{sp.start} - w;
      const std::int64_t e = std::int64_t{sp.end} + w;
      detail::check_coord(s);
      detail::check_coord(e);
      wide.push_back(
          {static_cast<std::int32_t>(s), static_cast<std::int32_t>(e)});
    }
    detail::check_coord(std::int64_t{row.y} - h);
    detail::check_coord(std::int64_t{row.y} + h);
    for (std::int32_t dy = -h; dy <= h; ++dy) {
      auto& dst = grown[row.y + dy];
      dst.insert(dst.end(), wide.begin(), wide.end());
    }
  }
  std::vector<Scanline> rows;
  rows.reserve(grown.size());
  for (auto& [y, spans] : grown) rows.push_back({y, std::move(spans)});
  return Shape::from_rows(std::move(rows));
}

/// Accumulates spans in any order; build() yields the canonical shape.
class ShapeBuilder {
 public:
  void add_span(std::int32_t y, std::int32_t start, std::int32_t end) {
    if (start > end) return;
    if (rows_.empty() || rows_.back().y != y) {
      rows_.push_back({y, {}});
    }
    rows_.back().spans.push_back({start, end});
  }
  void add_pixel(std::int32_t x, std::int32_t y) { add_span(y, x, x); }
  Shape build() { return Shape::from_rows(std::move(rows_)); }

 private:
  std::vector<Scanline> rows_;
};

/// Calls f(x, y) for each member in row-major order.
template <typename F>
void for_each_pixel(const Shape& s, F&& f) {
  for (const auto& row : s.scanlines()) {
    for (const auto& sp : row.spans) {
      for (std::int32_t x = sp.start;; ++x) {
        f(x, row.y);
        if (x == sp.end) break;
      }
    }
  }
}

}  // namespace strata
