#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace stpaplus {

/// Discrete time on the simulation lattice. One tick = dt seconds; all the
/// window algebra is exact integer arithmetic on this lattice.
using Tick = std::int64_t;

/// Half-open tick interval [lo, hi). Empty intervals are not representable;
/// emptiness lives at the WindowSet level.
struct Interval {
    Tick lo{0};
    Tick hi{0};

    Interval(Tick lo_, Tick hi_);

    Tick length() const noexcept { return hi - lo; }
    bool contains(Tick t) const noexcept { return t >= lo && t < hi; }

    friend bool operator==(const Interval&, const Interval&) = default;
};

/// A finite union of disjoint, non-adjacent, ascending half-open intervals.
///
/// The canonical form (sorted, merged, no zero-length pieces) is a class
/// invariant, so two WindowSets are equal iff their piece lists are
/// identical element-wise.
class WindowSet {
public:
    WindowSet() = default;

    /// Canonicalizes an arbitrary piece list: drops empty pieces, sorts,
    /// merges overlapping and adjacent ones.
    static WindowSet from_pieces(std::vector<std::pair<Tick, Tick>> raw);

    /// Single half-open interval [lo, hi); returns the empty set when lo >= hi.
    static WindowSet span(Tick lo, Tick hi);

    const std::vector<Interval>& pieces() const noexcept { return pieces_; }
    bool empty() const noexcept { return pieces_.empty(); }

    bool contains(Tick t) const noexcept;

    /// First tick in the set.
    std::optional<Tick> first() const noexcept;
    /// One past the last tick in the set (supremum of the half-open cover).
    std::optional<Tick> sup() const noexcept;

    Tick tick_count() const noexcept;

    /// Text form used in traces and reports: "[lo,hi)∪[lo,hi)…" or "∅".
    std::string to_string() const;
    /// Inverse of to_string. Throws std::invalid_argument on malformed input.
    static WindowSet parse(std::string_view text);

    friend bool operator==(const WindowSet&, const WindowSet&) = default;

private:
    std::vector<Interval> pieces_;
};

WindowSet set_union(const WindowSet& a, const WindowSet& b);
WindowSet set_intersect(const WindowSet& a, const WindowSet& b);
/// Ticks of `a` removed from `b`'s perspective: membership a ∧ ¬b.
WindowSet set_difference(const WindowSet& a, const WindowSet& b);
/// Membership (t ∈ domain) ∧ (t ∉ a). Rejects a ⊄ domain.
WindowSet set_complement(const WindowSet& a, const Interval& domain);

bool is_subset(const WindowSet& a, const WindowSet& b);

/// The can-start/can-stop rule: horizon_T ∩ ¬(must ∪ must_not).
/// The result is disjoint from both inputs by construction.
WindowSet can_window(const WindowSet& must, const WindowSet& must_not,
                     const WindowSet& horizon_t);

}  // namespace stpaplus
