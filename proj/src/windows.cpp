#include "stpaplus/windows.hpp"

#include <algorithm>
#include <charconv>
#include <stdexcept>

namespace stpaplus {

Interval::Interval(Tick lo_, Tick hi_) : lo(lo_), hi(hi_) {
    if (lo >= hi) {
        throw std::invalid_argument("Interval requires lo < hi");
    }
}

WindowSet WindowSet::from_pieces(std::vector<std::pair<Tick, Tick>> raw) {
    std::erase_if(raw, [](const auto& p) { return p.first >= p.second; });
    std::sort(raw.begin(), raw.end());
    WindowSet out;
    for (const auto& [lo, hi] : raw) {
        if (!out.pieces_.empty() && lo <= out.pieces_.back().hi) {
            // overlapping or adjacent: extend the previous piece
            out.pieces_.back().hi = std::max(out.pieces_.back().hi, hi);
        } else {
            out.pieces_.emplace_back(lo, hi);
        }
    }
    return out;
}

WindowSet WindowSet::span(Tick lo, Tick hi) {
    WindowSet out;
    if (lo < hi) {
        out.pieces_.emplace_back(lo, hi);
    }
    return out;
}

bool WindowSet::contains(Tick t) const noexcept {
    // first piece with hi > t is the only candidate
    auto it = std::upper_bound(pieces_.begin(), pieces_.end(), t,
                               [](Tick v, const Interval& p) { return v < p.hi; });
    return it != pieces_.end() && it->contains(t);
}

std::optional<Tick> WindowSet::first() const noexcept {
    if (pieces_.empty()) return std::nullopt;
    return pieces_.front().lo;
}

std::optional<Tick> WindowSet::sup() const noexcept {
    if (pieces_.empty()) return std::nullopt;
    return pieces_.back().hi;
}

Tick WindowSet::tick_count() const noexcept {
    Tick n = 0;
    for (const auto& p : pieces_) n += p.length();
    return n;
}

std::string WindowSet::to_string() const {
    if (pieces_.empty()) return "∅";
    std::string out;
    for (std::size_t i = 0; i < pieces_.size(); ++i) {
        if (i > 0) out += "∪";
        out += '[' + std::to_string(pieces_[i].lo) + ',' +
               std::to_string(pieces_[i].hi) + ')';
    }
    return out;
}

namespace {

Tick parse_tick(std::string_view s) {
    Tick value = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw std::invalid_argument("window set: bad tick value '" + std::string(s) + "'");
    }
    return value;
}

}  // namespace

WindowSet WindowSet::parse(std::string_view text) {
    if (text == "∅") return WindowSet{};
    std::vector<std::pair<Tick, Tick>> raw;
    std::size_t pos = 0;
    while (pos < text.size()) {
        if (text[pos] != '[') {
            throw std::invalid_argument("window set: expected '[' in '" + std::string(text) + "'");
        }
        auto comma = text.find(',', pos);
        auto close = text.find(')', pos);
        if (comma == std::string_view::npos || close == std::string_view::npos || comma > close) {
            throw std::invalid_argument("window set: malformed piece in '" + std::string(text) + "'");
        }
        Tick lo = parse_tick(text.substr(pos + 1, comma - pos - 1));
        Tick hi = parse_tick(text.substr(comma + 1, close - comma - 1));
        if (lo >= hi) {
            throw std::invalid_argument("window set: piece with lo >= hi");
        }
        raw.emplace_back(lo, hi);
        pos = close + 1;
        if (pos < text.size()) {
            // the separator is the UTF-8 union sign
            static constexpr std::string_view kUnion = "∪";
            if (text.substr(pos, kUnion.size()) != kUnion) {
                throw std::invalid_argument("window set: expected union separator");
            }
            pos += kUnion.size();
        }
    }
    // round-trip of to_string input is already canonical; arbitrary text may not be
    return from_pieces(std::move(raw));
}

WindowSet set_union(const WindowSet& a, const WindowSet& b) {
    std::vector<std::pair<Tick, Tick>> raw;
    raw.reserve(a.pieces().size() + b.pieces().size());
    for (const auto& p : a.pieces()) raw.emplace_back(p.lo, p.hi);
    for (const auto& p : b.pieces()) raw.emplace_back(p.lo, p.hi);
    return WindowSet::from_pieces(std::move(raw));
}

WindowSet set_intersect(const WindowSet& a, const WindowSet& b) {
    std::vector<std::pair<Tick, Tick>> raw;
    auto ia = a.pieces().begin();
    auto ib = b.pieces().begin();
    while (ia != a.pieces().end() && ib != b.pieces().end()) {
        Tick lo = std::max(ia->lo, ib->lo);
        Tick hi = std::min(ia->hi, ib->hi);
        if (lo < hi) raw.emplace_back(lo, hi);
        if (ia->hi < ib->hi) {
            ++ia;
        } else {
            ++ib;
        }
    }
    return WindowSet::from_pieces(std::move(raw));
}

WindowSet set_difference(const WindowSet& a, const WindowSet& b) {
    std::vector<std::pair<Tick, Tick>> raw;
    auto ib = b.pieces().begin();
    for (const auto& pa : a.pieces()) {
        Tick cursor = pa.lo;
        while (ib != b.pieces().end() && ib->hi <= cursor) ++ib;
        auto it = ib;
        while (it != b.pieces().end() && it->lo < pa.hi) {
            if (it->lo > cursor) raw.emplace_back(cursor, it->lo);
            cursor = std::max(cursor, it->hi);
            ++it;
        }
        if (cursor < pa.hi) raw.emplace_back(cursor, pa.hi);
    }
    return WindowSet::from_pieces(std::move(raw));
}

WindowSet set_complement(const WindowSet& a, const Interval& domain) {
    WindowSet dom = WindowSet::span(domain.lo, domain.hi);
    if (!is_subset(a, dom)) {
        throw std::invalid_argument("set_complement: set not contained in domain");
    }
    return set_difference(dom, a);
}

bool is_subset(const WindowSet& a, const WindowSet& b) {
    auto ib = b.pieces().begin();
    for (const auto& pa : a.pieces()) {
        while (ib != b.pieces().end() && ib->hi <= pa.lo) ++ib;
        if (ib == b.pieces().end() || ib->lo > pa.lo || ib->hi < pa.hi) {
            return false;
        }
    }
    return true;
}

WindowSet can_window(const WindowSet& must, const WindowSet& must_not,
                     const WindowSet& horizon_t) {
    return set_difference(horizon_t, set_union(must, must_not));
}

}  // namespace stpaplus
