#include "stpaplus/process.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

namespace stpaplus {

std::string element_kind_name(ElementKind kind) {
    switch (kind) {
        case ElementKind::Input: return "u";
        case ElementKind::State: return "x";
        case ElementKind::Param: return "p";
        case ElementKind::Derivative: return "xdot";
        case ElementKind::Output: return "y";
    }
    return "?";
}

bool ValueRange::bounded() const {
    return std::isfinite(lo) && std::isfinite(hi);
}

ValueRange intersect(const ValueRange& a, const ValueRange& b) {
    return {std::max(a.lo, b.lo), std::min(a.hi, b.hi)};
}

std::string to_string(const ValueRange& r) {
    std::ostringstream os;
    os << '[' << r.lo << ", " << r.hi << ']';
    return os.str();
}

std::size_t Construct::dim(ElementKind kind) const {
    switch (kind) {
        case ElementKind::Input: return input_dim();
        case ElementKind::State: return state_dim();
        case ElementKind::Param: return param_names.size();
        case ElementKind::Derivative: return state_dim();
        case ElementKind::Output: return output_dim();
    }
    return 0;
}

std::string Construct::element_name(const ElementRef& ref) const {
    const std::vector<std::string>* names = nullptr;
    switch (ref.kind) {
        case ElementKind::Input: names = &input_names; break;
        case ElementKind::State:
        case ElementKind::Derivative: names = &state_names; break;
        case ElementKind::Param: names = &param_names; break;
        case ElementKind::Output: names = &output_names; break;
    }
    if (ref.index >= names->size()) return "<bad element>";
    std::string base = (*names)[ref.index];
    if (ref.kind == ElementKind::Derivative) return base + "_dot";
    return base;
}

std::optional<std::size_t> Construct::find_element(ElementKind kind,
                                                   const std::string& name) const {
    const std::vector<std::string>* names = nullptr;
    switch (kind) {
        case ElementKind::Input: names = &input_names; break;
        case ElementKind::State:
        case ElementKind::Derivative: names = &state_names; break;
        case ElementKind::Param: names = &param_names; break;
        case ElementKind::Output: names = &output_names; break;
    }
    auto it = std::find(names->begin(), names->end(), name);
    if (it == names->end()) return std::nullopt;
    return static_cast<std::size_t>(it - names->begin());
}

void Construct::eval(std::span<const double> u, std::span<const double> x,
                     std::span<double> xdot, std::span<double> y) const {
    dynamics(u, x, std::span<const double>(params), xdot, y);
}

std::vector<double> Construct::step(std::span<const double> x,
                                    std::span<const double> u) const {
    std::vector<double> xdot(state_dim(), 0.0);
    std::vector<double> y(output_dim(), 0.0);
    eval(u, x, xdot, y);
    std::vector<double> next(x.begin(), x.end());
    for (std::size_t i = 0; i < next.size(); ++i) {
        next[i] += dt * xdot[i];
    }
    return next;
}

double EvalContext::value(const ElementRef& ref) const {
    switch (ref.kind) {
        case ElementKind::Input: return u[ref.index];
        case ElementKind::State: return x[ref.index];
        case ElementKind::Param: return p[ref.index];
        case ElementKind::Derivative: return xdot[ref.index];
        case ElementKind::Output: return y[ref.index];
    }
    return 0.0;
}

bool AdmissibleSet::admits(const EvalContext& ctx, const ElementRef& target) const {
    if (idle_exempt && std::fabs(ctx.value(target)) <= 1e-9) return true;
    if (interval && !interval->contains(ctx.value(target))) return false;
    if (predicate && !predicate(ctx)) return false;
    return true;
}

AdmissibleSet interval_set(ValueRange r) {
    return {to_string(r), r, nullptr};
}

std::string arrow_name(Arrow a) {
    switch (a) {
        case Arrow::A1_mechanism: return "A1";
        case Arrow::A2_env_inputs: return "A2";
        case Arrow::A3_env_output_requirement: return "A3";
        case Arrow::A4_capacity: return "A4";
        case Arrow::A5_internal_consistency: return "A5";
    }
    return "?";
}

std::optional<Arrow> arrow_from_name(const std::string& name) {
    if (name == "A1") return Arrow::A1_mechanism;
    if (name == "A2") return Arrow::A2_env_inputs;
    if (name == "A3") return Arrow::A3_env_output_requirement;
    if (name == "A4") return Arrow::A4_capacity;
    if (name == "A5") return Arrow::A5_internal_consistency;
    return std::nullopt;
}

bool AssumptionExpr::holds(const ConditionSnapshot& conditions) const {
    auto it = conditions.find(var);
    if (it == conditions.end()) {
        throw std::runtime_error("missing condition variable '" + var + "'");
    }
    switch (op) {
        case Op::IsTrue: return it->second != 0.0;
        case Op::IsFalse: return it->second == 0.0;
        case Op::Ge: return it->second >= bound;
        case Op::Le: return it->second <= bound;
    }
    return false;
}

std::string AssumptionExpr::to_string() const {
    std::ostringstream os;
    switch (op) {
        case Op::IsTrue: os << var; break;
        case Op::IsFalse: os << "!" << var; break;
        case Op::Ge: os << var << ">=" << bound; break;
        case Op::Le: os << var << "<=" << bound; break;
    }
    return os.str();
}

ValueRange DescriptiveConstraints::bounds(const ElementRef& ref) const {
    ValueRange r;
    for (const auto& ap : active) {
        if (ap.target == ref && ap.constraint.interval) {
            r = intersect(r, *ap.constraint.interval);
        }
    }
    return r;
}

bool DescriptiveConstraints::admits(const ElementRef& ref, const EvalContext& ctx) const {
    for (const auto& ap : active) {
        if (ap.target == ref && !ap.constraint.admits(ctx, ap.target)) return false;
    }
    return true;
}

std::vector<DescriptiveConstraints::Violation>
DescriptiveConstraints::violations(const EvalContext& ctx) const {
    std::vector<Violation> out;
    for (const auto& ap : active) {
        if (!ap.constraint.admits(ctx, ap.target)) {
            out.push_back({ap.target, ap.name, ctx.value(ap.target),
                           ap.constraint.description});
        }
    }
    return out;
}

std::string DescriptiveConstraints::assumption_conjunction() const {
    // group the active assumptions by the element kind they guard
    std::string out;
    for (ElementKind kind : {ElementKind::Input, ElementKind::State, ElementKind::Param,
                             ElementKind::Derivative, ElementKind::Output}) {
        std::string group;
        for (std::size_t i = 0; i < active_assumptions_.size(); ++i) {
            if (active_assumption_kinds_[i] != kind) continue;
            if (!group.empty()) group += " && ";
            group += active_assumptions_[i];
        }
        if (group.empty()) continue;
        if (!out.empty()) out += " && ";
        out += "AS_" + element_kind_name(kind) + "(" + group + ")";
    }
    return out;
}

bool operator==(const DescriptiveConstraints& a, const DescriptiveConstraints& b) {
    if (a.pair_truth != b.pair_truth) return false;
    if (a.active.size() != b.active.size()) return false;
    for (std::size_t i = 0; i < a.active.size(); ++i) {
        if (a.active[i].pair_index != b.active[i].pair_index) return false;
        if (a.active[i].constraint.interval != b.active[i].constraint.interval) return false;
    }
    return true;
}

std::string AssumptionDelta::to_text() const {
    std::ostringstream os;
    for (const auto& c : changed) {
        os << "assumption " << c.detail << " -> pair '" << c.pair_name << "' "
           << (c.now_active ? "added" : "removed") << '\n';
    }
    for (const auto& s : set_changes) {
        os << "set " << element_kind_name(s.element.kind) << '[' << s.element.index
           << "] " << s.before << " -> " << s.after << '\n';
    }
    return os.str();
}

std::string ConsistencyReport::to_text(const Construct& c) const {
    std::ostringstream os;
    os << "samples=" << samples_checked << " seed=" << seed
       << " violations=" << violations.size() << '\n';
    for (const auto& v : violations) {
        os << "  " << c.element_name(v.element) << '=' << v.observed
           << " outside " << v.bound << '\n';
    }
    return os.str();
}

void ProcessModel::add_pair(ConstraintAssumptionPair pair) {
    if (!pair.assume_system && !pair.assume_env && pair.justification.empty()) {
        throw std::invalid_argument(
            "pair '" + pair.name +
            "': constraints and assumptions come in pairs; a constraint with no "
            "applicable assumption must carry a justification");
    }
    if (pair.target.index >= construct_.dim(pair.target.kind)) {
        throw std::invalid_argument("pair '" + pair.name + "': target element " +
                                    element_kind_name(pair.target.kind) + '[' +
                                    std::to_string(pair.target.index) + "] does not exist");
    }
    pairs_.push_back(std::move(pair));
}

void ProcessModel::set_pair_interval(std::size_t index, ValueRange r) {
    if (index >= pairs_.size()) {
        throw std::invalid_argument("set_pair_interval: no pair #" + std::to_string(index));
    }
    pairs_[index].constraint.interval = r;
    pairs_[index].constraint.description = to_string(r);
}

DescriptiveConstraints ProcessModel::aggregate(const ConditionSnapshot& conditions) const {
    DescriptiveConstraints dcs;
    dcs.pair_truth.resize(pairs_.size(), true);
    for (std::size_t i = 0; i < pairs_.size(); ++i) {
        const auto& pair = pairs_[i];
        std::string failed;
        bool ok = true;
        if (pair.assume_system && !pair.assume_system->holds(conditions)) {
            ok = false;
            failed = pair.assume_system->to_string();
        }
        if (ok && pair.assume_env && !pair.assume_env->holds(conditions)) {
            ok = false;
            failed = pair.assume_env->to_string();
        }
        dcs.pair_truth[i] = ok;
        if (!ok) {
            dcs.excluded.push_back({i, pair.name, failed});
            continue;
        }
        dcs.active.push_back({i, pair.name, pair.target, pair.constraint});
        if (pair.assume_system) {
            dcs.active_assumptions_.push_back(pair.assume_system->to_string());
            dcs.active_assumption_kinds_.push_back(pair.target.kind);
        }
        if (pair.assume_env) {
            dcs.active_assumptions_.push_back(pair.assume_env->to_string());
            dcs.active_assumption_kinds_.push_back(pair.target.kind);
        }
    }
    return dcs;
}

AssumptionDelta ProcessModel::watch_assumptions(
    const ConditionSnapshot& conditions, const DescriptiveConstraints& previous) const {
    AssumptionDelta delta;
    DescriptiveConstraints fresh = aggregate(conditions);
    for (std::size_t i = 0; i < pairs_.size(); ++i) {
        bool was = i < previous.pair_truth.size() ? previous.pair_truth[i] : true;
        bool now = fresh.pair_truth[i];
        if (was != now) {
            std::string which;
            if (pairs_[i].assume_system) which = pairs_[i].assume_system->to_string();
            if (pairs_[i].assume_env) {
                if (!which.empty()) which += " && ";
                which += pairs_[i].assume_env->to_string();
            }
            delta.changed.push_back({i, pairs_[i].name, now, which});
        }
    }
    // induced set changes, element by element
    for (ElementKind kind : {ElementKind::Input, ElementKind::State, ElementKind::Param,
                             ElementKind::Derivative, ElementKind::Output}) {
        for (std::size_t idx = 0; idx < construct_.dim(kind); ++idx) {
            ElementRef ref{kind, idx};
            ValueRange before = previous.bounds(ref);
            ValueRange after = fresh.bounds(ref);
            if (before != after) {
                delta.set_changes.push_back({ref, to_string(before), to_string(after)});
            }
        }
    }
    return delta;
}

ConsistencyReport ProcessModel::check_consistency(int samples, std::uint64_t seed,
                                                  const ConditionSnapshot& conditions) const {
    ConsistencyReport report;
    report.seed = seed;
    DescriptiveConstraints dcs = aggregate(conditions);

    auto sampling_range = [&](ElementKind kind, std::size_t idx,
                              const std::vector<ValueRange>& domain) {
        ValueRange r = idx < domain.size() ? domain[idx] : ValueRange{};
        r = intersect(r, dcs.bounds({kind, idx}));
        if (!r.bounded()) {
            throw std::runtime_error("consistency check: unbounded sampling box for " +
                                     element_kind_name(kind) + '[' + std::to_string(idx) + ']');
        }
        return r;
    };

    std::mt19937_64 rng(seed);
    auto draw = [&](const ValueRange& r) {
        // map the engine's 64-bit output onto [lo, hi] deterministically
        double unit = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        return r.lo + unit * (r.hi - r.lo);
    };

    std::vector<double> u(construct_.input_dim());
    std::vector<double> x(construct_.state_dim());
    std::vector<double> p = construct_.params;
    std::vector<double> xdot(construct_.state_dim());
    std::vector<double> y(construct_.output_dim());

    for (int s = 0; s < samples; ++s) {
        for (std::size_t i = 0; i < u.size(); ++i) {
            u[i] = draw(sampling_range(ElementKind::Input, i, construct_.input_domain));
        }
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] = draw(sampling_range(ElementKind::State, i, construct_.state_domain));
        }
        for (std::size_t i = 0; i < p.size(); ++i) {
            ValueRange r = i < construct_.param_domain.size() ? construct_.param_domain[i]
                                                              : ValueRange{construct_.params[i],
                                                                           construct_.params[i]};
            r = intersect(r, dcs.bounds({ElementKind::Param, i}));
            p[i] = r.lo == r.hi ? r.lo : draw(r);
        }
        construct_.dynamics(u, x, p, xdot, y);
        EvalContext ctx{u, x, p, xdot, y};
        for (const auto& ap : dcs.active) {
            if (ap.target.kind != ElementKind::Derivative &&
                ap.target.kind != ElementKind::Output) {
                continue;
            }
            if (!ap.constraint.admits(ctx, ap.target)) {
                report.violations.push_back({u, x, p, ap.target, ctx.value(ap.target),
                                             ap.constraint.description});
            }
        }
        ++report.samples_checked;
    }
    return report;
}

}  // namespace stpaplus
