#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stpaplus/windows.hpp"

namespace stpaplus {

/// Addresses one element of the controlled-process tuple (u, x, p, xdot, y).
enum class ElementKind { Input, State, Param, Derivative, Output };

struct ElementRef {
    ElementKind kind{ElementKind::State};
    std::size_t index{0};
    friend bool operator==(const ElementRef&, const ElementRef&) = default;
};

std::string element_kind_name(ElementKind kind);

struct ValueRange {
    double lo{-std::numeric_limits<double>::infinity()};
    double hi{std::numeric_limits<double>::infinity()};
    bool contains(double v) const { return v >= lo && v <= hi; }
    bool bounded() const;
    friend bool operator==(const ValueRange&, const ValueRange&) = default;
};

ValueRange intersect(const ValueRange& a, const ValueRange& b);
std::string to_string(const ValueRange& r);

/// The controlled-process construct: dynamics mapping (u, x, p) to
/// (xdot, y), advanced one tick at a time with an explicit first-order step
/// x' = x + dt * xdot. dt is the single accuracy knob; everything stays on
/// the tick lattice.
struct Construct {
    std::vector<std::string> input_names;
    std::vector<std::string> state_names;
    std::vector<std::string> output_names;
    std::vector<std::string> param_names;
    std::vector<double> params;
    double dt{0.1};

    std::function<void(std::span<const double> u, std::span<const double> x,
                       std::span<const double> p, std::span<double> xdot,
                       std::span<double> y)>
        dynamics;

    /// Sampling boxes for the internal-consistency check.
    std::vector<ValueRange> input_domain;
    std::vector<ValueRange> state_domain;
    std::vector<ValueRange> param_domain;

    std::size_t input_dim() const { return input_names.size(); }
    std::size_t state_dim() const { return state_names.size(); }
    std::size_t output_dim() const { return output_names.size(); }
    std::size_t dim(ElementKind kind) const;
    std::string element_name(const ElementRef& ref) const;
    std::optional<std::size_t> find_element(ElementKind kind, const std::string& name) const;

    void eval(std::span<const double> u, std::span<const double> x,
              std::span<double> xdot, std::span<double> y) const;
    /// One explicit first-order tick.
    std::vector<double> step(std::span<const double> x, std::span<const double> u) const;
};

/// Snapshot of the full tuple at one tick, for constraint evaluation.
struct EvalContext {
    std::span<const double> u, x, p, xdot, y;
    double value(const ElementRef& ref) const;
};

/// Admissible-set predicate over a target element. 1-D interval sets carry
/// the interval for exact aggregation; non-convex sets use the general
/// predicate over the whole context.
struct AdmissibleSet {
    std::string description;
    std::optional<ValueRange> interval;
    std::function<bool(const EvalContext&)> predicate;
    /// the constraint binds an engaged maneuver; the idle value 0 stays admissible
    bool idle_exempt{false};

    bool admits(const EvalContext& ctx, const ElementRef& target) const;
};

AdmissibleSet interval_set(ValueRange r);

/// Derivation arrows of the constraint map: what points at what.
enum class Arrow {
    A1_mechanism,               // process mechanism limits its inputs
    A2_env_inputs,              // everything the environment may feed in
    A3_env_output_requirement,  // outputs the environment requires
    A4_capacity,                // design / manufacture / natural capacity
    A5_internal_consistency,    // the tuple must satisfy the dynamics
};

std::string arrow_name(Arrow a);
std::optional<Arrow> arrow_from_name(const std::string& name);

/// Named exogenous facts supplied by the world (booleans encoded 0/1).
using ConditionSnapshot = std::map<std::string, double>;

/// Comparison templates over a condition variable — the closed assumption
/// language of scenario configs.
struct AssumptionExpr {
    enum class Op { IsTrue, IsFalse, Ge, Le };
    std::string var;
    Op op{Op::IsTrue};
    double bound{0.0};

    /// Throws std::runtime_error naming the variable when it is missing.
    bool holds(const ConditionSnapshot& conditions) const;
    std::string to_string() const;
};

/// {constraint | assumption on system/human | assumption on environment}.
/// An absent assumption is "not applicable"; a pair with both sides absent
/// must carry a justification.
struct ConstraintAssumptionPair {
    std::string name;
    ElementRef target;
    AdmissibleSet constraint;
    std::optional<AssumptionExpr> assume_system;
    std::optional<AssumptionExpr> assume_env;
    Arrow arrow{Arrow::A4_capacity};
    std::string justification;
};

/// Aggregated admissible sets for one condition epoch: per element, the
/// intersection of the constraints of every pair whose assumptions hold.
class DescriptiveConstraints {
public:
    struct ActivePair {
        std::size_t pair_index;
        std::string name;
        ElementRef target;
        AdmissibleSet constraint;
    };
    struct ExcludedPair {
        std::size_t pair_index;
        std::string name;
        std::string failed_assumption;
    };
    struct Violation {
        ElementRef element;
        std::string pair_name;
        double observed;
        std::string bound;
    };

    std::vector<ActivePair> active;
    std::vector<ExcludedPair> excluded;
    std::vector<bool> pair_truth;  // indexed like the model's pair list

    /// Tightest interval over the active interval pairs for this element;
    /// unbounded when none apply.
    ValueRange bounds(const ElementRef& ref) const;
    bool admits(const ElementRef& ref, const EvalContext& ctx) const;
    /// Every element checked against every active pair.
    std::vector<Violation> violations(const EvalContext& ctx) const;
    /// Conjunction of the active assumptions, grouped per element kind.
    std::string assumption_conjunction() const;

    friend bool operator==(const DescriptiveConstraints&, const DescriptiveConstraints&);

private:
    friend class ProcessModel;
    std::vector<std::string> active_assumptions_;
    std::vector<ElementKind> active_assumption_kinds_;
};

struct AssumptionChange {
    std::size_t pair_index;
    std::string pair_name;
    bool now_active;
    std::string detail;
};

struct SetChange {
    ElementRef element;
    std::string before;
    std::string after;
};

struct AssumptionDelta {
    std::vector<AssumptionChange> changed;
    std::vector<SetChange> set_changes;
    bool empty() const { return changed.empty() && set_changes.empty(); }
    std::string to_text() const;
};

struct ConsistencyViolation {
    std::vector<double> u, x, p;
    ElementRef element;
    double observed;
    std::string bound;
};

struct ConsistencyReport {
    std::uint64_t seed{0};
    int samples_checked{0};
    std::vector<ConsistencyViolation> violations;
    bool consistent() const { return violations.empty(); }
    std::string to_text(const Construct& c) const;
};

/// The constrained controlled-process model: the construct plus its
/// registered constraint-assumption pairs.
class ProcessModel {
public:
    explicit ProcessModel(Construct construct) : construct_(std::move(construct)) {}

    const Construct& construct() const { return construct_; }
    Construct& construct() { return construct_; }
    const std::vector<ConstraintAssumptionPair>& pairs() const { return pairs_; }

    /// Registers a pair. Throws std::invalid_argument on an unjustified
    /// isolated constraint (both assumptions absent, empty justification)
    /// or a target that does not exist.
    void add_pair(ConstraintAssumptionPair pair);

    /// Event hook: replace a registered pair's interval constraint.
    void set_pair_interval(std::size_t index, ValueRange r);

    /// Intersects the constraints of every pair whose assumptions hold
    /// under `conditions`; excluded pairs are listed with the assumption
    /// that failed. Throws when an assumption references a missing
    /// condition variable.
    DescriptiveConstraints aggregate(const ConditionSnapshot& conditions) const;

    /// Diff of a fresh aggregation against a previous epoch.
    AssumptionDelta watch_assumptions(const ConditionSnapshot& conditions,
                                      const DescriptiveConstraints& previous) const;

    /// Seeded sampling check that the aggregated sets are consistent with
    /// the dynamics: draws (u, x, p) from their admissible boxes, evaluates
    /// the construct, and reports every sample whose (xdot, y) image leaves
    /// the aggregated derivative/output sets.
    ConsistencyReport check_consistency(int samples, std::uint64_t seed,
                                        const ConditionSnapshot& conditions) const;

private:
    Construct construct_;
    std::vector<ConstraintAssumptionPair> pairs_;
};

}  // namespace stpaplus
