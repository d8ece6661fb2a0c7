#pragma once

// The demand-driven evaluator.  Core expressions evaluate call-by-value,
// left to right; structure expressions build and combine mixin values; close
// moves component bodies onto the heap and projection forces them.
//
// This class implements the three unconstrained behaviours selected by
// `Variant`: lazy (memoizing) forcing, call-by-name (re-evaluate on every
// read, never memoize), and eager (close forces every component in
// definition order).  The constraint-aware evaluator derives from it and
// overrides `close_structure` and `force_loc`.

#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "lyre/ast.hpp"
#include "lyre/constraints.hpp"
#include "lyre/effects.hpp"
#include "lyre/heap.hpp"
#include "lyre/value.hpp"

namespace lyre {

enum class Variant { Lazy, Cbn, Eager };

inline Variant variant_from_name(const std::string& s) {
    if (s == "lazy") return Variant::Lazy;
    if (s == "cbn") return Variant::Cbn;
    if (s == "eager") return Variant::Eager;
    fail(ErrKind::Parse, "unknown variant '" + s + "'");
}

class Interp {
public:
    Interp(StrategyPtr strategy, Variant variant, Effects& effects,
           std::uint64_t step_budget)
        : strategy_(std::move(strategy)), variant_(variant),
          effects_(effects), budget_(step_budget) {}
    virtual ~Interp() = default;

    Heap& heap() { return heap_; }
    const Heap& heap() const { return heap_; }
    Effects& effects() { return effects_; }
    const Strategy& strategy() const { return *strategy_; }
    Variant variant() const { return variant_; }
    std::uint64_t steps() const { return steps_; }

    // how many times each location's stored expression was evaluated; under
    // memoizing variants every count is at most one
    const std::map<std::uint64_t, std::uint64_t>& eval_counts() const {
        return eval_counts_;
    }

    Value run(const ExprPtr& program) { return eval(program, nullptr); }

    Value eval(const ExprPtr& e, const EnvPtr& env) {
        tick();
        if (!e) fail(ErrKind::Internal, "evaluation of a missing expression");
        return std::visit(
            [&](const auto& n) -> Value {
                using T = std::decay_t<decltype(n)>;
                if constexpr (std::is_same_v<T, IntLit>) {
                    return Value{n.value};
                } else if constexpr (std::is_same_v<T, StrLit>) {
                    return Value{n.value};
                } else if constexpr (std::is_same_v<T, BoolLit>) {
                    return Value{n.value};
                } else if constexpr (std::is_same_v<T, UnitLit>) {
                    return Value{VUnit{}};
                } else if constexpr (std::is_same_v<T, ListLit>) {
                    std::vector<Value> xs;
                    xs.reserve(n.items.size());
                    for (const auto& it : n.items) xs.push_back(eval(it, env));
                    return Value{std::move(xs)};
                } else if constexpr (std::is_same_v<T, Binary>) {
                    return eval_binary(n, env, e);
                } else if constexpr (std::is_same_v<T, If>) {
                    Value c = eval(n.cond, env);
                    const bool* b = c.as<bool>();
                    if (!b)
                        fail(ErrKind::CoreTypeError,
                             "if condition is not a boolean: " +
                                 render_value(c));
                    return eval(*b ? n.then_branch : n.else_branch, env);
                } else if constexpr (std::is_same_v<T, Lambda>) {
                    return Value{VClosure{n.param, n.unit_param, n.body, env}};
                } else if constexpr (std::is_same_v<T, App>) {
                    Value f = eval(n.fn, env);
                    Value a = eval(n.arg, env);
                    return apply_value(f, std::move(a));
                } else if constexpr (std::is_same_v<T, Let>) {
                    Value b = eval(n.bound, env);
                    return eval(n.body, env_bind(env, n.binder, std::move(b)));
                } else if constexpr (std::is_same_v<T, RefNew>) {
                    Value i = eval(n.init, env);
                    return Value{VRef{effects_.store_alloc(std::move(i))}};
                } else if constexpr (std::is_same_v<T, Deref>) {
                    Value t = eval(n.target, env);
                    const VRef* r = t.as<VRef>();
                    if (!r)
                        fail(ErrKind::CoreTypeError,
                             "dereference of a non-ref value: " +
                                 render_value(t));
                    return effects_.store_read(r->cell);
                } else if constexpr (std::is_same_v<T, Assign>) {
                    Value t = eval(n.target, env);
                    const VRef* r = t.as<VRef>();
                    if (!r)
                        fail(ErrKind::CoreTypeError,
                             "assignment to a non-ref value: " +
                                 render_value(t));
                    Value v = eval(n.value, env);
                    effects_.store_write(r->cell, std::move(v));
                    return Value{VUnit{}};
                } else if constexpr (std::is_same_v<T, BuiltinCall>) {
                    std::vector<Value> args;
                    args.reserve(n.args.size());
                    for (const auto& a : n.args) args.push_back(eval(a, env));
                    return apply_builtin(n.name, args);
                } else if constexpr (std::is_same_v<T, BuiltinRef>) {
                    return Value{VBuiltin{n.name}};
                } else if constexpr (std::is_same_v<T, IdentRef>) {
                    if (const Value* v = env_lookup(env, n.id.uid)) return *v;
                    fail(ErrKind::UnresolvedComponent,
                         "reference to undefined component '" + n.id.base +
                             "'");
                } else if constexpr (std::is_same_v<T, NameRef>) {
                    fail(ErrKind::UnresolvedComponent,
                         "unresolved external name '" + n.name.text + "'");
                } else if constexpr (std::is_same_v<T, LocRef>) {
                    return force_loc(n.loc);
                } else if constexpr (std::is_same_v<T, StructLit>) {
                    return eval_struct_lit(n, env);
                } else if constexpr (std::is_same_v<T, SumE>) {
                    return eval_sum(n, env);
                } else if constexpr (std::is_same_v<T, RenameE>) {
                    return eval_rename(n, env);
                } else if constexpr (std::is_same_v<T, HideE>) {
                    return eval_hide(n, env);
                } else if constexpr (std::is_same_v<T, FreezeE>) {
                    return eval_freeze(n, env);
                } else if constexpr (std::is_same_v<T, CloseE>) {
                    return eval_close(n, env);
                } else {
                    static_assert(std::is_same_v<T, Project>,
                                  "unhandled node");
                    return eval_project(n, env);
                }
            },
            e->node);
    }

    // Read a heap cell, evaluating it as the variant demands.
    virtual Value force_loc(Loc l) {
        tick();
        if (const Value* v = heap_.value_at(l)) return *v;
        if (heap_.sentinel_at(l))
            fail(ErrKind::CyclicDependency,
                 "evaluation of " + describe(l) + " depends on itself");
        ExprPtr body = *heap_.expr_at(l);
        if (variant_ == Variant::Cbn) {
            // transient read: no in-progress marker, no memoization
            ++eval_counts_[l.index];
            return eval(body, nullptr);
        }
        heap_.blackhole(l, SentinelTag::Cycle);
        ++eval_counts_[l.index];
        Value v = eval(body, nullptr);
        heap_.write_value(l, v);
        return v;
    }

    Value apply_value(const Value& f, Value arg) {
        if (const auto* c = f.as<VClosure>()) {
            if (c->unit_param) {
                if (!arg.is<VUnit>())
                    fail(ErrKind::CoreTypeError,
                         "unit function applied to a non-unit argument: " +
                             render_value(arg));
                return eval(c->body, c->env);
            }
            return eval(c->body, env_bind(c->env, c->param, std::move(arg)));
        }
        if (const auto* b = f.as<VBuiltin>()) {
            std::vector<Value> args;
            args.push_back(std::move(arg));
            return apply_builtin(b->name, args);
        }
        fail(ErrKind::CoreTypeError,
             "application of a non-function value: " + render_value(f));
    }

protected:
    // ----------------------------------------------------------- structures

    Value eval_struct_lit(const StructLit& lit, const EnvPtr& env) {
        StructValue s;
        for (const auto& c : lit.comps) {
            if (c.deferred) {
                s.input.insert({c.id, c.name});
                continue;
            }
            s.binding.add(c.id, capture_env(c.body, env));
            if (!s.output.insert({c.name, c.id}).second)
                fail(ErrKind::Internal,
                     "literal exports '" + c.name.text + "' twice");
        }
        s.constraint =
            lit.synthetic ? LocalConstraint{} : strategy_->annotate(lit);
        // every evaluation of a literal yields its own component identity
        StructValue fresh = alpha_refresh(s);
        check_wellformed(fresh);
        return Value{std::make_shared<const StructValue>(std::move(fresh))};
    }

    Value eval_sum(const SumE& n, const EnvPtr& env) {
        StructPtr a = as_struct(eval(n.lhs, env), "sum");
        StructPtr b = as_struct(eval(n.rhs, env), "sum");
        strategy_->check_sum_operands(*a, *b);
        StructValue rb = alpha_refresh(*b);
        for (const auto& [nm, id] : rb.output)
            if (a->output.count(nm))
                fail(ErrKind::NameClash,
                     "both operands of a sum export '" + nm.text + "'");
        StructValue out;
        out.input = map_union(a->input, rb.input);
        out.output = map_union(a->output, rb.output);
        out.binding = binding_union(a->binding, rb.binding);
        out.constraint = strategy_->nu(*a, rb);
        check_wellformed(out);
        return Value{std::make_shared<const StructValue>(std::move(out))};
    }

    Value eval_rename(const RenameE& n, const EnvPtr& env) {
        StructPtr s = as_struct(eval(n.body, env), "rename");
        StructValue out;
        out.input = map_compose(n.phi1, s->input);   // phi1 after iota
        out.output = map_compose(s->output, n.phi2); // o after phi2
        out.binding = s->binding;
        out.constraint = s->constraint;
        out.closed = s->closed;
        check_wellformed(out);
        return Value{std::make_shared<const StructValue>(std::move(out))};
    }

    Value eval_hide(const HideE& n, const EnvPtr& env) {
        StructPtr s = as_struct(eval(n.body, env), "hide");
        StructValue out = *s;
        out.output.erase(n.name); // hiding an absent name changes nothing
        return Value{std::make_shared<const StructValue>(std::move(out))};
    }

    Value eval_freeze(const FreezeE& n, const EnvPtr& env) {
        StructPtr s = as_struct(eval(n.body, env), "freeze");
        std::map<Name, ExprPtr> psi;
        for (const auto& [nm, ex] : n.psi)
            if (!psi.emplace(nm, ex).second)
                fail(ErrKind::FreezeMismatch,
                     "freeze ties '" + nm.text + "' twice");
        StructValue out;
        out.output = s->output;
        out.binding = s->binding;
        out.constraint = s->constraint;
        out.closed = s->closed;
        std::set<Name> used;
        for (const auto& [id, nm] : s->input) {
            auto tie = psi.find(nm);
            if (tie == psi.end()) {
                out.input.insert({id, nm}); // stays deferred
                continue;
            }
            used.insert(nm);
            // names in the tying must designate outputs; they become the
            // identifiers the output assignment maps them to
            ExprPtr body = capture_env(tie->second, env);
            std::set<Name> mentioned;
            collect_free_names(body, mentioned);
            NameSubst ns;
            for (const auto& m : mentioned) {
                auto oit = s->output.find(m);
                if (oit == s->output.end())
                    fail(ErrKind::FreezeMismatch,
                         "tying for '" + nm.text + "' mentions '" + m.text +
                             "', which is not an output of the structure");
                ns.emplace(m, mk_expr(IdentRef{oit->second}));
            }
            out.binding.add(id, subst_names(body, ns));
        }
        for (const auto& [nm, ex] : psi)
            if (!used.count(nm))
                fail(ErrKind::FreezeMismatch,
                     "freeze ties '" + nm.text +
                         "', which is not a deferred name of the structure");
        check_wellformed(out);
        return Value{std::make_shared<const StructValue>(std::move(out))};
    }

    Value eval_close(const CloseE& n, const EnvPtr& env) {
        StructPtr s = as_struct(eval(n.body, env), "close");
        if (!s->input.empty())
            fail(ErrKind::OpenMixinOperation,
                 "close of an open mixin (deferred '" +
                     s->input.begin()->second.text + "')");
        return Value{close_structure(*s)};
    }

    // Allocate one cell per component, holding its body with every sibling
    // reference replaced by that sibling's cell.  The result binds each
    // component to its cell.  Eager closing forces the cells in definition
    // order before returning.
    virtual StructPtr close_structure(const StructValue& s) {
        std::vector<Loc> locs;
        locs.reserve(s.binding.size());
        IdentSubst sibling;
        for (const auto& [id, body] : s.binding.entries) {
            Loc l = heap_.alloc(body);
            locs.push_back(l);
            sibling.emplace(id.uid, mk_expr(LocRef{l}));
        }
        StructValue out;
        out.output = s.output;
        out.closed = true;
        for (std::size_t i = 0; i < s.binding.entries.size(); ++i) {
            heap_.update_expr(
                locs[i], subst_idents(s.binding.entries[i].second, sibling));
            out.binding.add(s.binding.entries[i].first,
                            mk_expr(LocRef{locs[i]}));
        }
        auto sp = std::make_shared<const StructValue>(std::move(out));
        if (variant_ == Variant::Eager)
            for (Loc l : locs) force_loc(l);
        return sp;
    }

    Value eval_project(const Project& n, const EnvPtr& env) {
        StructPtr s = as_struct(eval(n.body, env), "projection");
        auto it = s->output.find(n.name);
        if (it == s->output.end())
            fail(ErrKind::UnknownProjection,
                 "structure exports no component named '" + n.name.text +
                     "'");
        const ExprPtr* body = s->binding.find(it->second);
        if (!body)
            fail(ErrKind::UnresolvedComponent,
                 "component '" + n.name.text + "' is still deferred");
        return eval(*body, nullptr);
    }

    // ----------------------------------------------------------------- core

    Value eval_binary(const Binary& n, const EnvPtr& env, const ExprPtr& at) {
        if (n.op == BinOp::And || n.op == BinOp::Or) {
            Value l = eval(n.lhs, env);
            const bool* lb = l.as<bool>();
            if (!lb)
                fail(ErrKind::CoreTypeError,
                     "boolean operator on a non-boolean value: " +
                         render_value(l));
            if (n.op == BinOp::And && !*lb) return Value{false};
            if (n.op == BinOp::Or && *lb) return Value{true};
            Value r = eval(n.rhs, env);
            const bool* rb = r.as<bool>();
            if (!rb)
                fail(ErrKind::CoreTypeError,
                     "boolean operator on a non-boolean value: " +
                         render_value(r));
            return Value{*rb};
        }
        Value l = eval(n.lhs, env);
        Value r = eval(n.rhs, env);
        (void)at;
        switch (n.op) {
        case BinOp::Add: {
            auto [a, b] = ints(l, r, "+");
            return Value{a + b};
        }
        case BinOp::Sub: {
            auto [a, b] = ints(l, r, "-");
            return Value{a - b};
        }
        case BinOp::Mul: {
            auto [a, b] = ints(l, r, "*");
            return Value{a * b};
        }
        case BinOp::Div: {
            auto [a, b] = ints(l, r, "/");
            if (b == 0) fail(ErrKind::CoreTypeError, "division by zero");
            return Value{a / b};
        }
        case BinOp::Concat: {
            const std::string* a = l.as<std::string>();
            const std::string* b = r.as<std::string>();
            if (!a || !b)
                fail(ErrKind::CoreTypeError,
                     "concatenation of non-string values");
            return Value{*a + *b};
        }
        case BinOp::Eq: return Value{value_equal(l, r)};
        case BinOp::Ne: return Value{!value_equal(l, r)};
        case BinOp::Lt: return Value{compare(l, r) < 0};
        case BinOp::Gt: return Value{compare(l, r) > 0};
        case BinOp::Le: return Value{compare(l, r) <= 0};
        case BinOp::Ge: return Value{compare(l, r) >= 0};
        default:
            fail(ErrKind::Internal, "unhandled binary operator");
        }
    }

    static std::pair<std::int64_t, std::int64_t>
    ints(const Value& l, const Value& r, const char* op) {
        const std::int64_t* a = l.as<std::int64_t>();
        const std::int64_t* b = r.as<std::int64_t>();
        if (!a || !b)
            fail(ErrKind::CoreTypeError,
                 std::string("arithmetic '") + op +
                     "' on non-integer values");
        return {*a, *b};
    }

    static int compare(const Value& l, const Value& r) {
        if (const auto* a = l.as<std::int64_t>()) {
            const auto* b = r.as<std::int64_t>();
            if (b) return *a < *b ? -1 : (*a > *b ? 1 : 0);
        }
        if (const auto* a = l.as<std::string>()) {
            const auto* b = r.as<std::string>();
            if (b) return a->compare(*b) < 0 ? -1 : (*a == *b ? 0 : 1);
        }
        fail(ErrKind::CoreTypeError,
             "comparison of values without an order: " + render_value(l) +
                 " and " + render_value(r));
    }

    Value apply_builtin(const std::string& name,
                        const std::vector<Value>& args) {
        auto need = [&](std::size_t k) {
            if (args.size() != k)
                fail(ErrKind::CoreTypeError,
                     name + " expects " + std::to_string(k) +
                         " argument(s), got " + std::to_string(args.size()));
        };
        auto label = [&](const Value& v) -> const std::string& {
            const std::string* s = v.as<std::string>();
            if (!s)
                fail(ErrKind::CoreTypeError,
                     name + " expects a label string");
            return *s;
        };
        auto widget = [&](const Value& v, WidgetKind k) -> const VWidget& {
            const VWidget* w = v.as<VWidget>();
            if (!w || w->handle.kind != k)
                fail(ErrKind::CoreTypeError,
                     name + " expects a " +
                         std::string(widget_kind_name(k)) + " widget");
            return *w;
        };
        if (name == "print") {
            need(1);
            effects_.emit(EffectKind::Print, render_for_print(args[0]));
            return args[0];
        }
        if (name == "ref") {
            need(1);
            return Value{VRef{effects_.store_alloc(args[0])}};
        }
        if (name == "incr") {
            need(1);
            const VRef* r = args[0].as<VRef>();
            if (!r)
                fail(ErrKind::CoreTypeError, "incr expects an int ref");
            const std::int64_t* i =
                effects_.store_read(r->cell).as<std::int64_t>();
            if (!i)
                fail(ErrKind::CoreTypeError, "incr expects an int ref");
            effects_.store_write(r->cell, Value{*i + 1});
            return Value{VUnit{}};
        }
        if (name == "createForm") {
            need(1);
            return Value{VWidget{
                effects_.widget_create(WidgetKind::Form, label(args[0]))}};
        }
        if (name == "createMenu") {
            need(1);
            return Value{VWidget{effects_.widget_create(WidgetKind::FormMenu,
                                                        label(args[0]))}};
        }
        if (name == "createMenuItem") {
            need(1);
            return Value{VWidget{effects_.widget_create(WidgetKind::MenuItem,
                                                        label(args[0]))}};
        }
        if (name == "setMenus") {
            need(2);
            return configure_children(name, widget(args[0], WidgetKind::Form),
                                      args[1], WidgetKind::FormMenu, "menus");
        }
        if (name == "setMenuItems") {
            need(2);
            return configure_children(name,
                                      widget(args[0], WidgetKind::FormMenu),
                                      args[1], WidgetKind::MenuItem, "items");
        }
        if (name == "setAction") {
            need(2);
            const VWidget& w = widget(args[0], WidgetKind::MenuItem);
            if (!args[1].is<VClosure>() && !args[1].is<VBuiltin>())
                fail(ErrKind::CoreTypeError, "setAction expects a function");
            effects_.widget(w.handle.id).action = args[1];
            effects_.emit(EffectKind::WidgetConfigure,
                          Effects::widget_ref(w.handle) + " action=<fun>");
            return Value{VUnit{}};
        }
        if (name == "toggle") {
            need(1);
            const VWidget& w = widget(args[0], WidgetKind::MenuItem);
            effects_.emit(EffectKind::WidgetToggle,
                          Effects::widget_ref(w.handle));
            WidgetRecord& rec = effects_.widget(w.handle.id);
            if (rec.action) {
                Value action = *rec.action;
                apply_value(action, Value{VUnit{}});
            }
            return Value{VUnit{}};
        }
        fail(ErrKind::Internal, "unknown builtin '" + name + "'");
    }

    Value configure_children(const std::string& fn, const VWidget& target,
                             const Value& children, WidgetKind child_kind,
                             const char* field) {
        const auto* xs = children.as<std::vector<Value>>();
        if (!xs)
            fail(ErrKind::CoreTypeError, fn + " expects a list of widgets");
        std::string payload =
            Effects::widget_ref(target.handle) + " " + field + "=[";
        bool first = true;
        for (const auto& c : *xs) {
            const VWidget* w = c.as<VWidget>();
            if (!w || w->handle.kind != child_kind)
                fail(ErrKind::CoreTypeError,
                     fn + " expects a list of " +
                         std::string(widget_kind_name(child_kind)) +
                         " widgets");
            if (!first) payload += ", ";
            first = false;
            payload += Effects::widget_ref(w->handle);
        }
        payload += "]";
        effects_.emit(EffectKind::WidgetConfigure, payload);
        return Value{VUnit{}};
    }

    // ------------------------------------------------------------- plumbing

    static StructPtr as_struct(const Value& v, const char* op) {
        if (const auto* s = v.as<StructPtr>()) return *s;
        fail(ErrKind::CoreTypeError,
             std::string(op) + " applied to a non-mixin value: " +
                 render_value(v));
    }

    // Lambda/let locals referenced by a body that outlives its environment
    // (a literal component or a freeze tying) are pinned into heap cells.
    ExprPtr capture_env(const ExprPtr& e, const EnvPtr& env) {
        if (!env || !e) return e;
        IdentSubst capture;
        for (const auto& f : free_idents(e)) {
            if (capture.count(f.uid)) continue;
            if (const Value* v = env_lookup(env, f.uid))
                capture.emplace(f.uid,
                                mk_expr(LocRef{heap_.alloc_value(*v)}));
        }
        return subst_idents(e, capture);
    }

    void tick() {
        if (++steps_ > budget_)
            fail(ErrKind::StepBudgetExceeded,
                 "step budget of " + std::to_string(budget_) + " exhausted");
    }

    StrategyPtr strategy_;
    Variant variant_;
    Effects& effects_;
    Heap heap_;
    std::uint64_t budget_;
    std::uint64_t steps_ = 0;
    std::map<std::uint64_t, std::uint64_t> eval_counts_;
};

} // namespace lyre
