#pragma once

// Runtime values of the core language plus structure values, and the
// rendering used by `result:` lines and trace payloads.

#include <cstdint>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "lyre/ast.hpp"

namespace lyre {

struct Value;

// Environments bind lambda/let identifiers (by uid) to values.  Component
// identifiers never appear here: close substitutes locations for them.
struct Env {
    std::uint64_t uid;
    std::shared_ptr<const Value> value;
    std::shared_ptr<const Env> next;
};
using EnvPtr = std::shared_ptr<const Env>;

enum class WidgetKind { Form, FormMenu, MenuItem };

inline const char* widget_kind_name(WidgetKind k) {
    switch (k) {
    case WidgetKind::Form:     return "form";
    case WidgetKind::FormMenu: return "formMenu";
    case WidgetKind::MenuItem: return "menuItem";
    }
    return "form";
}

struct WidgetHandle {
    WidgetKind kind = WidgetKind::Form;
    std::uint64_t id = 0;
    std::string label;
};

struct VUnit {};
struct VClosure {
    Ident param;
    bool unit_param = false;
    ExprPtr body;
    EnvPtr env;
};
struct VRef { std::size_t cell = 0; };        // index into the core store
struct VBuiltin { std::string name; };
struct VWidget { WidgetHandle handle; };

struct Value {
    using Rep = std::variant<std::int64_t, std::string, bool, VUnit,
                             std::vector<Value>, VClosure, VRef, VBuiltin,
                             VWidget, StructPtr>;
    Rep rep;

    Value() : rep(VUnit{}) {}
    template <class T>
    Value(T v) : rep(std::move(v)) {}

    template <class T> const T* as() const { return std::get_if<T>(&rep); }
    template <class T> bool is() const { return std::holds_alternative<T>(rep); }
};

inline EnvPtr env_bind(EnvPtr env, const Ident& id, Value v) {
    auto node = std::make_shared<Env>();
    node->uid = id.uid;
    node->value = std::make_shared<Value>(std::move(v));
    node->next = std::move(env);
    return node;
}

inline const Value* env_lookup(const EnvPtr& env, std::uint64_t uid) {
    for (const Env* n = env.get(); n; n = n->next.get())
        if (n->uid == uid) return n->value.get();
    return nullptr;
}

// ------------------------------------------------------------------ render

inline std::string render_value(const Value& v);

namespace detail {

inline std::string quote_string(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        switch (c) {
        case '"':  out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\t': out += "\\t"; break;
        default:   out += c;
        }
    }
    out += "\"";
    return out;
}

} // namespace detail

inline std::string render_value(const Value& v) {
    return std::visit(
        [](const auto& x) -> std::string {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, std::int64_t>) {
                return std::to_string(x);
            } else if constexpr (std::is_same_v<T, std::string>) {
                return detail::quote_string(x);
            } else if constexpr (std::is_same_v<T, bool>) {
                return x ? "true" : "false";
            } else if constexpr (std::is_same_v<T, VUnit>) {
                return "()";
            } else if constexpr (std::is_same_v<T, std::vector<Value>>) {
                std::string out = "[";
                for (std::size_t i = 0; i < x.size(); ++i) {
                    if (i) out += "; ";
                    out += render_value(x[i]);
                }
                return out + "]";
            } else if constexpr (std::is_same_v<T, VClosure>) {
                return "<fun>";
            } else if constexpr (std::is_same_v<T, VRef>) {
                return "<ref>";
            } else if constexpr (std::is_same_v<T, VBuiltin>) {
                return "<builtin:" + x.name + ">";
            } else if constexpr (std::is_same_v<T, VWidget>) {
                return "<" + std::string(widget_kind_name(x.handle.kind)) +
                       "#" + std::to_string(x.handle.id) + ">";
            } else {
                // structure: sorted output names
                std::string out = "<mixin: ";
                bool first = true;
                for (const auto& [nm, id] : x->output) {
                    if (!first) out += ",";
                    first = false;
                    out += nm.text;
                }
                return out + ">";
            }
        },
        v.rep);
}

// Payload form used by print: bare text for strings (print_string behaviour),
// the rendered form for everything else.
inline std::string render_for_print(const Value& v) {
    if (const auto* s = v.as<std::string>()) return *s;
    return render_value(v);
}

// Structural equality on data values; closures, builtins, and structures
// refuse comparison.
inline bool value_equal(const Value& a, const Value& b) {
    if (const auto* x = a.as<std::int64_t>()) {
        const auto* y = b.as<std::int64_t>();
        return y && *x == *y;
    }
    if (const auto* x = a.as<std::string>()) {
        const auto* y = b.as<std::string>();
        return y && *x == *y;
    }
    if (const auto* x = a.as<bool>()) {
        const auto* y = b.as<bool>();
        return y && *x == *y;
    }
    if (a.is<VUnit>()) return b.is<VUnit>();
    if (const auto* x = a.as<std::vector<Value>>()) {
        const auto* y = b.as<std::vector<Value>>();
        if (!y || x->size() != y->size()) return false;
        for (std::size_t i = 0; i < x->size(); ++i)
            if (!value_equal((*x)[i], (*y)[i])) return false;
        return true;
    }
    if (const auto* x = a.as<VRef>()) {
        const auto* y = b.as<VRef>();
        return y && x->cell == y->cell;
    }
    if (const auto* x = a.as<VWidget>()) {
        const auto* y = b.as<VWidget>();
        return y && x->handle.id == y->handle.id;
    }
    fail(ErrKind::CoreTypeError,
         "values of this shape cannot be compared: " + render_value(a));
}

} // namespace lyre
