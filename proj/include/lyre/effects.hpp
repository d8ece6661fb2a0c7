#pragma once

// Observable effects: the ordered effect trace (the oracle for evaluation-
// order tests), the store backing ref cells, and the widget registry used by
// the GUI builtins.  Widgets are logging stubs: creation and configuration
// append trace events, and a stored action closure can be dispatched later
// by `toggle`.

#include <cstdint>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lyre/value.hpp"

namespace lyre {

enum class EffectKind { Print, WidgetCreate, WidgetConfigure, WidgetToggle };

inline const char* effect_kind_name(EffectKind k) {
    switch (k) {
    case EffectKind::Print:           return "print";
    case EffectKind::WidgetCreate:    return "widget-create";
    case EffectKind::WidgetConfigure: return "widget-configure";
    case EffectKind::WidgetToggle:    return "widget-toggle";
    }
    return "print";
}

struct EffectEvent {
    std::uint64_t seq = 0;
    EffectKind kind = EffectKind::Print;
    std::string payload;
};

inline std::string serialize_event(const EffectEvent& e) {
    return std::to_string(e.seq) + "\t" + effect_kind_name(e.kind) + "\t" +
           e.payload;
}

struct WidgetRecord {
    WidgetHandle handle;
    std::optional<Value> action; // stored by setAction, run by toggle
};

// Per-evaluation effect state.  Deterministic: sequence numbers and widget
// ids restart at 1 for every evaluation.
class Effects {
public:
    std::function<void(const EffectEvent&)> on_event; // optional streaming

    const std::vector<EffectEvent>& trace() const { return trace_; }

    std::vector<std::string> print_payloads() const {
        std::vector<std::string> out;
        for (const auto& e : trace_)
            if (e.kind == EffectKind::Print) out.push_back(e.payload);
        return out;
    }

    void emit(EffectKind kind, std::string payload) {
        EffectEvent e{++seq_, kind, std::move(payload)};
        trace_.push_back(e);
        if (on_event) on_event(trace_.back());
    }

    // ---- ref cells -------------------------------------------------------
    std::size_t store_alloc(Value v) {
        store_.push_back(std::move(v));
        return store_.size() - 1;
    }
    const Value& store_read(std::size_t cell) const {
        if (cell >= store_.size())
            fail(ErrKind::Internal, "dangling ref cell");
        return store_[cell];
    }
    void store_write(std::size_t cell, Value v) {
        if (cell >= store_.size())
            fail(ErrKind::Internal, "dangling ref cell");
        store_[cell] = std::move(v);
    }

    // ---- widgets ---------------------------------------------------------
    WidgetHandle widget_create(WidgetKind kind, const std::string& label) {
        WidgetHandle h{kind, ++widget_ids_, label};
        widgets_.push_back(WidgetRecord{h, std::nullopt});
        emit(EffectKind::WidgetCreate,
             widget_ref(h) + " label=" + label);
        return h;
    }
    WidgetRecord& widget(std::uint64_t id) {
        if (id == 0 || id > widgets_.size())
            fail(ErrKind::Internal, "dangling widget handle");
        return widgets_[id - 1];
    }

    static std::string widget_ref(const WidgetHandle& h) {
        return std::string(widget_kind_name(h.kind)) + "#" +
               std::to_string(h.id);
    }

private:
    std::vector<EffectEvent> trace_;
    std::vector<Value> store_;
    std::vector<WidgetRecord> widgets_;
    std::uint64_t seq_ = 0;
    std::uint64_t widget_ids_ = 0;
};

} // namespace lyre
