#pragma once
// Statement tensor and its matricized views.
//
// The tensor indexes every non-derived statement of a snapshot by
// (subject, predicate, object) position; duplicate triples from different
// sources aggregate by max. Observation hubs are unrolled first so that a
// patient connects directly to attribute/value pairs: a hub with facets
// ofPatient P, hasAttribute A, hasValue V contributes entry (P, A, V).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lhc/error.hpp"
#include "lhc/ingestion.hpp"
#include "lhc/store.hpp"

namespace lhc {

using SparseVector = std::vector<std::pair<std::uint32_t, double>>;  // sorted by column

class ModeIndex {
public:
    ModeIndex() = default;
    explicit ModeIndex(std::vector<TermId> ids) : ids_(std::move(ids)) {
        std::sort(ids_.begin(), ids_.end());
        ids_.erase(std::unique(ids_.begin(), ids_.end()), ids_.end());
        for (std::uint32_t i = 0; i < ids_.size(); ++i) pos_.emplace(ids_[i], i);
    }
    std::size_t size() const { return ids_.size(); }
    const TermId& id(std::uint32_t i) const { return ids_[i]; }
    const std::vector<TermId>& ids() const { return ids_; }
    std::optional<std::uint32_t> find(const TermId& id) const {
        auto it = pos_.find(id);
        if (it == pos_.end()) return std::nullopt;
        return it->second;
    }

private:
    std::vector<TermId> ids_;
    std::unordered_map<TermId, std::uint32_t> pos_;
};

struct StatementTensor {
    using Coord = std::array<std::uint32_t, 3>;

    ModeIndex subjects;
    ModeIndex predicates;
    ModeIndex objects;
    std::map<Coord, double> entries;

    std::array<std::size_t, 3> dims() const { return {subjects.size(), predicates.size(), objects.size()}; }

    std::optional<double> at(const TermId& s, const TermId& p, const TermId& o) const {
        auto si = subjects.find(s), pi = predicates.find(p), oi = objects.find(o);
        if (!si || !pi || !oi) return std::nullopt;
        auto it = entries.find({*si, *pi, *oi});
        if (it == entries.end()) return std::nullopt;
        return it->second;
    }

    // Multiplies every entry by `factor`; used by scaling-invariance checks.
    StatementTensor scaled(double factor) const {
        StatementTensor t = *this;
        for (auto& [c, w] : t.entries) w *= factor;
        return t;
    }
};

struct Triple {
    TermId subject, predicate, object;
    double weight;
};

// Analysable triples of a snapshot: derived statements dropped, hubs unrolled.
inline std::vector<Triple> unrolled_triples(const Snapshot& snap) {
    std::vector<Triple> out;
    struct HubFacets {
        std::optional<std::pair<TermId, double>> patient, attribute, value;
    };
    std::map<TermId, HubFacets> hubs;
    const auto of_patient = vocab::id(vocab::of_patient);
    const auto has_attribute = vocab::id(vocab::has_attribute);
    const auto has_value = vocab::id(vocab::has_value);
    auto is_hub = [&](const TermId& id) {
        const auto* t = snap.find_term(id);
        return t && t->kind == TermKind::observation_hub;
    };
    for (const auto& s : snap.statements()) {
        if (snap.source_category(s.provenance) == SourceCategory::derived) continue;
        if (is_hub(s.subject)) {
            auto& h = hubs[s.subject];
            auto keep = [&](std::optional<std::pair<TermId, double>>& slot) {
                // Several facets of one kind: keep the strongest, then smallest id.
                if (!slot || s.weight > slot->second || (s.weight == slot->second && s.object < slot->first))
                    slot = std::make_pair(s.object, s.weight);
            };
            if (s.predicate == of_patient) keep(h.patient);
            else if (s.predicate == has_attribute) keep(h.attribute);
            else if (s.predicate == has_value) keep(h.value);
            continue;
        }
        if (is_hub(s.object)) continue;
        out.push_back({s.subject, s.predicate, s.object, s.weight});
    }
    for (const auto& [hub, f] : hubs) {
        if (!f.patient || !f.attribute || !f.value) continue;
        double w = std::min({f.patient->second, f.attribute->second, f.value->second});
        out.push_back({f.patient->first, f.attribute->first, f.value->first, w});
    }
    return out;
}

inline StatementTensor tensor_from_triples(const std::vector<Triple>& triples) {
    if (triples.empty()) throw EmptySnapshot();
    std::vector<TermId> s, p, o;
    for (const auto& t : triples) {
        s.push_back(t.subject);
        p.push_back(t.predicate);
        o.push_back(t.object);
    }
    StatementTensor tensor{ModeIndex(std::move(s)), ModeIndex(std::move(p)), ModeIndex(std::move(o)), {}};
    for (const auto& t : triples) {
        StatementTensor::Coord c{*tensor.subjects.find(t.subject), *tensor.predicates.find(t.predicate),
                                 *tensor.objects.find(t.object)};
        auto [it, inserted] = tensor.entries.emplace(c, t.weight);
        if (!inserted) it->second = std::max(it->second, t.weight);
    }
    return tensor;
}

inline StatementTensor build_tensor(const Snapshot& snap) {
    if (snap.empty()) throw EmptySnapshot();
    return tensor_from_triples(unrolled_triples(snap));
}

enum class ViewMode { subject_rows, object_rows };

// Matricized tensor: rows are one argument mode, columns are
// (predicate, other-argument) pairs sorted by id.
struct MatrixView {
    ViewMode mode = ViewMode::subject_rows;
    ModeIndex rows;
    std::vector<std::pair<TermId, TermId>> columns;
    std::vector<SparseVector> values;  // one per row

    std::size_t n_rows() const { return rows.size(); }
    std::size_t n_cols() const { return columns.size(); }

    const SparseVector& row(const TermId& id) const {
        auto i = rows.find(id);
        if (!i) throw UnknownTerm(id);
        return values[*i];
    }

    double at(std::uint32_t r, std::uint32_t c) const {
        const auto& v = values[r];
        auto it = std::lower_bound(v.begin(), v.end(), std::make_pair(c, -1.0));
        return (it != v.end() && it->first == c) ? it->second : 0.0;
    }

    std::vector<std::vector<double>> dense() const {
        std::vector<std::vector<double>> m(n_rows(), std::vector<double>(n_cols(), 0.0));
        for (std::size_t r = 0; r < n_rows(); ++r)
            for (const auto& [c, v] : values[r]) m[r][c] = v;
        return m;
    }
};

inline MatrixView make_view(const StatementTensor& t, ViewMode mode) {
    const ModeIndex& row_mode = mode == ViewMode::subject_rows ? t.subjects : t.objects;
    const ModeIndex& other_mode = mode == ViewMode::subject_rows ? t.objects : t.subjects;
    std::map<std::pair<TermId, TermId>, std::uint32_t> col_pos;
    for (const auto& [c, w] : t.entries) {
        auto other = mode == ViewMode::subject_rows ? c[2] : c[0];
        col_pos.emplace(std::make_pair(t.predicates.id(c[1]), other_mode.id(other)), 0);
    }
    MatrixView view;
    view.mode = mode;
    view.rows = row_mode;
    std::uint32_t next = 0;
    for (auto& [key, pos] : col_pos) {
        pos = next++;
        view.columns.push_back(key);
    }
    view.values.assign(row_mode.size(), {});
    for (const auto& [c, w] : t.entries) {
        auto row = mode == ViewMode::subject_rows ? c[0] : c[2];
        auto other = mode == ViewMode::subject_rows ? c[2] : c[0];
        auto col = col_pos.at({t.predicates.id(c[1]), other_mode.id(other)});
        view.values[row].emplace_back(col, w);
    }
    for (auto& v : view.values) std::sort(v.begin(), v.end());
    return view;
}

}  // namespace lhc
