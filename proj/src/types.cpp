#include "crashprob/types.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "crashprob/csv.hpp"

namespace crashprob {

const char* outcome_name(Outcome k) {
    switch (k) {
        case Outcome::na: return "NA";
        case Outcome::re: return "RE";
        case Outcome::lc: return "LC";
        case Outcome::ror: return "ROR";
    }
    throw std::logic_error("bad outcome");
}

Outcome parse_outcome(const std::string& name) {
    for (Outcome k : kAllOutcomes) {
        if (name == outcome_name(k)) return k;
    }
    throw ValidationError("unknown outcome '" + name + "', expected NA, RE, LC or ROR");
}

const char* surface_name(Surface s) {
    return s == Surface::dry ? "dry" : "wet";
}

Surface parse_surface(const std::string& name) {
    if (name == "dry") return Surface::dry;
    if (name == "wet") return Surface::wet;
    throw ValidationError("unknown surface '" + name + "', expected dry or wet");
}

const char* coefficient_name(int index) {
    static const char* names[kNumCoefficients] = {
        "re.b0", "re.b1", "re.b2", "re.b3",  //
        "lc.b0", "lc.b1", "lc.b2", "lc.b3", "lc.b4",
        "ror.b0", "ror.b1", "ror.b2"};
    if (index < 0 || index >= kNumCoefficients) throw std::out_of_range("coefficient index");
    return names[index];
}

double ModelParameters::coefficient(int index) const {
    if (index < 4) return beta_re[static_cast<std::size_t>(index)];
    if (index < 9) return beta_lc[static_cast<std::size_t>(index - 4)];
    if (index < kNumCoefficients) return beta_ror[static_cast<std::size_t>(index - 9)];
    throw std::out_of_range("coefficient index");
}

void ModelParameters::set_coefficient(int index, double value) {
    if (index < 4) {
        beta_re[static_cast<std::size_t>(index)] = value;
    } else if (index < 9) {
        beta_lc[static_cast<std::size_t>(index - 4)] = value;
    } else if (index < kNumCoefficients) {
        beta_ror[static_cast<std::size_t>(index - 9)] = value;
    } else {
        throw std::out_of_range("coefficient index");
    }
}

int ModelParameters::n_free_coefficients() const {
    int n = 0;
    for (bool f : free_mask) n += f ? 1 : 0;
    return n;
}

std::string CellKey::label() const {
    return event_id + "/r" + format_int(replication) + "/s" + format_int(s_index) + "/p" +
           format_int(p_index);
}

std::vector<std::pair<CellKey, std::vector<std::size_t>>> build_cells(
    std::span<const VehicleObservation> observations, const EventRecord& event) {
    std::vector<std::pair<CellKey, std::vector<std::size_t>>> cells;
    for (std::size_t i = 0; i < observations.size(); ++i) {
        const VehicleObservation& obs = observations[i];
        int s = static_cast<int>(
            std::floor((event.anchor_position - obs.position) / event.cell_length));
        int p =
            static_cast<int>(std::floor((event.anchor_time - obs.time) / event.cell_duration));
        if (s != 0 || p != 0) continue;
        CellKey key{event.event_id, obs.replication, s, p};
        auto it = std::find_if(cells.begin(), cells.end(),
                               [&](const auto& c) { return c.first == key; });
        if (it == cells.end()) {
            cells.emplace_back(key, std::vector<std::size_t>{i});
        } else {
            it->second.push_back(i);
        }
    }
    if (cells.empty()) {
        throw ValidationError("no observations in event window for event '" + event.event_id +
                              "'");
    }
    return cells;
}

}  // namespace crashprob
