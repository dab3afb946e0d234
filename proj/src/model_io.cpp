#include "crashprob/model_io.hpp"

#include <json.hpp>

#include "crashprob/csv.hpp"
#include "crashprob/nested_logit.hpp"

namespace crashprob {

using ordered_json = nlohmann::ordered_json;

ModelFile ModelFile::from_estimation(const EstimationResult& r, const FrictionConfig& friction) {
    ModelFile m;
    m.params = r.params;
    m.scaling = r.scaling;
    m.friction = friction;
    m.has_fit = true;
    m.loglik_initial = r.loglik_initial;
    m.loglik_final = r.loglik_final;
    m.rho2 = r.rho2;
    m.rho2_adjusted = r.rho2_adjusted;
    m.n_obs = r.n_obs;
    m.n_cells = r.n_cells;
    m.n_parameters = r.n_parameters;
    m.converged = r.converged;
    m.iterations = r.iterations;
    m.se_valid = r.se_valid;
    m.se_warning = r.se_warning;
    m.std_errors = r.std_errors;
    m.t_stats = r.t_stats;
    m.p_values = r.p_values;
    return m;
}

std::string serialize_model(const ModelFile& m) {
    ordered_json j;
    j["format"] = "crashprob-model";
    j["version"] = 1;
    j["coefficients"] = {
        {"re", m.params.beta_re},
        {"lc", m.params.beta_lc},
        {"ror", m.params.beta_ror},
    };
    j["mu"] = m.params.mu;
    j["free_mask"] = m.params.free_mask;
    j["scaling"] = {
        {"rg_scale", m.scaling.rg_scale},
        {"dalat_scale", m.scaling.dalat_scale},
    };
    const FrictionConfig& f = m.friction;
    j["friction"] = {
        {"dry_long_at_0", f.dry_long_at_0},
        {"dry_long_at_vmax", f.dry_long_at_vmax},
        {"wet_long_at_0", f.wet_long_at_0},
        {"wet_long_at_vmax", f.wet_long_at_vmax},
        {"vmax", f.vmax},
        {"lateral_factor", f.lateral_factor},
        {"heavy_dry_factor", f.heavy_dry_factor},
        {"g", f.g},
        {"lc_peak_factor", f.lc_peak_factor},
    };
    if (m.has_fit) {
        ordered_json fit;
        fit["loglik_initial"] = m.loglik_initial;
        fit["loglik_final"] = m.loglik_final;
        fit["rho2"] = m.rho2;
        fit["rho2_adjusted"] = m.rho2_adjusted;
        fit["n_obs"] = m.n_obs;
        fit["n_cells"] = m.n_cells;
        fit["n_parameters"] = m.n_parameters;
        fit["converged"] = m.converged;
        fit["iterations"] = m.iterations;
        fit["se_valid"] = m.se_valid;
        fit["se_warning"] = m.se_warning;
        fit["std_errors"] = m.std_errors;
        fit["t_stats"] = m.t_stats;
        fit["p_values"] = m.p_values;
        j["fit"] = std::move(fit);
    }
    return j.dump(2) + "\n";
}

namespace {

[[noreturn]] void bad_model(const std::string& path, const std::string& message) {
    throw ValidationError(path + ": " + message);
}

template <class T, std::size_t N>
void read_array(const ordered_json& j, const char* key, std::array<T, N>& out,
                const std::string& path) {
    if (!j.contains(key) || !j[key].is_array() || j[key].size() != N) {
        bad_model(path, std::string("expected '") + key + "' to be an array of " +
                            std::to_string(N) + " entries");
    }
    for (std::size_t i = 0; i < N; ++i) out[i] = j[key][i].get<T>();
}

}  // namespace

ModelFile parse_model(const std::string& text, const std::string& path) {
    ordered_json j = ordered_json::parse(text, nullptr, false);
    if (j.is_discarded()) bad_model(path, "not valid JSON");
    if (!j.contains("format") || j["format"] != "crashprob-model") {
        bad_model(path, "missing or unknown 'format' (expected crashprob-model)");
    }
    if (!j.contains("version") || j["version"] != 1) {
        bad_model(path, "unsupported model version");
    }
    ModelFile m;
    if (!j.contains("coefficients")) bad_model(path, "missing 'coefficients'");
    const ordered_json& c = j["coefficients"];
    read_array(c, "re", m.params.beta_re, path);
    read_array(c, "lc", m.params.beta_lc, path);
    read_array(c, "ror", m.params.beta_ror, path);
    if (!j.contains("mu") || !j["mu"].is_number()) bad_model(path, "missing numeric 'mu'");
    m.params.mu = j["mu"].get<double>();
    if (!(m.params.mu >= 1.0)) bad_model(path, "nest scale mu must be >= 1");
    read_array(j, "free_mask", m.params.free_mask, path);
    if (!j.contains("scaling")) bad_model(path, "missing 'scaling'");
    m.scaling.rg_scale = j["scaling"].at("rg_scale").get<double>();
    m.scaling.dalat_scale = j["scaling"].at("dalat_scale").get<double>();
    if (!j.contains("friction")) bad_model(path, "missing 'friction'");
    const ordered_json& f = j["friction"];
    FrictionConfig& fc = m.friction;
    try {
        fc.dry_long_at_0 = f.at("dry_long_at_0").get<double>();
        fc.dry_long_at_vmax = f.at("dry_long_at_vmax").get<double>();
        fc.wet_long_at_0 = f.at("wet_long_at_0").get<double>();
        fc.wet_long_at_vmax = f.at("wet_long_at_vmax").get<double>();
        fc.vmax = f.at("vmax").get<double>();
        fc.lateral_factor = f.at("lateral_factor").get<double>();
        fc.heavy_dry_factor = f.at("heavy_dry_factor").get<double>();
        fc.g = f.at("g").get<double>();
        fc.lc_peak_factor = f.at("lc_peak_factor").get<double>();
    } catch (const ordered_json::exception&) {
        bad_model(path, "friction block is incomplete");
    }
    if (!(fc.vmax > 0)) bad_model(path, "friction vmax must be > 0");
    if (j.contains("fit")) {
        const ordered_json& fit = j["fit"];
        m.has_fit = true;
        try {
            m.loglik_initial = fit.at("loglik_initial").get<double>();
            m.loglik_final = fit.at("loglik_final").get<double>();
            m.rho2 = fit.at("rho2").get<double>();
            m.rho2_adjusted = fit.at("rho2_adjusted").get<double>();
            m.n_obs = fit.at("n_obs").get<std::int64_t>();
            m.n_cells = fit.at("n_cells").get<std::int64_t>();
            m.n_parameters = fit.at("n_parameters").get<int>();
            m.converged = fit.at("converged").get<bool>();
            m.iterations = fit.at("iterations").get<int>();
            m.se_valid = fit.at("se_valid").get<bool>();
            m.se_warning = fit.at("se_warning").get<std::string>();
            m.std_errors = fit.at("std_errors").get<std::vector<double>>();
            m.t_stats = fit.at("t_stats").get<std::vector<double>>();
            m.p_values = fit.at("p_values").get<std::vector<double>>();
        } catch (const ordered_json::exception&) {
            bad_model(path, "fit block is incomplete");
        }
        std::size_t expected = static_cast<std::size_t>(m.params.n_free_coefficients()) + 1;
        if (m.se_valid && m.std_errors.size() != expected) {
            bad_model(path, "std_errors length does not match the free parameter count");
        }
    }
    return m;
}

void save_model(const std::string& path, const ModelFile& model) {
    write_file(path, serialize_model(model));
}

ModelFile load_model(const std::string& path) {
    return parse_model(read_file(path), path);
}

}  // namespace crashprob
