#pragma once

#include <string>

#include "crashprob/estimation.hpp"
#include "crashprob/measures.hpp"
#include "crashprob/types.hpp"

namespace crashprob {

/// Self-describing saved model: coefficients, nest scale, free mask,
/// feature scaling and friction configuration, plus estimation statistics
/// when the model came out of a fit.
struct ModelFile {
    ModelParameters params;
    ScalingConfig scaling;
    FrictionConfig friction;

    bool has_fit = false;
    double loglik_initial = 0;
    double loglik_final = 0;
    double rho2 = 0;
    double rho2_adjusted = 0;
    std::int64_t n_obs = 0;
    std::int64_t n_cells = 0;
    int n_parameters = 0;
    bool converged = false;
    int iterations = 0;
    bool se_valid = false;
    std::string se_warning;
    std::vector<double> std_errors;  // per free coefficient, then mu
    std::vector<double> t_stats;
    std::vector<double> p_values;

    static ModelFile from_estimation(const EstimationResult& r, const FrictionConfig& friction);
};

/// Stable-ordered JSON text; serialize(parse(text)) is byte-identical.
std::string serialize_model(const ModelFile& model);
ModelFile parse_model(const std::string& text, const std::string& path = "<model>");

void save_model(const std::string& path, const ModelFile& model);
ModelFile load_model(const std::string& path);

}  // namespace crashprob
