#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "crashprob/csv.hpp"
#include "crashprob/measures.hpp"
#include "crashprob/model_io.hpp"
#include "crashprob/nested_logit.hpp"
#include "crashprob/scores.hpp"
#include "crashprob/types.hpp"

namespace py = pybind11;
using namespace crashprob;

PYBIND11_MODULE(_core, m) {
    m.doc() = "Accident-probability modeling primitives: friction, safety scores, "
              "nested-logit probabilities and sampling weights.";

    py::register_exception<ValidationError>(m, "ValidationError");
    py::register_exception<NumericError>(m, "NumericError");

    py::enum_<Outcome>(m, "Outcome")
        .value("NA", Outcome::na)
        .value("RE", Outcome::re)
        .value("LC", Outcome::lc)
        .value("ROR", Outcome::ror);
    py::enum_<Surface>(m, "Surface").value("DRY", Surface::dry).value("WET", Surface::wet);
    py::enum_<VehicleType>(m, "VehicleType")
        .value("CAR", VehicleType::car)
        .value("HEAVY", VehicleType::heavy);

    py::class_<FrictionConfig>(m, "FrictionConfig")
        .def(py::init<>())
        .def_readwrite("dry_long_at_0", &FrictionConfig::dry_long_at_0)
        .def_readwrite("dry_long_at_vmax", &FrictionConfig::dry_long_at_vmax)
        .def_readwrite("wet_long_at_0", &FrictionConfig::wet_long_at_0)
        .def_readwrite("wet_long_at_vmax", &FrictionConfig::wet_long_at_vmax)
        .def_readwrite("vmax", &FrictionConfig::vmax)
        .def_readwrite("lateral_factor", &FrictionConfig::lateral_factor)
        .def_readwrite("heavy_dry_factor", &FrictionConfig::heavy_dry_factor)
        .def_readwrite("g", &FrictionConfig::g)
        .def_readwrite("lc_peak_factor", &FrictionConfig::lc_peak_factor);

    py::class_<ScalingConfig>(m, "ScalingConfig")
        .def(py::init<>())
        .def_readwrite("rg_scale", &ScalingConfig::rg_scale)
        .def_readwrite("dalat_scale", &ScalingConfig::dalat_scale);

    py::class_<ModelParameters>(m, "ModelParameters")
        .def(py::init<>())
        .def_readwrite("beta_re", &ModelParameters::beta_re)
        .def_readwrite("beta_lc", &ModelParameters::beta_lc)
        .def_readwrite("beta_ror", &ModelParameters::beta_ror)
        .def_readwrite("mu", &ModelParameters::mu)
        .def_readwrite("free_mask", &ModelParameters::free_mask)
        .def("coefficient", &ModelParameters::coefficient)
        .def("set_coefficient", &ModelParameters::set_coefficient)
        .def("n_free_coefficients", &ModelParameters::n_free_coefficients);

    py::class_<FeatureVector>(m, "FeatureVector")
        .def(py::init<>())
        .def_readwrite("ra_need_pos", &FeatureVector::ra_need_pos)
        .def_readwrite("ra_need_neg", &FeatureVector::ra_need_neg)
        .def_readwrite("ra_lim", &FeatureVector::ra_lim)
        .def_readwrite("rg_lag_pos", &FeatureVector::rg_lag_pos)
        .def_readwrite("rg_lag_neg", &FeatureVector::rg_lag_neg)
        .def_readwrite("rg_lead_pos", &FeatureVector::rg_lead_pos)
        .def_readwrite("rg_lead_neg", &FeatureVector::rg_lead_neg)
        .def_readwrite("dalat_pos", &FeatureVector::dalat_pos)
        .def_readwrite("dalat_neg", &FeatureVector::dalat_neg)
        .def_readwrite("avail_re", &FeatureVector::avail_re)
        .def_readwrite("avail_lc", &FeatureVector::avail_lc)
        .def_readwrite("avail_ror", &FeatureVector::avail_ror);

    py::class_<ScoreVector>(m, "ScoreVector")
        .def(py::init<>())
        .def_readwrite("v_na", &ScoreVector::v_na)
        .def_readwrite("v_re", &ScoreVector::v_re)
        .def_readwrite("v_lc", &ScoreVector::v_lc)
        .def_readwrite("v_ror", &ScoreVector::v_ror)
        .def_readwrite("avail", &ScoreVector::avail)
        .def("value", &ScoreVector::value)
        .def("available", &ScoreVector::available);

    py::class_<SamplingWeights>(m, "SamplingWeights")
        .def(py::init<>())
        .def_readwrite("w", &SamplingWeights::w)
        .def("of", &SamplingWeights::of);

    m.def("mu_long", &mu_long, py::arg("speed"), py::arg("vehicle_type"), py::arg("surface"),
          py::arg("friction") = FrictionConfig{},
          "Speed-dependent longitudinal friction coefficient.");
    m.def("scale_features", &scale_features, py::arg("features"), py::arg("scaling"));
    m.def("score_observation", &score_observation, py::arg("features"), py::arg("params"),
          py::arg("scaling") = ScalingConfig{},
          "Scale raw features and evaluate the per-outcome safety scores.");
    m.def("nl_probabilities", &nl_probabilities, py::arg("scores"), py::arg("mu"),
          "Outcome probabilities under the nested structure (accident types share one nest).");
    m.def("aggregate_cell", &aggregate_cell, py::arg("member_probs"),
          "Mean member probabilities of one cell.");
    m.def("sampling_weights", &sampling_weights, py::arg("population_counts"),
          py::arg("sample_counts"),
          "Choice-based sampling correction weights (population share / sample share).");
    m.def(
        "load_model",
        [](const std::string& path) {
            ModelFile f = load_model(path);
            return py::make_tuple(f.params, f.scaling, f.friction);
        },
        py::arg("path"), "Load (parameters, scaling, friction) from a saved model file.");
}
