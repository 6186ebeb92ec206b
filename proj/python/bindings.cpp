#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "difflab/estimators.hpp"
#include "difflab/evaluation.hpp"
#include "difflab/gaussian.hpp"
#include "difflab/guidance.hpp"
#include "difflab/losses.hpp"
#include "difflab/persistence.hpp"
#include "difflab/samplers.hpp"
#include "difflab/training.hpp"

namespace py = pybind11;
using namespace difflab;

namespace {

std::vector<Vec> final_states(const std::vector<Trajectory>& chains) {
  std::vector<Vec> out;
  out.reserve(chains.size());
  for (const auto& tr : chains) out.push_back(tr.back());
  return out;
}

// Guidance config holding the classifier by value, so Python never sees a raw pointer.
struct PyGuidance {
  GuidanceMode mode = GuidanceMode::kNone;
  double scale = 0.0;
  std::optional<int> target;
  std::optional<Classifier> classifier;

  GuidanceConfig view() const {
    return GuidanceConfig{mode, scale, target, classifier ? &*classifier : nullptr};
  }
};

}  // namespace

PYBIND11_MODULE(_difflab, m) {
  m.doc() = "Bindings for the difflab C++ core";
  m.attr("__version__") = "0.1.0";

  auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ValidationError>(m, "ValidationError", error.ptr());
  py::register_exception<DimensionError>(m, "DimensionError", error.ptr());
  py::register_exception<ParseError>(m, "ParseError", error.ptr());

  py::class_<Rng>(m, "Rng")
      .def(py::init<std::uint64_t, std::uint64_t>(), py::arg("seed"), py::arg("stream") = 0)
      .def_property_readonly("seed", &Rng::seed)
      .def_property_readonly("stream", &Rng::stream)
      .def("uniform", &Rng::uniform)
      .def("normal", &Rng::normal)
      .def("normal_vector", &Rng::normal_vector, py::arg("dim"))
      .def_property_readonly("normal_draws", &Rng::normal_draws);

  // Schedules.
  py::enum_<ScheduleKind>(m, "ScheduleKind").value("linear", ScheduleKind::kLinear).value("cosine", ScheduleKind::kCosine);
  py::class_<Schedule>(m, "Schedule")
      .def(py::init<std::vector<double>>(), py::arg("betas"))
      .def_property_readonly("steps", &Schedule::steps)
      .def_property_readonly("kind", [](const Schedule& s) { return s.spec().kind; })
      .def("beta", &Schedule::beta, py::arg("t"))
      .def("alpha", &Schedule::alpha, py::arg("t"))
      .def("alpha_bar", &Schedule::alpha_bar, py::arg("t"))
      .def("beta_tilde", &Schedule::beta_tilde, py::arg("t"));
  m.def("linear_schedule", &make_linear_schedule, py::arg("steps") = 1000, py::arg("beta_start") = 1e-4,
        py::arg("beta_end") = 0.02);
  m.def("cosine_schedule", &make_cosine_schedule, py::arg("steps") = 1000, py::arg("offset") = 0.008);

  // Gaussians and the forward process.
  py::class_<DiagGaussian>(m, "DiagGaussian")
      .def(py::init<Vec, Vec>(), py::arg("mean"), py::arg("var"))
      .def_readonly("mean", &DiagGaussian::mean)
      .def_readonly("var", &DiagGaussian::var)
      .def("log_pdf", [](const DiagGaussian& g, const Vec& x) { return log_pdf(g, x); }, py::arg("x"))
      .def("sample", [](const DiagGaussian& g, Rng& rng) { return sample(g, rng); }, py::arg("rng"));
  m.def("kl_closed_form", &kl_closed_form, py::arg("q"), py::arg("p"));
  m.def("kl_mc", &kl_mc, py::arg("q"), py::arg("p"), py::arg("samples"), py::arg("rng"));

  m.def("marginal_q", [](const Vec& x0, int t, const Schedule& s) { return marginal_q(x0, t, s); }, py::arg("x0"),
        py::arg("t"), py::arg("schedule"));
  m.def("posterior_q", [](const Vec& xt, const Vec& x0, int t, const Schedule& s) { return posterior_q(xt, x0, t, s); },
        py::arg("x_t"), py::arg("x0"), py::arg("t"), py::arg("schedule"));
  m.def(
      "sample_xt",
      [](const Vec& x0, int t, const Schedule& s, Rng& rng) {
        const NoisySample ns = sample_xt(x0, t, s, rng);
        return py::make_tuple(ns.x_t, ns.eps);
      },
      py::arg("x0"), py::arg("t"), py::arg("schedule"), py::arg("rng"), "Returns (x_t, eps).");
  m.def(
      "simulate_forward",
      [](const Vec& x0, const Schedule& s, Rng& rng) {
        std::vector<Vec> states;
        for (const auto& st : simulate_forward(x0, s, rng).states) states.push_back(st.x);
        return states;
      },
      py::arg("x0"), py::arg("schedule"), py::arg("rng"), "States x_0..x_T.");

  py::class_<GmmSpec>(m, "GmmSpec")
      .def(py::init([](Vec w, std::vector<Vec> mu, std::vector<Vec> var, std::vector<int> labels) {
             GmmSpec g{std::move(w), std::move(mu), std::move(var), std::move(labels)};
             g.validate();
             return g;
           }),
           py::arg("weights"), py::arg("means"), py::arg("vars"), py::arg("labels") = std::vector<int>{})
      .def_readonly("weights", &GmmSpec::weights)
      .def_readonly("means", &GmmSpec::means)
      .def_readonly("vars", &GmmSpec::vars)
      .def_readonly("labels", &GmmSpec::labels)
      .def("sample", [](const GmmSpec& g, Rng& rng) {
        const LabeledSample s = gmm_sample(g, rng);
        return py::make_tuple(s.x, s.label);
      })
      .def("log_pdf", [](const GmmSpec& g, const Vec& x) { return gmm_log_pdf(g, x); });
  m.def("default_gmm", &default_gmm);

  // Models.
  py::class_<Architecture>(m, "Architecture")
      .def(py::init([](int data_dim, std::vector<int> hidden) { return Architecture{data_dim, std::move(hidden)}; }),
           py::arg("data_dim") = 1, py::arg("hidden") = std::vector<int>{64, 64})
      .def_readwrite("data_dim", &Architecture::data_dim)
      .def_readwrite("hidden", &Architecture::hidden);

  py::class_<NoisePredictor>(m, "NoisePredictor")
      .def_property_readonly("num_classes", &NoisePredictor::num_classes)
      .def_property_readonly("conditional", &NoisePredictor::conditional)
      .def_property_readonly("param_count", [](const NoisePredictor& p) { return p.net().param_count(); })
      .def_property_readonly("params", [](const NoisePredictor& p) {
        return Vec(p.net().params().begin(), p.net().params().end());
      })
      .def("predict", [](const NoisePredictor& p, const Vec& x, int t, std::optional<int> y,
                         const Schedule& s) { return predict_eps(p, x, t, y, s); },
           py::arg("x"), py::arg("t"), py::arg("y") = py::none(), py::arg("schedule"));
  m.def("init_noise_predictor", &init_noise_predictor, py::arg("arch"), py::arg("num_classes"), py::arg("rng"));

  py::class_<Classifier>(m, "Classifier")
      .def_property_readonly("num_classes", &Classifier::num_classes)
      .def("log_probs", [](const Classifier& c, const Vec& x, int t, const Schedule& s) {
        return classifier_log_probs(c, x, t, s);
      }, py::arg("x"), py::arg("t"), py::arg("schedule"))
      .def("grad_x", [](const Classifier& c, const Vec& x, int t, int y, const Schedule& s) {
        return classifier_grad_x(c, x, t, y, s);
      }, py::arg("x"), py::arg("t"), py::arg("y"), py::arg("schedule"));
  m.def("init_classifier", &init_classifier, py::arg("arch"), py::arg("num_classes"), py::arg("rng"));

  // Losses.
  m.def("x0_from_eps", [](const Vec& xt, const Vec& e, int t, const Schedule& s) { return x0_from_eps(xt, e, t, s); });
  m.def("mu_tilde_from_eps",
        [](const Vec& xt, const Vec& e, int t, const Schedule& s) { return mu_tilde_from_eps(xt, e, t, s); });
  m.def("loss_simple", [](const Vec& a, const Vec& b) { return loss_simple(a, b); });

  py::class_<VlbReport>(m, "VlbReport")
      .def_readonly("l0", &VlbReport::l0)
      .def_readonly("lt", &VlbReport::lt)
      .def_readonly("l_final", &VlbReport::l_final)
      .def_readonly("total", &VlbReport::total);
  m.def("vlb_estimate",
        [](const NoisePredictor& p, const Vec& x0, const Schedule& s, long n, Rng& rng) {
          return vlb_estimate(p, x0, s, n, rng);
        },
        py::arg("model"), py::arg("x0"), py::arg("schedule"), py::arg("samples"), py::arg("rng"));

  // Training.
  py::enum_<LossVariant>(m, "LossVariant").value("simple", LossVariant::kSimple).value("weighted", LossVariant::kWeighted);
  py::enum_<OptimizerKind>(m, "OptimizerKind").value("sgd", OptimizerKind::kSgd).value("momentum", OptimizerKind::kMomentum);
  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("steps", &TrainConfig::steps)
      .def_readwrite("batch_size", &TrainConfig::batch_size)
      .def_readwrite("learning_rate", &TrainConfig::learning_rate)
      .def_readwrite("label_dropout", &TrainConfig::label_dropout)
      .def_readwrite("eval_interval", &TrainConfig::eval_interval)
      .def_readwrite("loss", &TrainConfig::loss)
      .def_readwrite("optimizer", &TrainConfig::optimizer)
      .def_readwrite("momentum", &TrainConfig::momentum);
  py::class_<TrainReport>(m, "TrainReport")
      .def_readonly("loss_curve", &TrainReport::loss_curve)
      .def_readonly("params_checksum", &TrainReport::params_checksum);
  m.def("train", &train, py::arg("model"), py::arg("data"), py::arg("schedule"), py::arg("config"), py::arg("rng"),
        "Trains the model in place.");
  m.def("train_classifier", &train_classifier, py::arg("classifier"), py::arg("data"), py::arg("schedule"),
        py::arg("config"), py::arg("rng"), "Trains the classifier in place.");

  // Sampling and guidance.
  py::enum_<SamplerKind>(m, "SamplerKind").value("ddpm", SamplerKind::kDdpm).value("ddim", SamplerKind::kDdim);
  py::enum_<SigmaPolicy>(m, "SigmaPolicy")
      .value("zero", SigmaPolicy::kZero)
      .value("ddpm", SigmaPolicy::kDdpmEquivalent)
      .value("explicit", SigmaPolicy::kExplicit);
  py::class_<SamplerConfig>(m, "SamplerConfig")
      .def(py::init<>())
      .def_readwrite("kind", &SamplerConfig::kind)
      .def_readwrite("sigma", &SamplerConfig::sigma)
      .def_readwrite("explicit_sigmas", &SamplerConfig::explicit_sigmas)
      .def_readwrite("chains", &SamplerConfig::chains)
      .def_readwrite("seed", &SamplerConfig::seed)
      .def_readwrite("fixed_start", &SamplerConfig::fixed_start);
  m.def("ddim_sigma_ddpm_equiv", &ddim_sigma_ddpm_equiv, py::arg("t"), py::arg("schedule"));
  m.def("sample",
        [](const NoisePredictor& p, const SamplerConfig& cfg, const Schedule& s, std::optional<int> y) {
          return final_states(sample_reverse(p, cfg, s, y));
        },
        py::arg("model"), py::arg("config"), py::arg("schedule"), py::arg("y") = py::none(),
        "Final x_0 of every chain.");

  py::enum_<GuidanceMode>(m, "GuidanceMode")
      .value("none", GuidanceMode::kNone)
      .value("classifier", GuidanceMode::kClassifier)
      .value("cfg", GuidanceMode::kClassifierFree);
  py::class_<PyGuidance>(m, "GuidanceConfig")
      .def(py::init([](GuidanceMode mode, double scale, std::optional<int> target, std::optional<Classifier> c) {
             return PyGuidance{mode, scale, target, std::move(c)};
           }),
           py::arg("mode") = GuidanceMode::kNone, py::arg("scale") = 0.0, py::arg("target") = py::none(),
           py::arg("classifier") = py::none())
      .def_readwrite("mode", &PyGuidance::mode)
      .def_readwrite("scale", &PyGuidance::scale)
      .def_readwrite("target", &PyGuidance::target);
  m.def("guided_sample",
        [](const NoisePredictor& p, const SamplerConfig& cfg, const PyGuidance& g, const Schedule& s) {
          return final_states(guided_sample(p, cfg, g.view(), s));
        },
        py::arg("model"), py::arg("config"), py::arg("guidance"), py::arg("schedule"));

  // Estimators.
  m.def("reparam_grad",
        [](std::array<double, 2> theta, long n, Rng& rng) { return reparam_grad(theta, n, rng); },
        py::arg("theta"), py::arg("samples"), py::arg("rng"));
  m.def(
      "mc_expectation",
      [](const std::function<double(Rng&)>& draw, const std::function<double(double)>& f, long n, Rng& rng) {
        const McEstimate e = mc_expectation(draw, f, n, rng);
        return py::make_tuple(e.estimate, e.std_error);
      },
      py::arg("draw"), py::arg("f"), py::arg("samples"), py::arg("rng"), "Returns (estimate, std_error).");

  // Evaluation.
  m.def("wasserstein1_1d", [](const std::vector<double>& a, const std::vector<double>& b) {
    return wasserstein1_1d(a, b);
  });
  m.def("mode_masses", [](const std::vector<Vec>& xs, const GmmSpec& g) { return mode_masses(xs, g); });

  // Checkpoints.
  m.def("save_checkpoint",
        [](const NoisePredictor& p, const Schedule& s, const std::filesystem::path& path, std::uint64_t seed) {
          save_checkpoint(p, s, path, Provenance{seed, {}});
        },
        py::arg("model"), py::arg("schedule"), py::arg("path"), py::arg("seed") = 0);
  m.def("load_checkpoint", [](const std::filesystem::path& path) {
    ModelCheckpoint ck = load_checkpoint(path);
    return py::make_tuple(std::move(ck.model), std::move(ck.schedule));
  }, py::arg("path"), "Returns (model, schedule).");
  m.def("format_checkpoint", [](const NoisePredictor& p, const Schedule& s) { return format_checkpoint(p, s); });
}
