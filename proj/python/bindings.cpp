#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mitoforge/ensemble.hpp"
#include "mitoforge/error.hpp"
#include "mitoforge/fda.hpp"
#include "mitoforge/fisheye.hpp"
#include "mitoforge/imaging.hpp"
#include "mitoforge/lora.hpp"
#include "mitoforge/pipeline.hpp"
#include "mitoforge/random.hpp"

namespace py = pybind11;
using namespace mitoforge;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

ImageBuffer to_image(const Array& a) {
  if (a.ndim() != 3 || a.shape(2) != 3) {
    throw py::value_error("expected an H x W x 3 float array");
  }
  const auto h = static_cast<std::size_t>(a.shape(0));
  const auto w = static_cast<std::size_t>(a.shape(1));
  return ImageBuffer(h, w, std::vector<double>(a.data(), a.data() + h * w * 3));
}

Array to_array(const ImageBuffer& img) {
  Array out({img.height(), img.width(), std::size_t{3}});
  std::copy(img.data().begin(), img.data().end(), out.mutable_data());
  return out;
}

lora::Matrix to_matrix(const Array& a) {
  if (a.ndim() != 2) throw py::value_error("expected a 2-D array");
  const auto r = static_cast<std::size_t>(a.shape(0));
  const auto c = static_cast<std::size_t>(a.shape(1));
  return lora::Matrix(r, c, std::vector<double>(a.data(), a.data() + r * c));
}

PredictionMatrix to_predictions(const Array& a, std::size_t index) {
  if (a.ndim() != 2) throw py::value_error("expected N x C probability arrays");
  PredictionMatrix p;
  p.model_name = "model_" + std::to_string(index);
  p.classes = static_cast<std::size_t>(a.shape(1));
  for (py::ssize_t i = 0; i < a.shape(0); ++i) p.ids.push_back(std::to_string(i));
  p.probs.assign(a.data(), a.data() + a.size());
  return p;
}

std::vector<PredictionMatrix> to_prediction_list(const std::vector<Array>& arrays) {
  std::vector<PredictionMatrix> out;
  for (std::size_t i = 0; i < arrays.size(); ++i) out.push_back(to_predictions(arrays[i], i));
  return out;
}

py::dict provenance_dict(const Provenance& p) {
  py::dict d;
  d["id"] = p.id;
  d["brightness"] = p.brightness;
  d["contrast"] = p.contrast;
  d["angle"] = p.angle;
  d["k"] = p.k;
  d["fda_applied"] = p.fda_applied;
  d["fda_target"] = p.fda_target ? py::cast(*p.fda_target) : py::none();
  d["fda_beta"] = p.fda_beta;
  return d;
}

}  // namespace

PYBIND11_MODULE(_mitoforge, m) {
  m.doc() = "Augmentation, LoRA toy model and ensemble primitives";

  static py::exception<Error> error(m, "MitoforgeError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      const std::string msg = std::string(to_string(e.kind())) + ": " + e.what();
      if (e.kind() == ErrorKind::Io) {
        PyErr_SetString(PyExc_OSError, msg.c_str());
      } else {
        PyErr_SetString(error.ptr(), msg.c_str());
      }
    }
  });

  m.def("mix64", &mix64, py::arg("z"));
  m.def("derive_seed", &derive_seed, py::arg("seed"), py::arg("index"));

  m.def(
      "resize_pad",
      [](const Array& img, std::size_t side) { return to_array(resize_pad(to_image(img), side)); },
      py::arg("img"), py::arg("side"));
  m.def(
      "brightness_contrast",
      [](const Array& img, double b, double c) {
        return to_array(brightness_contrast(to_image(img), b, c));
      },
      py::arg("img"), py::arg("brightness"), py::arg("contrast"));
  m.def(
      "rotate",
      [](const Array& img, double degrees, const std::string& border, double fill) {
        Interpolator interp = Interpolator::clamp();
        if (border == "constant") {
          interp = Interpolator::constant(fill);
        } else if (border != "clamp") {
          throw py::value_error("border must be 'clamp' or 'constant'");
        }
        return to_array(rotate(to_image(img), degrees, interp));
      },
      py::arg("img"), py::arg("degrees"), py::arg("border") = "clamp", py::arg("fill") = 0.0);
  m.def(
      "fisheye",
      [](const Array& img, double k) {
        return to_array(fisheye(to_image(img), {k, Interpolator::clamp()}));
      },
      py::arg("img"), py::arg("k"));
  m.def("fisheye_source_radius", &fisheye_source_radius, py::arg("r"), py::arg("k"));
  m.def(
      "fda_transfer",
      [](const Array& src, const Array& tgt, double beta) {
        return to_array(fda_transfer(to_image(src), to_image(tgt), {beta}));
      },
      py::arg("source"), py::arg("target"), py::arg("beta") = 0.01);

  m.def(
      "augment_one",
      [](const Array& img, const std::string& config_json, std::uint64_t item_seed,
         const std::vector<std::pair<std::string, Array>>& targets, const std::string& id) {
        const AugmentConfig cfg = parse_augment_config(config_json);
        TargetPool pool;
        for (const auto& [name, t] : targets) pool.add(name, to_image(t));
        const auto result = augment_one(to_image(img), cfg, item_seed, &pool, id);
        return py::make_tuple(to_array(result.image), provenance_dict(result.provenance));
      },
      py::arg("img"), py::arg("config_json") = "{}", py::arg("item_seed") = 0,
      py::arg("targets") = std::vector<std::pair<std::string, Array>>{}, py::arg("id") = "");

  m.def(
      "weighted_sample",
      [](const std::vector<std::string>& groups, std::size_t n, std::uint64_t seed,
         const std::map<std::string, double>& weights) {
        std::vector<ManifestRecord> records(groups.size());
        for (std::size_t i = 0; i < groups.size(); ++i) {
          records[i].id = std::to_string(i);
          records[i].group = parse_group(groups[i]);
        }
        GroupWeights gw;
        if (!weights.empty()) {
          gw.weights.clear();
          for (const auto& [g, w] : weights) gw.weights[parse_group(g)] = w;
        }
        std::vector<std::size_t> indices;
        for (const auto& id : weighted_sample(records, gw, n, seed)) {
          indices.push_back(std::stoul(id));
        }
        return indices;
      },
      py::arg("groups"), py::arg("n"), py::arg("seed"),
      py::arg("weights") = std::map<std::string, double>{},
      "Draw n record indices with replacement, weighted by dataset group.");

  m.def(
      "balanced_accuracy",
      [](const std::vector<int>& pred, const std::vector<int>& truth, std::size_t classes) {
        return balanced_accuracy(pred, truth, classes);
      },
      py::arg("predicted"), py::arg("truth"), py::arg("classes"));
  m.def(
      "ensemble_predict",
      [](const std::vector<Array>& probs, const std::vector<double>& weights) {
        const auto out = ensemble_predict(to_prediction_list(probs), {{}, weights});
        Array blended({out.probs.rows(), out.probs.classes});
        std::copy(out.probs.probs.begin(), out.probs.probs.end(), blended.mutable_data());
        return py::make_tuple(blended, out.labels);
      },
      py::arg("probs"), py::arg("weights"));
  m.def(
      "fit_greedy",
      [](const std::vector<Array>& probs, const std::vector<int>& labels,
         std::size_t iterations, std::size_t workers) {
        if (probs.empty()) throw py::value_error("fit_greedy: no candidate models");
        auto preds = to_prediction_list(probs);
        LabeledSet truth;
        truth.ids = preds.front().ids;
        truth.labels = labels;
        truth.classes = preds.front().classes;
        const auto fit = fit_greedy(preds, truth, iterations, workers);
        py::dict d;
        d["weights"] = fit.weights.w;
        d["fit_balanced_accuracy"] = fit.fit_balanced_accuracy;
        d["best_round"] = fit.best_round;
        return d;
      },
      py::arg("probs"), py::arg("labels"), py::arg("iterations") = 25, py::arg("workers") = 1);

  m.def(
      "effective_weight",
      [](const Array& a, const Array& b, const Array& w0, double scale) {
        lora::LoraAdapter ad{to_matrix(a), to_matrix(b), scale};
        const auto w = lora::effective_weight(ad, to_matrix(w0));
        Array out({w.rows(), w.cols()});
        std::copy(w.data().begin(), w.data().end(), out.mutable_data());
        return out;
      },
      py::arg("a"), py::arg("b"), py::arg("w0"), py::arg("scale") = 1.0);
  m.def(
      "gradcheck",
      [](std::uint64_t seed, std::size_t d, std::size_t heads, std::size_t rank,
         std::size_t tokens, std::size_t samples, double scale) {
        lora::ModelShape shape{d, heads, rank, 2, scale};
        const auto model = lora::make_gradcheck_model(shape, seed);
        const auto data =
            lora::make_separable_tokens(samples, d, tokens, 0.3, 1.0, derive_seed(seed, 2));
        return lora::gradient_check(model, data.x, data.y).max_relative_error;
      },
      py::arg("seed") = 0, py::arg("d") = 8, py::arg("heads") = 2, py::arg("rank") = 2,
      py::arg("tokens") = 4, py::arg("samples") = 4, py::arg("scale") = 1.0,
      "Max relative error between analytic and finite-difference gradients.");
}
