// Copyright 2026 The dyga Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <sstream>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dyga/anchoring.hpp"
#include "dyga/cli.hpp"
#include "dyga/config.hpp"
#include "dyga/error.hpp"
#include "dyga/io.hpp"
#include "dyga/metrics.hpp"
#include "dyga/numerics.hpp"
#include "dyga/skip_mask.hpp"
#include "dyga/synth.hpp"

namespace py = pybind11;
using namespace dyga;

namespace {

RunConfig parse_config(const std::string& text) {
  RunConfig config;
  if (!text.empty()) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::kConfigError, e.what());
    }
    apply_json(config, j);
  }
  config.validate();
  return config;
}

std::vector<int> intrinsic_dims(const AnchorModel& m) {
  std::vector<int> dims;
  for (const auto& g : m.mixture.components) dims.push_back(g.intrinsic_dim());
  return dims;
}

Eigen::VectorXd weights(const AnchorModel& m) {
  Eigen::VectorXd w(m.size());
  for (int k = 0; k < m.size(); ++k) w(k) = m.mixture.components[static_cast<std::size_t>(k)].weight;
  return w;
}

}  // namespace

PYBIND11_MODULE(_dyga, m) {
  m.doc() = "Dynamic Gaussian anchoring core";
  m.attr("__version__") = kLibraryVersion;

  // Lives as long as the module; `kind` carries the ErrorKind name.
  static py::handle error_type = py::exception<Error>(m, "Error", PyExc_RuntimeError).release();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::reinterpret_borrow<py::object>(error_type)(e.what());
      exc.attr("kind") = std::string(to_string(e.kind()));
      PyErr_SetObject(error_type.ptr(), exc.ptr());
    }
  });

  py::class_<AnchorModel>(m, "AnchorModel")
      .def_property_readonly("size", &AnchorModel::size)
      .def_property_readonly("dim", [](const AnchorModel& a) { return a.mixture.dim(); })
      .def_property_readonly("anchors", &AnchorModel::anchors)
      .def_property_readonly("weights", &weights)
      .def_property_readonly("intrinsic_dims", &intrinsic_dims)
      .def_property_readonly("log_likelihood", [](const AnchorModel& a) { return a.mixture.log_likelihood; })
      .def_readwrite("unit_index", &AnchorModel::unit_index)
      .def_readwrite("created_at_round", &AnchorModel::created_at_round)
      .def("responsibilities", [](const AnchorModel& a, const Eigen::MatrixXd& x) { return e_step(x, a.mixture); })
      .def("to_json", [](const AnchorModel& a) { return dump_json(to_json(a)); })
      .def_static("from_json", [](const std::string& s) { return anchor_model_from_json(nlohmann::json::parse(s)); })
      .def("__repr__", [](const AnchorModel& a) {
        std::ostringstream s;
        s << "<AnchorModel unit=" << a.unit_index << " K=" << a.size() << " D=" << a.mixture.dim() << ">";
        return s.str();
      });

  m.def("select_anchors",
        [](const Eigen::MatrixXd& data, const std::string& config, std::uint64_t seed, std::uint64_t stream) {
          const RunConfig c = parse_config(config);
          SeededRng rng(seed, stream);
          py::gil_scoped_release release;
          return select_anchors(data, c.dyga, rng);
        },
        py::arg("data"), py::arg("config") = "", py::arg("seed") = 0, py::arg("stream") = 0);

  m.def("align",
        [](const Eigen::MatrixXd& features, const AnchorModel& model, const std::string& config,
           std::uint64_t seed, std::uint64_t stream) {
          const RunConfig c = parse_config(config);
          SeededRng rng(seed, stream);
          AlignedBatch b = align_batch(features, model, c.alignment, rng);
          return py::make_tuple(b.features, b.delta, b.anchor);
        },
        py::arg("features"), py::arg("model"), py::arg("config") = "", py::arg("seed") = 0,
        py::arg("stream") = 0);

  m.def("align_feature",
        [](const Eigen::VectorXd& c, const Eigen::VectorXd& anchor, double lam, double eps) {
          AlignedFeature a = align_feature(c, anchor, lam, eps);
          return py::make_tuple(a.value, a.delta);
        },
        py::arg("c"), py::arg("anchor"), py::arg("lam") = 0.1, py::arg("ratio_epsilon") = 1e-8);

  m.def("log_gaussian_pdf",
        [](const Eigen::VectorXd& x, const Eigen::VectorXd& mean, const Eigen::MatrixXd& basis,
           const Eigen::VectorXd& eigvals, double noise) {
          SubspaceGaussian g;
          g.mean = mean;
          g.basis = basis;
          g.retained_eigvals = eigvals;
          g.tied_noise = noise;
          return log_gaussian_pdf(x, g);
        },
        py::arg("x"), py::arg("mean"), py::arg("basis"), py::arg("eigvals"), py::arg("noise"));

  m.def("skip_dropout",
        [](const std::vector<double>& values, std::size_t c, std::size_t h, std::size_t w,
           const std::string& config, std::uint64_t seed) {
          const RunConfig rc = parse_config(config);
          ChannelTensor t(c, h, w);
          if (values.size() != t.values.size()) fail(ErrorKind::kShapeError, "values do not match C x H x W");
          t.values = values;
          SeededRng rng(seed);
          SkipMaskResult r = skip_dropout(t, rc.mask, rng);
          return py::make_tuple(r.tensor.values, r.keep);
        },
        py::arg("values"), py::arg("channels"), py::arg("height"), py::arg("width"), py::arg("config") = "",
        py::arg("seed") = 0);

  m.def("make_bundle",
        [](const std::string& config) {
          const RunConfig c = parse_config(config);
          Bundle b = make_bundle(c.synth);
          return py::make_tuple(b.features, b.factors.codes, b.factors.cardinalities, b.config.train_size);
        },
        py::arg("config") = "");

  m.def("evaluate",
        [](const Eigen::MatrixXd& codes, const Eigen::MatrixXi& factors, const std::vector<int>& cardinalities,
           const std::string& config, std::uint64_t seed) {
          const RunConfig c = parse_config(config);
          FactorTable table;
          table.codes = factors;
          table.cardinalities = cardinalities;
          table.validate();
          MetricReport r;
          {
            py::gil_scoped_release release;
            r = evaluate(Representation{codes}, table, c.metrics, seed);
          }
          return dump_json(to_json(r));
        },
        py::arg("codes"), py::arg("factors"), py::arg("cardinalities"), py::arg("config") = "",
        py::arg("seed") = 0);

  m.def("encode_tensor",
        [](const std::vector<std::uint64_t>& dims, const std::vector<float>& values) {
          Tensor t{dims, values};
          const auto bytes = encode_tensor(t);
          return py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
        },
        py::arg("dims"), py::arg("values"));
  m.def("decode_tensor", [](const py::bytes& data) {
    const std::string s = data;
    Tensor t = decode_tensor(std::vector<std::uint8_t>(s.begin(), s.end()));
    return py::make_tuple(t.dims, t.values);
  });

  m.def("run_cli",
        [](const std::vector<std::string>& args) {
          std::ostringstream out, log;
          const int code = run_cli(args, out, log);
          return py::make_tuple(code, out.str(), log.str());
        },
        py::arg("args"));
}
