// Copyright 2026 The cycledcn Authors.
// SPDX-License-Identifier: Apache-2.0

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <algorithm>
#include <array>
#include <map>
#include <string>
#include <vector>

#include "cycledcn/checkpoint.hpp"
#include "cycledcn/cli.hpp"
#include "cycledcn/error.hpp"
#include "cycledcn/losses.hpp"
#include "cycledcn/metrics.hpp"
#include "cycledcn/phantom.hpp"
#include "cycledcn/trainer.hpp"
#include "cycledcn/volume_io.hpp"

namespace py = pybind11;
using namespace cdn;

namespace {

using Array3 = py::array_t<float, py::array::c_style | py::array::forcecast>;

Volume to_volume(const Array3& a) {
  if (a.ndim() != 3) throw ValidationError("expected a 3-D array (nz, ny, nx)");
  Volume v(Shape3{static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)),
                  static_cast<std::size_t>(a.shape(2))});
  std::copy(a.data(), a.data() + a.size(), v.data().begin());
  return v;
}

Array3 to_array(const Volume& v) {
  const Shape3& s = v.shape();
  Array3 out({s.nz, s.ny, s.nx});
  std::copy(v.data().begin(), v.data().end(), out.mutable_data());
  return out;
}

std::vector<Tumor> to_tumors(const std::vector<std::tuple<std::array<double, 3>, double, double>>& in) {
  std::vector<Tumor> out;
  for (const auto& [c, r, k] : in) out.push_back({c, r, k});
  return out;
}

std::map<std::string, double> losses_dict(const LossBreakdown& b) {
  std::map<std::string, double> d;
  for (LossTerm t : kAllLossTerms) d[to_string(t)] = b.term(t);
  d["disc_O"] = b.disc_O;
  d["disc_U"] = b.disc_U;
  return d;
}

}  // namespace

PYBIND11_MODULE(_cycledcn, m) {
  m.doc() = "Low-dose PET denoising with a shared noise predictor and cycle training.";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<FileFormatError>(m, "FileFormatError", PyExc_IOError);
  py::register_exception<DivergenceError>(m, "DivergenceError", PyExc_RuntimeError);

  m.def(
      "generate_phantom",
      [](std::array<std::size_t, 3> shape, std::uint64_t seed, double cortex_amplitude,
         double smoothness, const std::vector<std::tuple<std::array<double, 3>, double, double>>& tumors) {
        PhantomSpec spec;
        spec.shape = {shape[0], shape[1], shape[2]};
        spec.seed = seed;
        spec.cortex_amplitude = cortex_amplitude;
        spec.smoothness = smoothness;
        spec.tumors = to_tumors(tumors);
        return to_array(generate_phantom(spec));
      },
      py::arg("shape"), py::arg("seed") = 0, py::arg("cortex_amplitude") = 1.0,
      py::arg("smoothness") = 1.0,
      py::arg("tumors") = std::vector<std::tuple<std::array<double, 3>, double, double>>{},
      "Full-dose phantom; tumors are ((z, y, x), radius, contrast) tuples.");

  m.def(
      "simulate_low_dose",
      [](const Array3& full, const std::string& fraction, double counts_per_unit, std::uint64_t seed) {
        return to_array(simulate_low_dose(to_volume(full), DoseFraction::parse(fraction),
                                          counts_per_unit, seed));
      },
      py::arg("full"), py::arg("fraction") = "1/4", py::arg("counts_per_unit") = 50.0,
      py::arg("seed") = 0);

  m.def(
      "normalize_pair",
      [](const Array3& full, const Array3& low) {
        const CasePair p = normalize_pair("case", to_volume(full), to_volume(low));
        return py::make_tuple(to_array(p.full), to_array(p.low));
      },
      py::arg("full"), py::arg("low"), "Both volumes on the full-dose [0, 1] scale.");

  m.def("psnr", [](const Array3& x, const Array3& ref, double range) {
    return psnr(to_volume(x), to_volume(ref), range);
  }, py::arg("x"), py::arg("ref"), py::arg("data_range") = 1.0);
  m.def("ssim", [](const Array3& x, const Array3& ref, double range) {
    return ssim_index(to_volume(x), to_volume(ref), range);
  }, py::arg("x"), py::arg("ref"), py::arg("data_range") = 1.0);
  m.def("nrmse", [](const Array3& x, const Array3& ref) { return nrmse(to_volume(x), to_volume(ref)); },
        py::arg("x"), py::arg("ref"));
  m.def("epi", [](const Array3& x, const Array3& ref) { return epi(to_volume(x), to_volume(ref)); },
        py::arg("denoised"), py::arg("full"));
  m.def(
      "hausdorff",
      [](const std::vector<std::pair<int, int>>& a, const std::vector<std::pair<int, int>>& b) {
        std::vector<EdgePoint> pa, pb;
        for (auto [r, c] : a) pa.push_back({r, c});
        for (auto [r, c] : b) pb.push_back({r, c});
        return hausdorff(pa, pb);
      },
      py::arg("a"), py::arg("b"), "Symmetric Hausdorff distance between (row, col) point sets.");

  m.def(
      "evaluate_case",
      [](const Array3& denoised, const Array3& low, const Array3& full,
         std::optional<std::tuple<std::array<double, 3>, double, double>> tumor) {
        const Volume f = to_volume(full);
        EvaluateOptions o;
        if (tumor) {
          const Tumor t{std::get<0>(*tumor), std::get<1>(*tumor), std::get<2>(*tumor)};
          o.tumor_box = tumor_box(t, f.shape(), 1.0);
          o.hausdorff_slice = static_cast<std::size_t>(std::lround(t.center[0]));
        }
        const MetricsReport r = evaluate_case(to_volume(denoised), to_volume(low), f, o);
        py::dict d;
        d["psnr"] = r.psnr;
        d["ssim"] = r.ssim;
        d["nrmse"] = r.nrmse;
        d["epi"] = r.epi;
        d["cnr"] = r.cnr ? py::cast(*r.cnr) : py::none();
        d["hausdorff"] = r.hausdorff ? py::cast(*r.hausdorff) : py::none();
        return d;
      },
      py::arg("denoised"), py::arg("low"), py::arg("full"), py::arg("tumor") = py::none());

  m.def(
      "update_weights",
      [](const std::map<std::string, double>& losses, double epsilon) {
        LossBreakdown b;
        LossSet active;
        for (const auto& [k, v] : losses) {
          const LossTerm t = parse_loss_term(k);
          b.term(t) = v;
          active.insert(t);
        }
        const LossWeights w = update_weights(b, epsilon, active);
        std::map<std::string, double> out;
        for (LossTerm t : kAllLossTerms) {
          if (active.contains(t)) out[to_string(t)] = w[t];
        }
        return out;
      },
      py::arg("losses"), py::arg("epsilon") = 1e-8, "Inverse-loss weights over the given terms.");

  py::class_<TrainingState>(m, "Model", "A trained model restored from a checkpoint.")
      .def_static("load", &load_checkpoint, py::arg("path"))
      .def_property_readonly("epoch", [](const TrainingState& s) { return s.epoch; })
      .def_property_readonly("config", [](const TrainingState& s) { return config_to_yaml(s.config); })
      .def_property_readonly("loss_log", [](const TrainingState& s) {
        std::vector<std::map<std::string, double>> rows;
        for (const EpochRecord& r : s.log) {
          auto d = losses_dict(r.losses);
          d["epoch"] = static_cast<double>(r.epoch);
          d["val_psnr"] = r.val_psnr;
          d["val_ssim"] = r.val_ssim;
          rows.push_back(std::move(d));
        }
        return rows;
      })
      .def("denoise", [](const TrainingState& s, const Array3& low) {
        const Volume in = to_volume(low);
        Volume out;
        {
          py::gil_scoped_release release;
          out = denoise_volume(s.model, in);
        }
        return to_array(out);
      }, py::arg("low"), "Applies the denoiser to a [0, 1]-normalised volume.")
      .def("mean_abs_noise", [](const TrainingState& s, const Array3& x) {
        return mean_abs_predicted_noise(s.model, to_volume(x));
      }, py::arg("volume"))
      .def("mean_abs_extracted_noise", [](const TrainingState& s, const Array3& x) {
        return mean_abs_extracted_noise(s.model, to_volume(x));
      }, py::arg("volume"));

  m.def("load_volume", [](const std::filesystem::path& p) { return to_array(load_volume(p)); },
        py::arg("path"));
  m.def("save_volume", [](const Array3& a, const std::filesystem::path& p) { save_volume(to_volume(a), p); },
        py::arg("array"), py::arg("path"));

  m.def(
      "run_cli",
      [](std::vector<std::string> args) {
        args.insert(args.begin(), "cycledcn");
        std::vector<const char*> argv;
        for (const auto& a : args) argv.push_back(a.c_str());
        py::gil_scoped_release release;
        return run_cli(static_cast<int>(argv.size()), argv.data());
      },
      py::arg("args"), "Runs the command-line tool in-process and returns its exit code.");

  m.attr("__version__") = CYCLEDCN_VERSION;
}
