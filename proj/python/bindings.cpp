#include <sstream>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "mobfair/commands.hpp"

namespace py = pybind11;
using namespace mobfair;

namespace {

py::dict linreg_dict(const linreg::FittedLinReg& fit) {
  py::dict d;
  d["betas"] = fit.betas;
  d["intercept"] = fit.intercept;
  d["residual_sd"] = fit.residual_sd;
  d["n_obs"] = fit.n_obs;
  d["condition"] = fit.condition;
  return d;
}

py::dict arimax_dict(const arimax::FittedArimax& fit) {
  py::dict d;
  d["order"] = py::make_tuple(fit.order.p, fit.order.d, fit.order.q);
  d["phi"] = fit.phi;
  d["theta"] = fit.theta;
  d["beta0"] = fit.beta0;
  d["intercept"] = fit.intercept;
  d["sigma2"] = fit.sigma2;
  d["aicc"] = fit.aicc;
  d["converged"] = fit.converged;
  d["n_cond"] = fit.n_cond;
  return d;
}

arimax::FittedArimax arimax_from(const py::dict& d) {
  arimax::FittedArimax fit;
  auto order = d["order"].cast<std::tuple<int, int, int>>();
  fit.order = {std::get<0>(order), std::get<1>(order), std::get<2>(order)};
  fit.phi = d["phi"].cast<std::vector<double>>();
  fit.theta = d["theta"].cast<std::vector<double>>();
  fit.beta0 = d["beta0"].cast<std::optional<double>>();
  fit.intercept = d["intercept"].cast<std::optional<double>>();
  fit.sigma2 = d["sigma2"].cast<double>();
  fit.converged = d["converged"].cast<bool>();
  if (d.contains("n_cond")) fit.n_cond = d["n_cond"].cast<int>();
  return fit;
}

int run(int (*command)(const CommandOptions&, std::ostream&), const std::filesystem::path& config,
        std::optional<std::uint64_t> seed, std::optional<int> workers,
        std::optional<std::filesystem::path> output_dir) {
  CommandOptions opts{config, seed, workers, output_dir};
  std::ostringstream out;
  int rc = 0;
  {
    py::gil_scoped_release release;
    rc = command(opts, out);
  }
  py::print(out.str(), py::arg("end") = "");
  return rc;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "mobfair core bindings";
  m.attr("__version__") = MOBFAIR_VERSION;

  static py::exception<Error> error(m, "Error");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      error(e.what());
    }
  });

  m.def("average_ranks", [](const std::vector<double>& v) { return fairness::average_ranks(v); });
  m.def("spearman", [](const std::vector<double>& x, const std::vector<double>& y) {
    return fairness::spearman(x, y);
  });
  m.def("spearman_pvalue", &fairness::spearman_pvalue, py::arg("rho"), py::arg("n"));
  m.def("error_rate", &backtest::error_rate, py::arg("predicted"), py::arg("actual"));

  m.def(
      "fit_distributed_lag",
      [](const std::vector<double>& cumulative, const std::vector<double>& change,
         std::ptrdiff_t origin, int window_days, bool include_intercept) {
        linreg::LinRegConfig cfg;
        cfg.window_days = window_days;
        cfg.include_intercept = include_intercept;
        return linreg_dict(
            linreg::fit_distributed_lag(cumulative, change, origin, linreg::LagSpec{}, cfg));
      },
      py::arg("cumulative"), py::arg("change"), py::arg("origin"), py::arg("window_days") = 21,
      py::arg("include_intercept") = false);

  m.def(
      "forecast_targets",
      [](double cumulative_at_origin, const std::vector<double>& growth,
         const std::vector<int>& horizons) {
        py::list out;
        for (const auto& t : linreg::forecast_targets(cumulative_at_origin, growth, horizons)) {
          out.append(py::make_tuple(t.horizon, t.predicted_cumulative, t.predicted_incident));
        }
        return out;
      },
      py::arg("cumulative_at_origin"), py::arg("growth_path"), py::arg("horizons"));

  m.def(
      "arima_auto_fit",
      [](const std::vector<double>& y, const std::vector<double>& x) {
        return arimax_dict(arimax::auto_fit(y, x, arimax::ArimaxConfig{}));
      },
      py::arg("y"), py::arg("x") = std::vector<double>{});
  m.def(
      "arima_fit",
      [](const std::vector<double>& y, const std::vector<double>& x, int p, int d, int q) {
        return arimax_dict(arimax::fit_arma_css(y, x, {p, d, q}, arimax::ArimaxConfig{}));
      },
      py::arg("y"), py::arg("x"), py::arg("p"), py::arg("d"), py::arg("q"));
  m.def(
      "arima_forecast",
      [](const py::dict& fit, const std::vector<double>& y, const std::vector<double>& x_history,
         const std::vector<double>& x_future, int h) {
        return arimax::forecast(arimax_from(fit), y, x_history, x_future, h);
      },
      py::arg("fit"), py::arg("y"), py::arg("x_history"), py::arg("x_future"), py::arg("h"));

  m.def(
      "synth_generate",
      [](std::uint64_t seed, int n_units, int n_days, const std::filesystem::path& output_dir) {
        synth::SynthConfig cfg;
        cfg.seed = seed;
        cfg.n_units = n_units;
        cfg.n_days = n_days;
        synth::write_dataset(synth::generate(cfg), output_dir);
      },
      py::arg("seed"), py::arg("n_units"), py::arg("n_days"), py::arg("output_dir"));

  auto bind_command = [&](const char* name, int (*command)(const CommandOptions&, std::ostream&)) {
    m.def(
        name,
        [command](const std::filesystem::path& config, std::optional<std::uint64_t> seed,
                  std::optional<int> workers, std::optional<std::filesystem::path> output_dir) {
          return run(command, config, seed, workers, output_dir);
        },
        py::arg("config"), py::arg("seed") = py::none(), py::arg("workers") = py::none(),
        py::arg("output_dir") = py::none());
  };
  bind_command("cmd_synth", &cmd_synth);
  bind_command("cmd_backtest", &cmd_backtest);
  bind_command("cmd_audit", &cmd_audit);
}
