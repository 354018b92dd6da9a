// fbi: run feedback-integrator experiments, replicate figures, run validators.
//
//   fbi run --config rb.ini [--h 1e-4] [--t-end 50] [--gains k0=50,k1=100] ...
//   fbi figure --id F2 --scale 0.05 --out-dir out/
//   fbi check --system perturbed_kepler
//
// Exit codes: 0 ok, 2 configuration error, 3 domain violation mid-run,
// 4 validator failure.

#include <cstdio>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "fbi/experiment.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitDomain = 3;
constexpr int kExitValidator = 4;

void print_summary(std::ostream& out, const fbi::RunSummary& s) {
  out << fbi::to_string(s.system) << " / " << fbi::to_string(s.method) << ": " << s.steps_taken << " steps in "
      << s.wall_time << " s\n";
  for (std::size_t i = 0; i < s.metric_names.size(); ++i) {
    out << "  max " << s.metric_names[i] << " = " << fbi::format_real(s.max_drift[i]) << '\n';
  }
  if (!s.ok) out << "  stopped at step " << s.failed_step << ": " << s.error << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Feedback integrators for rigid body and Kepler-type dynamics"};
  app.set_help_flag("--help", "print this help and exit");
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "integrate one configuration and write a CSV trace");
  std::string config_path;
  std::optional<double> h, t_end;
  std::optional<long> stride;
  std::string gains, method, system, out_path;
  run->add_option("--config", config_path, "INI config file ([run], [gains], [params], [initial])");
  run->add_option("--h", h, "step size");
  run->add_option("--t-end", t_end, "final time");
  run->add_option("--gains", gains, "gain overrides, e.g. k0=50,k1=100,k2=50");
  run->add_option("--method", method, "feedback_euler, feedback_rk4, euler, rk4, projection_euler, splitting, "
                                       "stormer_verlet_a, stormer_verlet_b");
  run->add_option("--system", system, "rigid_body, kepler, perturbed_kepler");
  run->add_option("--out", out_path, "CSV path (default: stdout)");
  run->add_option("--stride", stride, "write every n-th step (the final step is always written)");

  auto* figure = app.add_subcommand("figure", "reproduce one of the reference figures (F1..F10)");
  std::string figure_id, out_dir = ".";
  double scale = 1;
  figure->add_option("--id", figure_id, "F1..F10")->required();
  figure->add_option("--scale", scale, "fraction of the reference horizon, in (0, 1]");
  figure->add_option("--out-dir", out_dir, "directory for <id>_<method>.csv");

  auto* check = app.add_subcommand("check", "run the validators for a system");
  std::string check_system;
  check->add_option("--system", check_system, "rigid_body, kepler, perturbed_kepler")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) {
      fbi::ExperimentConfig cfg;
      if (!config_path.empty()) {
        cfg = fbi::load_config(config_path);
      } else if (!system.empty()) {
        cfg = fbi::default_config(fbi::parse_system(system));
      } else {
        throw fbi::ConfigError("run needs --config or --system");
      }
      if (!system.empty() && fbi::parse_system(system) != cfg.system) {
        // Switching systems resets the system-specific settings to that protocol.
        const auto keep = cfg;
        cfg = fbi::default_config(fbi::parse_system(system));
        cfg.method = keep.method;
        cfg.output_path = keep.output_path;
      }
      if (!method.empty()) cfg.method = fbi::parse_method(method);
      if (h) cfg.h = *h;
      if (t_end) cfg.t_end = *t_end;
      if (stride) cfg.sample_stride = *stride;
      if (!gains.empty()) {
        for (const auto& [k, v] : fbi::parse_gain_list(gains)) cfg.gains[k] = v;
      }
      if (!out_path.empty()) cfg.output_path = out_path;
      cfg.validate();

      fbi::RunSummary summary = cfg.output_path.empty() ? fbi::run_experiment(cfg, &std::cout) : fbi::run_experiment(cfg);
      print_summary(std::cerr, summary);
      return summary.ok ? 0 : kExitDomain;
    }

    if (*figure) {
      const auto outputs = fbi::replicate_figure(figure_id, scale, out_dir);
      bool ok = true;
      for (const auto& o : outputs) {
        std::cout << o.path << '\n';
        print_summary(std::cerr, o.summary);
        ok = ok && o.summary.ok;
      }
      return ok ? 0 : kExitDomain;
    }

    if (*check) {
      bool ok = true;
      for (const auto& item : fbi::run_checks(fbi::parse_system(check_system))) {
        std::cout << (item.pass ? "PASS " : "FAIL ") << item.name << ": " << item.detail << '\n';
        ok = ok && item.pass;
      }
      return ok ? 0 : kExitValidator;
    }
  } catch (const fbi::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const fbi::DomainError& e) {
    std::cerr << "domain error: " << e.what() << '\n';
    return kExitDomain;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  return 0;
}
