/*

Copyright 2026 The mcsim Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

 https://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.

*/

// mcsim command-line entry point: run, sweep and calibrate.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mcsim/config.hpp"
#include "mcsim/harness.hpp"

namespace {

mcsim::ConfigMap load(const std::string& path, const std::vector<std::string>& overrides) {
  mcsim::ConfigMap m = path.empty() ? mcsim::ConfigMap() : mcsim::ConfigMap::from_file(path);
  for (const auto& o : overrides) m.apply_override(o);
  return m;
}

int emit(const mcsim::SweepResult& result, const std::string& out) {
  if (out.empty() || out == "-") {
    result.write_csv(std::cout);
  } else {
    std::ofstream os(out);
    if (!os) {
      std::cerr << "mcsim: cannot write " << out << '\n';
      return 1;
    }
    result.write_csv(os);
  }
  int failed = 0;
  for (const auto& c : result.cells) {
    if (!c.error.empty()) {
      std::cerr << "mcsim: cell " << c.cell << ": " << c.error << '\n';
      ++failed;
    }
  }
  return failed ? 2 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mcsim: cycle-level DRAM memory controller simulator"};
  app.require_subcommand(1);

  std::string config, out = "-", event_log, baseline;
  std::vector<std::string> overrides, axes;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  double target = 0.85, tolerance = 0.02;

  auto* run = app.add_subcommand("run", "Run one configuration and write metrics CSV");
  run->add_option("--config", config, "INI configuration file")->check(CLI::ExistingFile);
  run->add_option("--out", out, "CSV output path ('-' for stdout)");
  auto* seed_opt = run->add_option("--seed", seed, "Override run.seed");
  run->add_option("--event-log", event_log, "Write the per-event log to this file");
  run->add_option("--set", overrides, "Override a key: section.key=value");

  auto* sw = app.add_subcommand("sweep", "Run the Cartesian product of axes");
  sw->add_option("--config", config, "INI configuration file")->check(CLI::ExistingFile);
  sw->add_option("--axis", axes, "key=v1,v2,... (shorthands: scheduler, page_policy, channels, mapping)");
  sw->add_option("--baseline", baseline, "Baseline cell, e.g. scheduler=FR_FCFS");
  sw->add_option("--out", out, "CSV output path ('-' for stdout)");
  sw->add_option("--jobs,-j", jobs, "Cells run in parallel")->check(CLI::PositiveNumber);
  auto* sw_seed = sw->add_option("--seed", seed, "Override run.seed");
  sw->add_option("--set", overrides, "Override a key: section.key=value");

  auto* cal = app.add_subcommand("calibrate", "Find row_locality giving a single-access activation fraction");
  cal->add_option("--config", config, "INI configuration file")->check(CLI::ExistingFile);
  cal->add_option("--target-single-access", target, "Target fraction in (0,1)")->required();
  cal->add_option("--tolerance", tolerance, "Accepted absolute error");
  auto* cal_seed = cal->add_option("--seed", seed, "Override run.seed");
  cal->add_option("--set", overrides, "Override a key: section.key=value");

  CLI11_PARSE(app, argc, argv);

  try {
    mcsim::ConfigMap m = load(config, overrides);
    if (*seed_opt || *sw_seed || *cal_seed) m.set("run.seed", std::to_string(seed));

    if (*run) {
      mcsim::SweepResult r;
      r.cells.push_back(mcsim::run_cell(m, "run", event_log));
      r.baseline_of.push_back(0);
      return emit(r, out);
    }
    if (*sw) {
      std::vector<mcsim::SweepAxis> parsed;
      for (const auto& a : axes) parsed.push_back(mcsim::parse_axis(a));
      return emit(mcsim::sweep(m, parsed, mcsim::parse_baseline(baseline), jobs), out);
    }
    if (*cal) {
      if (m.get("run.measured_requests").empty() && m.get("run.measured_cycles").empty()) {
        m.set("run.warmup_requests", "20000");
        m.set("run.measured_requests", "200000");
      }
      const auto c = mcsim::calibrate(m, target, tolerance);
      for (const auto& [loc, f] : c.probes) std::cerr << "probe row_locality=" << loc << " single_access=" << f << '\n';
      std::cout << "row_locality=" << c.row_locality << "\nsingle_access_fraction=" << c.achieved
                << "\nwithin_tolerance=" << (c.within_tolerance ? "true" : "false") << '\n';
      return c.within_tolerance ? 0 : 3;
    }
  } catch (const mcsim::ConfigError& e) {
    std::cerr << "mcsim: config error [" << e.key() << "]: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "mcsim: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
