/*
 * SPDX-FileCopyrightText: Copyright (c) 2026 fdsb contributors
 * SPDX-License-Identifier: Apache-2.0
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Command-line driver for experiment specs and bundled presets.
//
//   fdsb run <spec.json>          run every cell, write outputs
//   fdsb compare-csi <spec.json>  run, then tabulate partial-CSI percentages
//   fdsb preset <name>            run presets/<name>.json
//
// Exit status: 0 on success, 1 when more than 1% of the cells failed, 2 on
// invalid input.

#include "fdsb/harness.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#ifndef FDSB_PRESET_DIR
#define FDSB_PRESET_DIR "presets"
#endif

namespace {

struct Overrides {
  std::optional<std::uint64_t> seed;
  int workers = 1;
  std::string out;
};

int execute(fdsb::ExperimentSpec spec, const Overrides& o, bool compare) {
  if (o.seed) spec.seed = *o.seed;
  if (!o.out.empty()) spec.output_dir = o.out;
  spec.validate();
  std::cerr << "running '" << spec.name << "': " << spec.trials << " trials x " << spec.sweep.size() << " points x "
            << spec.algorithms.size() << " algorithms\n";
  const fdsb::ResultTable table = fdsb::run_experiment(spec, o.workers);
  std::optional<std::vector<fdsb::CsiComparisonRow>> csi;
  if (compare) csi = fdsb::compare_partial_csi(spec, table);
  fdsb::write_outputs(spec.output_dir, spec, table, csi ? &*csi : nullptr);

  fdsb::write_results_csv(std::cout, table);
  if (csi) {
    std::cout << '\n';
    fdsb::write_csi_csv(std::cout, *csi);
  }
  std::cerr << "wrote " << spec.output_dir << " (" << table.failed_cells() << " failed cells)\n";
  return table.failed_overall() ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weighted sum-rate experiments for full-duplex self-backhauled networks"};
  app.require_subcommand(1);

  Overrides o;
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "Master seed (overrides the spec)");
  app.add_option("--workers", o.workers, "Trials run concurrently")->check(CLI::PositiveNumber);
  app.add_option("--out", o.out, "Output directory (overrides the spec)");
  std::string preset_dir = FDSB_PRESET_DIR;
  app.add_option("--preset-dir", preset_dir, "Directory holding <name>.json presets");

  std::string spec_path, preset_name;
  auto* run = app.add_subcommand("run", "Run an experiment spec");
  run->add_option("spec", spec_path, "Spec file (JSON)")->required();
  auto* cmp = app.add_subcommand("compare-csi", "Run a spec and compare partial-CSI algorithms to full CSI");
  cmp->add_option("spec", spec_path, "Spec file (JSON)")->required();
  auto* preset = app.add_subcommand("preset", "Run a bundled preset");
  preset->add_option("name", preset_name, "Preset name, e.g. smoke, desk, desk-csi, full")->required();
  bool print_only = false;
  preset->add_flag("--print", print_only, "Print the preset spec instead of running it");

  CLI11_PARSE(app, argc, argv);
  if (*seed_opt) o.seed = seed;

  try {
    if (preset->parsed()) {
      const auto path = std::filesystem::path(preset_dir) / (preset_name + ".json");
      fdsb::ExperimentSpec spec = fdsb::load_experiment_spec(path.string());
      if (print_only) {
        std::cout << fdsb::experiment_spec_json(spec) << '\n';
        return 0;
      }
      const bool compare = spec.compare_csi;
      return execute(std::move(spec), o, compare);
    }
    return execute(fdsb::load_experiment_spec(spec_path), o, cmp->parsed());
  } catch (const fdsb::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
