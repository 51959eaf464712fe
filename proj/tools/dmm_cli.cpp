// Copyright 2026 The DMM-LRP Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "dmm/accountant.hpp"
#include "dmm/config.hpp"
#include "dmm/cost_model.hpp"
#include "dmm/simulator.hpp"

namespace {

int run_costs(const std::string& preset, const std::string& mechanism, const std::string& csv_path) {
  auto mech = mechanism == "optimal" ? dmm::Mechanism::OptimalDense : dmm::Mechanism::Honaker;
  auto row = dmm::preset_costs(preset, mech);
  std::printf("scenario            : %s\n", row.scenario.name.c_str());
  std::printf("model dimension     : %lld\n", static_cast<long long>(row.scenario.dim));
  std::printf("iterations          : %d (worst iteration reshares %.0f vectors)\n", row.scenario.iterations,
              dmm::worst_iteration_vectors(row.scenario));
  std::printf("committee size      : %d, mu = %.4f, %d-bit field\n", row.scenario.n, row.scenario.mu,
              row.scenario.field_bits);
  std::printf("resharing comm.     : %s per client per iteration\n", dmm::format_bytes(row.lrp_bytes).c_str());
  std::printf("naive resharing     : %s per client per iteration\n", dmm::format_bytes(row.naive_bytes).c_str());
  std::printf("all-inclusive       : %s per client per iteration (plus fresh shares and outputs)\n",
              dmm::format_bytes(row.all_inclusive_bytes).c_str());
  std::printf("secure-agg baseline : %s per client per iteration (external reference)\n",
              dmm::format_bytes(row.secagg_reference_bytes).c_str());
  std::printf("naive / resharing   : %.1fx\n", row.naive_bytes / row.lrp_bytes);
  if (!csv_path.empty()) {
    std::ofstream csv(csv_path);
    csv << "scenario,dim,iterations,n,mu,field_bits,lrp_bytes,naive_bytes,all_inclusive_bytes,secagg_bytes\n";
    csv << row.scenario.name << ',' << row.scenario.dim << ',' << row.scenario.iterations << ',' << row.scenario.n
        << ',' << row.scenario.mu << ',' << row.scenario.field_bits << ',' << static_cast<long long>(row.lrp_bytes)
        << ',' << static_cast<long long>(row.naive_bytes) << ',' << static_cast<long long>(row.all_inclusive_bytes)
        << ',' << static_cast<long long>(row.secagg_reference_bytes) << "\n";
    std::printf("csv written to %s\n", csv_path.c_str());
  }
  return 0;
}

int run_accountant(const std::string& config_path, bool json_only) {
  auto file = dmm::load_config(config_path);
  const auto& cfg = file.sim;
  auto plan = dmm::make_plan(cfg);
  double delta_sens = dmm::plan_sensitivity(plan);
  double delta = file.delta.value_or(1.0 / (static_cast<double>(cfg.n) * cfg.iterations));

  double gamma = cfg.granularity;
  double beta = cfg.rounding_bias;
  double sigma = cfg.sigma;
  if (file.epsilon_target) {
    auto planned = dmm::plan_parameters(cfg.n, cfg.dim, cfg.iterations, cfg.clip_norm, *file.epsilon_target,
                                        plan.workload.max_row_norm(), plan.factor_b.max_row_norm(), delta_sens,
                                        cfg.modulus);
    gamma = planned.gamma;
    beta = planned.beta;
    sigma = planned.sigma;
  }

  dmm::AccountantInputs in;
  in.sensitivity = delta_sens;
  in.clip_norm = cfg.clip_norm;
  in.granularity = gamma;
  in.rounding_bias = beta;
  in.sigma = sigma;
  in.n = cfg.n;
  in.d = cfg.dim;
  in.delta = delta;
  in.dishonest_fraction = file.dishonest_fraction;
  double eps_cdp = dmm::epsilon_cdp(in);
  double eps_adp = dmm::cdp_to_adp(eps_cdp, delta);

  nlohmann::json j{{"sensitivity", delta_sens}, {"sigma", sigma},     {"gamma", gamma},
                   {"beta", beta},              {"eps_cdp", eps_cdp}, {"eps_adp", eps_adp},
                   {"delta", delta}};
  if (!json_only) {
    std::printf("factorization      : %s (T*=%d, b=%d)\n", cfg.factorization.c_str(), plan.iterations, plan.min_sep);
    std::printf("sensitivity Delta  : %.6f\n", delta_sens);
    std::printf("%-10s %-14s %-14s %-14s %-14s %-14s\n", "", "sigma", "gamma", "beta", "eps_cdp", "eps_adp");
    std::printf("%-10s %-14.6g %-14.6g %-14.6g %-14.6g %-14.6g\n", "value", sigma, gamma, beta, eps_cdp, eps_adp);
  }
  std::printf("%s\n", j.dump().c_str());
  return 0;
}

int run_simulate(const std::string& config_path, const std::string& transcript_path, bool oracle_check) {
  auto file = dmm::load_config(config_path);
  const auto& cfg = file.sim;
  dmm::RandomBallProvider provider(cfg.master_seed, cfg.dim, cfg.clip_norm);
  auto result = dmm::run_training(cfg, provider, oracle_check);

  std::uint64_t reshare_total = 0, fresh_total = 0, output_total = 0;
  for (const auto& it : result.iterations) {
    reshare_total += it.transcript.reshare_bytes_per_client;
    fresh_total += it.transcript.fresh_bytes_per_client;
    output_total += it.transcript.output_bytes_per_client;
  }
  std::printf("iterations run          : %zu\n", result.iterations.size());
  std::printf("reshare bytes / client  : %llu total, %.1f per iteration\n",
              static_cast<unsigned long long>(reshare_total),
              static_cast<double>(reshare_total) / result.iterations.size());
  std::printf("fresh bytes / client    : %llu total\n", static_cast<unsigned long long>(fresh_total));
  std::printf("output bytes / client   : %llu total\n", static_cast<unsigned long long>(output_total));
  if (oracle_check) {
    bool ok = true;
    for (std::size_t t = 0; t < result.iterations.size(); ++t) {
      ok = ok && result.iterations[t].release == result.oracle[t].release &&
           result.iterations[t].cumulative == result.oracle[t].cumulative;
    }
    std::printf("oracle equality         : %s\n", ok ? "exact" : "MISMATCH");
    if (!ok) return 1;
  }
  if (!transcript_path.empty()) {
    dmm::write_transcripts(result.iterations, transcript_path);
    std::printf("transcript written to %s\n", transcript_path.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Packed-sharing committee resharing, correlated-noise release simulation, privacy accounting, and communication costs"};
  app.require_subcommand(1);

  auto* costs = app.add_subcommand("costs", "Analytic per-client communication for the preset scenarios");
  std::string preset = "so", mechanism = "honaker", csv_path;
  costs->add_option("--preset", preset, "so | femnist")->check(CLI::IsMember({"so", "femnist"}));
  costs->add_option("--mechanism", mechanism, "honaker | optimal")->check(CLI::IsMember({"honaker", "optimal"}));
  costs->add_option("--csv", csv_path, "also write a CSV row");

  auto* accountant = app.add_subcommand("accountant", "Privacy accounting for a config (text table and JSON)");
  std::string acc_config;
  bool json_only = false;
  accountant->add_option("--config", acc_config, "JSON config file")->required();
  accountant->add_flag("--json", json_only, "print only the JSON record");

  auto* simulate = app.add_subcommand("simulate", "Run the committee protocol from a config");
  std::string sim_config, transcript_path;
  bool oracle_check = false;
  simulate->add_option("--config", sim_config, "JSON config file")->required();
  simulate->add_option("--transcript", transcript_path, "JSON-lines transcript output path");
  simulate->add_flag("--oracle-check", oracle_check, "also run the plaintext oracle and compare");

  CLI11_PARSE(app, argc, argv);
  try {
    if (costs->parsed()) return run_costs(preset, mechanism, csv_path);
    if (accountant->parsed()) return run_accountant(acc_config, json_only);
    if (simulate->parsed()) return run_simulate(sim_config, transcript_path, oracle_check);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
