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

#pragma once

#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "dmm/simulator.hpp"

namespace dmm {

// JSON configuration shared by the simulator and the accountant CLI.  All
// simulator keys are flat; {"modulus": <decimal>} selects the field and the
// discretization appears under clip_norm / granularity / rounding_bias /
// flatten_seed.

struct ConfigFile {
  SimConfig sim;
  std::optional<double> delta;           // approx-DP target
  std::optional<double> epsilon_target;  // run the planner when present
  double dishonest_fraction = 0.0;
};

inline InjectionClass injection_class_from_string(const std::string& s) {
  if (s == "fresh_noise") return InjectionClass::FreshNoise;
  if (s == "fresh_gradient") return InjectionClass::FreshGradient;
  if (s == "fresh_mask") return InjectionClass::FreshMask;
  if (s == "reshare") return InjectionClass::Reshare;
  if (s == "output") return InjectionClass::Output;
  throw std::invalid_argument("unknown injection class: " + s);
}

inline const char* injection_class_name(InjectionClass c) {
  switch (c) {
    case InjectionClass::FreshNoise: return "fresh_noise";
    case InjectionClass::FreshGradient: return "fresh_gradient";
    case InjectionClass::FreshMask: return "fresh_mask";
    case InjectionClass::Reshare: return "reshare";
    case InjectionClass::Output: return "output";
  }
  return "?";
}

inline ConfigFile parse_config(const nlohmann::json& j) {
  ConfigFile out;
  SimConfig& cfg = out.sim;
  cfg.n = j.value("n", cfg.n);
  cfg.t_c = j.value("t_c", cfg.t_c);
  cfg.t_d = j.value("t_d", cfg.t_d);
  cfg.mu = j.value("mu", cfg.mu);
  cfg.iterations = j.value("iterations", cfg.iterations);
  cfg.dim = j.value("dim", cfg.dim);
  cfg.modulus = j.value("modulus", cfg.modulus);
  cfg.clip_norm = j.value("clip_norm", cfg.clip_norm);
  cfg.granularity = j.value("granularity", cfg.granularity);
  cfg.rounding_bias = j.value("rounding_bias", cfg.rounding_bias);
  cfg.sigma = j.value("sigma", cfg.sigma);
  cfg.flatten_seed = j.value("flatten_seed", cfg.flatten_seed);
  cfg.master_seed = j.value("seed", cfg.master_seed);
  cfg.factorization = j.value("factorization", cfg.factorization);
  cfg.min_sep = j.value("b", cfg.min_sep);
  cfg.optimized = j.value("optimized", cfg.optimized);
  cfg.universe = j.value("universe", cfg.universe);
  if (j.contains("corrupted")) cfg.corrupted = j.at("corrupted").get<std::vector<int>>();
  if (j.contains("dropouts")) {
    for (const auto& d : j.at("dropouts")) {
      cfg.dropouts.push_back({d.at("iteration").get<int>(), d.at("slot").get<int>(), d.value("round", 1)});
    }
  }
  if (j.contains("adversary")) {
    for (const auto& a : j.at("adversary")) {
      Injection inj;
      inj.cls = injection_class_from_string(a.at("class").get<std::string>());
      inj.iteration = a.at("iteration").get<int>();
      inj.sender = a.value("sender", 0);
      inj.target = a.value("target", 0);
      inj.noise_vector = a.value("noise_vector", true);
      inj.vector_id = a.value("vector_id", 0);
      inj.batch = a.value("batch", 0);
      inj.sharing = a.value("sharing", 1);
      inj.family = a.value("family", 0);
      inj.error = a.value("error", std::uint64_t{1});
      cfg.injections.push_back(inj);
    }
  }
  if (j.contains("delta")) out.delta = j.at("delta").get<double>();
  if (j.contains("epsilon_target")) out.epsilon_target = j.at("epsilon_target").get<double>();
  out.dishonest_fraction = j.value("dishonest_fraction", 0.0);
  return out;
}

inline ConfigFile load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  nlohmann::json j;
  in >> j;
  return parse_config(j);
}

inline nlohmann::json transcript_to_json(const IterationTranscript& tr) {
  return nlohmann::json{{"iteration", tr.iteration},
                        {"drop_round1", tr.drop_round1},
                        {"drop_round2", tr.drop_round2},
                        {"reshare_batches", tr.reshare_batches},
                        {"reshare_bytes_per_client", tr.reshare_bytes_per_client},
                        {"fresh_bytes_per_client", tr.fresh_bytes_per_client},
                        {"output_bytes_per_client", tr.output_bytes_per_client},
                        {"rounds", tr.rounds},
                        {"injections_applied", tr.injections_applied},
                        {"output_digest", tr.output_digest}};
}

// One JSON record per iteration.
inline void write_transcripts(const std::vector<IterationResult>& results, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open transcript " + path);
  for (const auto& r : results) out << transcript_to_json(r.transcript).dump() << "\n";
}

}  // namespace dmm
