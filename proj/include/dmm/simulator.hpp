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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dmm/dgauss.hpp"
#include "dmm/discretization.hpp"
#include "dmm/factorization.hpp"
#include "dmm/field.hpp"
#include "dmm/packed_sharing.hpp"
#include "dmm/resharing.hpp"
#include "dmm/rng.hpp"
#include "dmm/schedule.hpp"

namespace dmm {

// Committee-based simulation of the correlated-noise aggregation protocol:
// per iteration, a fresh committee of n clients shares its discretized
// gradients and noise, recovers the previous committee's reshared vectors,
// combines everything into the release sharings sent to the server, and
// reshares the still-live vectors onward.  All traffic is routed through the
// server as opaque addressed envelopes; the byte ledger counts field-element
// payloads.

// ---------------------------------------------------------------------------
// Configuration

struct DropoutEvent {
  int iteration = 1;  // 1-based
  int slot = 0;       // committee slot, 0-based
  int round = 1;      // 1 = before contributing, 2 = after contributing
};

enum class InjectionClass { FreshNoise, FreshGradient, FreshMask, Reshare, Output };

// One additive tampering event by a corrupted party.  Fresh-class injections
// perturb the share sent to `target` for the sender's own sharing; Reshare
// perturbs one reshare message; Output perturbs the sender's own release
// share.  Slots are 0-based, sharing indices 1-based.
struct Injection {
  InjectionClass cls = InjectionClass::Output;
  int iteration = 1;
  int sender = 0;
  int target = 0;
  bool noise_vector = true;  // Reshare: noise vs gradient vector
  int vector_id = 0;         // Reshare/FreshNoise: schedule column id
  int batch = 0;
  int sharing = 1;  // l in 1..k
  int family = 0;   // Output/FreshMask: orientation family
  std::uint64_t error = 1;
};

struct SimConfig {
  int n = 16;
  int t_c = 0;
  int t_d = 0;
  double mu = 1.0 / 6.0;
  int iterations = 8;
  int dim = 8;
  std::uint64_t modulus = Field::kDefaultModulus;
  double clip_norm = 1.0;
  double granularity = 0.05;
  double rounding_bias = 0.0625;
  double sigma = 0.4;  // real-unit noise scale; sampler scale is sigma/granularity
  std::uint64_t flatten_seed = 1;
  std::uint64_t master_seed = 1;
  std::string factorization = "honaker";  // "honaker", "prefix", or a file path
  int min_sep = 1;
  bool optimized = true;  // prefix-release mode (noise-only resharing)
  int universe = 0;       // client universe size; 0 -> 3n
  std::vector<int> corrupted;
  std::vector<DropoutEvent> dropouts;
  std::vector<Injection> injections;

  int packing() const { return static_cast<int>(std::floor(2.0 * mu * n)); }

  void validate() const {
    if (n < 2 || iterations < 1 || dim < 1) throw std::invalid_argument("bad simulation dimensions");
    if (mu <= 0 || mu >= 0.5) throw std::invalid_argument("mu must lie in (0, 1/2)");
    const int k = packing();
    if (k < 1) throw std::invalid_argument("packing parameter floor(2 mu n) must be at least 1");
    if (static_cast<double>(t_c + t_d) >= (0.5 - mu) * n) {
      throw std::invalid_argument("corruption and dropout budget violated: need t_c + t_d < (1/2 - mu) n");
    }
    if (t_c + k > n - t_d) throw std::invalid_argument("recovery threshold t_c + k must stay below n - t_d");
    if (sigma != 0.0 && sigma / granularity < 0.5) {
      throw std::invalid_argument("noise scale sigma/gamma must be at least 1/2 (or 0 for noiseless runs)");
    }
    if (static_cast<int>(corrupted.size()) > t_c) throw std::invalid_argument("more corrupted slots than t_c");
    for (int c : corrupted) {
      if (c < 0 || c >= n) throw std::invalid_argument("corrupted slot out of range");
    }
    std::map<int, std::set<int>> per_iter;
    for (const auto& ev : dropouts) {
      if (ev.iteration < 1 || ev.iteration > iterations) throw std::invalid_argument("dropout iteration out of range");
      if (ev.slot < 0 || ev.slot >= n) throw std::invalid_argument("dropout slot out of range");
      if (ev.round != 1 && ev.round != 2) throw std::invalid_argument("dropout round must be 1 or 2");
      if (std::find(corrupted.begin(), corrupted.end(), ev.slot) != corrupted.end()) {
        throw std::invalid_argument("dropout slots must be honest");
      }
      per_iter[ev.iteration].insert(ev.slot);
    }
    for (const auto& [iter, slots] : per_iter) {
      if (static_cast<int>(slots.size()) > t_d) throw std::invalid_argument("too many dropouts in one iteration");
    }
    if (universe != 0 && universe < n) throw std::invalid_argument("client universe smaller than a committee");
  }

  DiscretizationParams discretization_params() const {
    DiscretizationParams p;
    p.clip_norm = clip_norm;
    p.granularity = granularity;
    p.rounding_bias = rounding_bias;
    p.dim = dim;
    p.flatten_seed = flatten_seed;
    return p;
  }
};

inline FactorizationPlan make_plan(const SimConfig& cfg) {
  if (cfg.factorization == "honaker") return honaker_tree(cfg.iterations, cfg.min_sep);
  if (cfg.factorization == "prefix") return identity_factorization(cfg.iterations, cfg.min_sep);
  auto plan = load_factorization(cfg.factorization);
  if (plan.iterations != cfg.iterations) throw std::invalid_argument("factorization iteration count mismatch");
  return plan;
}

// Deterministic round-robin committee over the client universe.
inline std::vector<int> committee_roster(const SimConfig& cfg, int iteration) {
  const int universe = cfg.universe > 0 ? cfg.universe : 3 * cfg.n;
  const int offset = static_cast<int>(cfg.master_seed % static_cast<std::uint64_t>(universe));
  std::vector<int> roster(cfg.n);
  for (int s = 0; s < cfg.n; ++s) {
    roster[s] = (offset + (iteration - 1) * cfg.n + s) % universe;
  }
  return roster;
}

// ---------------------------------------------------------------------------
// Shared client-side computations (used identically by the protocol and the
// plaintext oracle; the oracle differs only in skipping the sharing layer).

namespace seedtag {
constexpr std::uint64_t kNoise = 0x4E4F4953;
constexpr std::uint64_t kRounding = 0x524F554E;
constexpr std::uint64_t kMask = 0x4D41534B;
constexpr std::uint64_t kFreshShare = 0x53485246;
constexpr std::uint64_t kReshare = 0x52455348;
constexpr std::uint64_t kGradient = 0x47524144;
constexpr std::uint64_t kData = 0x44415441;
}  // namespace seedtag

// Clip, scale, flatten, round, and field-encode one client gradient.
inline std::vector<std::uint64_t> discretize_gradient(const SimConfig& cfg, const FlattenSpec& spec, const Field& f,
                                                      int iteration, int slot, std::span<const double> grad) {
  DiscretizationParams p = cfg.discretization_params();
  auto clipped = clip_scale(grad, p);
  auto flat = flatten(clipped, spec);
  Rng rng(derive_seed(cfg.master_seed, {seedtag::kRounding, static_cast<std::uint64_t>(iteration),
                                        static_cast<std::uint64_t>(slot)}));
  auto rounded = cond_round(flat, p, rng);
  std::vector<std::uint64_t> out(rounded.size());
  for (std::size_t i = 0; i < rounded.size(); ++i) out[i] = f.encode_signed(rounded[i]);
  return out;
}

// One client's field-encoded noise contribution to vector `vec` (d' draws).
inline std::vector<std::uint64_t> client_noise(const SimConfig& cfg, const Field& f, int iteration, int slot,
                                               int vec_id, int count) {
  std::vector<std::uint64_t> out(count, 0);
  if (cfg.sigma == 0.0) return out;  // noiseless runs
  Rng rng(derive_seed(cfg.master_seed, {seedtag::kNoise, static_cast<std::uint64_t>(iteration),
                                        static_cast<std::uint64_t>(slot), static_cast<std::uint64_t>(vec_id)}));
  DiscreteGaussianSampler sampler(cfg.sigma / cfg.granularity);
  for (int i = 0; i < count; ++i) out[i] = f.encode_signed(sampler.sample(rng));
  return out;
}

inline void survivor_sets(const SimConfig& cfg, int iteration, std::vector<int>& surv1, std::vector<int>& surv2) {
  std::set<int> d1, d2;
  for (const auto& ev : cfg.dropouts) {
    if (ev.iteration != iteration) continue;
    (ev.round == 1 ? d1 : d2).insert(ev.slot);
  }
  surv1.clear();
  surv2.clear();
  for (int s = 0; s < cfg.n; ++s) {
    if (d1.count(s)) continue;
    surv1.push_back(s);
    if (!d2.count(s)) surv2.push_back(s);
  }
}

inline std::uint64_t fnv1a(std::span<const std::uint64_t> values) {
  std::uint64_t h = 1469598103934665603ULL;
  for (std::uint64_t v : values) {
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xFF;
      h *= 1099511628211ULL;
    }
  }
  return h;
}

// ---------------------------------------------------------------------------
// Iteration products

struct IterationTranscript {
  int iteration = 0;
  std::vector<int> drop_round1, drop_round2;
  std::uint64_t reshare_batches = 0;           // live reshare sharings this iteration
  std::uint64_t reshare_bytes_per_client = 0;  // n * 4 bytes per live batch
  std::uint64_t fresh_bytes_per_client = 0;
  std::uint64_t output_bytes_per_client = 0;
  int rounds = 2;
  std::size_t injections_applied = 0;
  std::uint64_t output_digest = 0;
};

struct IterationResult {
  std::vector<std::uint64_t> release;     // reconstructed this iteration (length d')
  std::vector<std::uint64_t> cumulative;  // running prefix release (length d')
  std::vector<double> output;             // post-processed cumulative (length d)
  IterationTranscript transcript;
};

// ---------------------------------------------------------------------------
// Simulator

class Simulator {
 public:
  explicit Simulator(const SimConfig& cfg)
      : cfg_(cfg),
        field_(cfg.modulus),
        plan_(make_plan(cfg)),
        scheme_(field_, cfg.n, cfg.t_c, cfg.packing()),
        spec_(FlattenSpec::make(cfg.dim, cfg.flatten_seed)),
        noise_sched_(VectorSchedule::noise_schedule(plan_, cfg.optimized)),
        grad_sched_(VectorSchedule::gradient_schedule(plan_, cfg.optimized)) {
    cfg_.validate();
    if (field_.modulus() <= static_cast<std::uint64_t>(cfg_.n + scheme_.k())) {
      throw std::invalid_argument("field too small for the committee size");
    }
    k_ = scheme_.k();
    dim_padded_ = spec_.dim_padded;
    batches_ = (dim_padded_ + k_ * k_ - 1) / (k_ * k_);
    cumulative_.assign(dim_padded_, 0);
  }

  const Field& field() const { return field_; }
  const FactorizationPlan& plan() const { return plan_; }
  const PackedScheme& scheme() const { return scheme_; }
  const FlattenSpec& flatten_spec() const { return spec_; }
  int batches() const { return batches_; }
  int next_iteration() const { return next_iteration_; }

  // Runs one protocol iteration; gradients holds one d-vector per committee
  // slot (entries for round-1 dropouts are ignored).
  IterationResult step(const std::vector<std::vector<double>>& gradients) {
    const int T = next_iteration_;
    if (T > cfg_.iterations) throw std::runtime_error("training already finished");
    if (static_cast<int>(gradients.size()) != cfg_.n) throw std::invalid_argument("need one gradient per slot");

    std::vector<int> surv1, surv2;
    survivor_sets(cfg_, T, surv1, surv2);

    IterationResult result;
    auto& tr = result.transcript;
    tr.iteration = T;
    for (int s = 0; s < cfg_.n; ++s) {
      bool in1 = std::find(surv1.begin(), surv1.end(), s) != surv1.end();
      bool in2 = std::find(surv2.begin(), surv2.end(), s) != surv2.end();
      if (!in1) tr.drop_round1.push_back(s);
      else if (!in2) tr.drop_round2.push_back(s);
    }

    // --- Round 1: recover reshared vectors from the previous committee.
    std::map<VecKey, Held> held;
    if (T > 1) {
      if (static_cast<int>(prev_survivors_.size()) < scheme_.recons_threshold()) {
        throw std::runtime_error("abort: too many dropouts (iteration " + std::to_string(T) + ")");
      }
      std::set<int> drop;
      for (int i = 1; i <= cfg_.n; ++i) drop.insert(i);
      for (int s : prev_survivors_) drop.erase(s + 1);
      for (auto& flight : inflight_) {
        Held h;
        h.flipped = flight.flipped_on_recovery;
        h.shares.assign(cfg_.n, std::vector<std::uint64_t>(static_cast<std::size_t>(batches_) * k_, 0));
        for (int p : surv1) {
          for (int b = 0; b < batches_; ++b) {
            auto rec = recover(scheme_, drop, flight.msgs[b][p]);
            for (int m = 1; m <= k_; ++m) h.shares[p][idx(b, m)] = rec[m - 1];
          }
        }
        held.emplace(flight.key, std::move(h));
      }
    }
    inflight_.clear();

    // --- Round 1: fresh sharings (gradients, entering noise, masks).
    const bool need_family1 = family1_needed(T);
    Held fresh_grad = blank_held();
    std::map<int, Held> fresh_noise;
    for (int v : noise_sched_.entering(T)) fresh_noise.emplace(v, blank_held());
    Held mask0 = blank_held(), mask1 = blank_held();

    for (int s : surv1) {
      Rng share_rng(derive_seed(cfg_.master_seed, {seedtag::kFreshShare, static_cast<std::uint64_t>(T),
                                                   static_cast<std::uint64_t>(s)}));
      auto grad_vec = discretize_gradient(cfg_, spec_, field_, T, s, gradients[s]);
      share_fresh_vector(grad_vec, T, s, InjectionClass::FreshGradient, -1, share_rng, &fresh_grad, tr);
      for (int v : noise_sched_.entering(T)) {
        auto noise_vec = client_noise(cfg_, field_, T, s, v, dim_padded_);
        share_fresh_vector(noise_vec, T, s, InjectionClass::FreshNoise, v, share_rng, &fresh_noise.at(v), tr);
      }
      if (need_family1) {
        Rng mask_rng(derive_seed(cfg_.master_seed, {seedtag::kMask, static_cast<std::uint64_t>(T),
                                                    static_cast<std::uint64_t>(s)}));
        share_masks(T, s, mask_rng, share_rng, &mask0, &mask1, tr);
      }
    }

    // --- Round 2: release sharings to the server.
    // Two orientation families per batch: family 0 sums even-parity vectors,
    // family 1 the transposed ones; the server un-transposes family 1 when it
    // assembles the release, and the fresh masks cancel in that sum.
    const int families = need_family1 ? 2 : 1;
    std::vector<std::vector<std::vector<std::uint64_t>>> y(
        2, std::vector<std::vector<std::uint64_t>>(cfg_.n,
                                                   std::vector<std::uint64_t>(static_cast<std::size_t>(batches_) * k_, 0)));
    auto add_term = [&](const Held& src, long long coeff, bool flip) {
      const std::uint64_t c = encode_coeff(coeff);
      const int fam = flip ? 1 : 0;
      for (int p : surv2) {
        for (std::size_t i = 0; i < src.shares[p].size(); ++i) {
          y[fam][p][i] = field_.add(y[fam][p][i], field_.mul(c, src.shares[p][i]));
        }
      }
    };
    for (const auto& use : grad_sched_.uses(T)) {
      const int vec_iter = use.id + 1;  // gradient column id == iteration - 1
      const bool flip = orient(grad_sched_, use.id, T);
      if (vec_iter == T) add_term(fresh_grad, use.coeff, flip);
      else add_term(held.at(VecKey{false, use.id}), use.coeff, flip);
    }
    for (const auto& use : noise_sched_.uses(T)) {
      const bool flip = orient(noise_sched_, use.id, T);
      if (noise_sched_.creation_iteration(use.id) == T) add_term(fresh_noise.at(use.id), use.coeff, flip);
      else add_term(held.at(VecKey{true, use.id}), use.coeff, flip);
    }
    if (need_family1) {
      add_term(mask0, 1, false);
      add_term(mask1, 1, true);
    }
    for (const auto& inj : cfg_.injections) {
      if (inj.cls != InjectionClass::Output || inj.iteration != T) continue;
      if (std::find(surv2.begin(), surv2.end(), inj.sender) == surv2.end()) continue;
      if (inj.family >= families || inj.batch >= batches_ || inj.sharing < 1 || inj.sharing > k_) continue;
      auto& cell = y[inj.family][inj.sender][idx(inj.batch, inj.sharing)];
      cell = field_.add(cell, inj.error);
      ++tr.injections_applied;
    }
    tr.output_bytes_per_client = static_cast<std::uint64_t>(families) * batches_ * k_ * 4;

    // --- Server: reconstruct every slot of both families and assemble.
    std::vector<int> gamma_out;
    for (int s : surv2) gamma_out.push_back(s + 1);
    if (static_cast<int>(gamma_out.size()) < scheme_.recons_threshold()) {
      throw std::runtime_error("abort: too many dropouts (iteration " + std::to_string(T) + ")");
    }
    result.release.assign(dim_padded_, 0);
    for (int b = 0; b < batches_; ++b) {
      for (int fam = 0; fam < families; ++fam) {
        for (int i = 1; i <= k_; ++i) {
          for (int m = 1; m <= k_; ++m) {
            const auto& coeffs = scheme_.recons_coeffs(gamma_out, m);
            std::uint64_t acc = 0;
            for (std::size_t gi = 0; gi < gamma_out.size(); ++gi) {
              acc = field_.add(acc, field_.mul(coeffs[gi], y[fam][gamma_out[gi] - 1][idx(b, i)]));
            }
            // Family 0 slot (i, m) is coordinate (i, m); family 1 holds the
            // transposed layout, so slot (i, m) lands on coordinate (m, i).
            int row = fam == 0 ? i : m;
            int col = fam == 0 ? m : i;
            int coord = b * k_ * k_ + (row - 1) * k_ + (col - 1);
            if (coord < dim_padded_) result.release[coord] = field_.add(result.release[coord], acc);
          }
        }
      }
    }

    if (cfg_.optimized) {
      for (int i = 0; i < dim_padded_; ++i) cumulative_[i] = field_.add(cumulative_[i], result.release[i]);
    } else {
      cumulative_ = result.release;
    }
    result.cumulative = cumulative_;
    result.output = server_postprocess(cumulative_, field_, cfg_.discretization_params(), spec_);
    tr.output_digest = fnv1a(result.cumulative);

    // --- Round 2: reshare live vectors to the next committee.
    if (T < cfg_.iterations) {
      auto reshare_vector = [&](const VecKey& key, const Held& src) {
        InFlight flight;
        flight.key = key;
        flight.flipped_on_recovery = !src.flipped;
        flight.msgs.assign(batches_, std::vector<std::map<int, std::uint64_t>>(cfg_.n));
        for (int p : surv2) {
          Rng rng(derive_seed(cfg_.master_seed, {seedtag::kReshare, static_cast<std::uint64_t>(T),
                                                 static_cast<std::uint64_t>(p), static_cast<std::uint64_t>(key.noise),
                                                 static_cast<std::uint64_t>(key.id)}));
          for (int b = 0; b < batches_; ++b) {
            std::vector<std::uint64_t> batch(k_);
            for (int l = 1; l <= k_; ++l) batch[l - 1] = src.shares[p][idx(b, l)];
            auto out = scheme_.share(batch, rng);
            for (int t = 0; t < cfg_.n; ++t) {
              std::uint64_t value = out[t];
              for (const auto& inj : cfg_.injections) {
                if (inj.cls == InjectionClass::Reshare && inj.iteration == T && inj.sender == p && inj.target == t &&
                    inj.noise_vector == key.noise && inj.vector_id == key.id && inj.batch == b) {
                  value = field_.add(value, inj.error);
                  ++tr.injections_applied;
                }
              }
              flight.msgs[b][t][p + 1] = value;
            }
          }
        }
        inflight_.push_back(std::move(flight));
        tr.reshare_batches += static_cast<std::uint64_t>(batches_);
      };
      for (int v : noise_sched_.reshare_set(T)) {
        const Held& src = (noise_sched_.creation_iteration(v) == T) ? fresh_noise.at(v) : held.at(VecKey{true, v});
        reshare_vector(VecKey{true, v}, src);
      }
      for (int g : grad_sched_.reshare_set(T)) {
        const Held& src = (g + 1 == T) ? fresh_grad : held.at(VecKey{false, g});
        reshare_vector(VecKey{false, g}, src);
      }
    }
    tr.reshare_bytes_per_client = tr.reshare_batches * static_cast<std::uint64_t>(cfg_.n) * 4;

    prev_survivors_ = surv2;
    ++next_iteration_;
    return result;
  }

 private:
  struct VecKey {
    bool noise = true;
    int id = 0;
    bool operator<(const VecKey& o) const { return std::tie(noise, id) < std::tie(o.noise, o.id); }
  };
  struct Held {
    bool flipped = false;
    std::vector<std::vector<std::uint64_t>> shares;  // [slot][batch*k + (l-1)]
  };
  struct InFlight {
    VecKey key;
    bool flipped_on_recovery = false;
    // msgs[batch][target slot][source share index 1..n] = value
    std::vector<std::vector<std::map<int, std::uint64_t>>> msgs;
  };

  std::size_t idx(int batch, int sharing) const { return static_cast<std::size_t>(batch) * k_ + (sharing - 1); }

  Held blank_held() const {
    Held h;
    h.shares.assign(cfg_.n, std::vector<std::uint64_t>(static_cast<std::size_t>(batches_) * k_, 0));
    return h;
  }

  bool orient(const VectorSchedule& sched, int id, int T) const {
    return k_ > 1 && sched.flipped(id, T);
  }

  bool family1_needed(int T) const {
    if (k_ == 1) return false;
    for (const auto& use : noise_sched_.uses(T)) {
      if (noise_sched_.flipped(use.id, T)) return true;
    }
    for (const auto& use : grad_sched_.uses(T)) {
      if (grad_sched_.flipped(use.id, T)) return true;
    }
    return false;
  }

  std::uint64_t encode_coeff(long long c) const {
    return c >= 0 ? field_.reduce(static_cast<std::uint64_t>(c))
                  : field_.neg(field_.reduce(static_cast<std::uint64_t>(-c)));
  }

  // Shares `vec` (length d', orientation 0) from sender s to the committee
  // and folds the addressed shares into the aggregate table.
  void share_fresh_vector(const std::vector<std::uint64_t>& vec, int T, int s, InjectionClass cls, int vec_id,
                          Rng& rng, Held* aggregate, IterationTranscript& tr) {
    for (int b = 0; b < batches_; ++b) {
      for (int l = 1; l <= k_; ++l) {
        std::vector<std::uint64_t> secrets(k_, 0);
        for (int m = 1; m <= k_; ++m) {
          int coord = b * k_ * k_ + (l - 1) * k_ + (m - 1);
          if (coord < dim_padded_) secrets[m - 1] = vec[coord];
        }
        auto out = scheme_.share(secrets, rng);
        for (int t = 0; t < cfg_.n; ++t) {
          std::uint64_t value = out[t];
          for (const auto& inj : cfg_.injections) {
            if (inj.cls == cls && inj.iteration == T && inj.sender == s && inj.target == t && inj.batch == b &&
                inj.sharing == l && (cls != InjectionClass::FreshNoise || inj.vector_id == vec_id)) {
              value = field_.add(value, inj.error);
              ++tr.injections_applied;
            }
          }
          aggregate->shares[t][idx(b, l)] = field_.add(aggregate->shares[t][idx(b, l)], value);
        }
      }
    }
    tr.fresh_bytes_per_client += static_cast<std::uint64_t>(batches_) * k_ * cfg_.n * 4;
  }

  // Transpose-cancelling mask pair: family 0 receives the rows of R, family 1
  // the rows of -R^T, so the assembled release is unchanged while each family
  // alone is uniformly masked.
  void share_masks(int T, int s, Rng& mask_rng, Rng& share_rng, Held* m0, Held* m1, IterationTranscript& tr) {
    for (int b = 0; b < batches_; ++b) {
      std::vector<std::uint64_t> r(static_cast<std::size_t>(k_) * k_);
      for (auto& v : r) v = mask_rng.uniform_field(field_);
      for (int l = 1; l <= k_; ++l) {
        std::vector<std::uint64_t> row0(k_), row1(k_);
        for (int m = 1; m <= k_; ++m) {
          row0[m - 1] = r[(l - 1) * k_ + (m - 1)];
          row1[m - 1] = field_.neg(r[(m - 1) * k_ + (l - 1)]);
        }
        auto out0 = scheme_.share(row0, share_rng);
        auto out1 = scheme_.share(row1, share_rng);
        for (int t = 0; t < cfg_.n; ++t) {
          std::uint64_t v0 = out0[t], v1 = out1[t];
          for (const auto& inj : cfg_.injections) {
            if (inj.cls == InjectionClass::FreshMask && inj.iteration == T && inj.sender == s && inj.target == t &&
                inj.batch == b && inj.sharing == l) {
              (inj.family == 0 ? v0 : v1) = field_.add(inj.family == 0 ? v0 : v1, inj.error);
              ++tr.injections_applied;
            }
          }
          m0->shares[t][idx(b, l)] = field_.add(m0->shares[t][idx(b, l)], v0);
          m1->shares[t][idx(b, l)] = field_.add(m1->shares[t][idx(b, l)], v1);
        }
      }
    }
    tr.fresh_bytes_per_client += 2ULL * batches_ * k_ * cfg_.n * 4;
  }

  SimConfig cfg_;
  Field field_;
  FactorizationPlan plan_;
  PackedScheme scheme_;
  FlattenSpec spec_;
  VectorSchedule noise_sched_;
  VectorSchedule grad_sched_;
  int k_ = 1;
  int dim_padded_ = 1;
  int batches_ = 1;
  int next_iteration_ = 1;
  std::vector<int> prev_survivors_;
  std::vector<InFlight> inflight_;
  std::vector<std::uint64_t> cumulative_;
};

// ---------------------------------------------------------------------------
// Plaintext oracle: the released functionality computed directly on the
// aggregated plaintexts with identical seeds and modular arithmetic, no
// sharing layer.  Protocol outputs must match it bit-for-bit in field
// representation when no adversary is active.

class PlainOracle {
 public:
  explicit PlainOracle(const SimConfig& cfg)
      : cfg_(cfg),
        field_(cfg.modulus),
        plan_(make_plan(cfg)),
        spec_(FlattenSpec::make(cfg.dim, cfg.flatten_seed)),
        noise_sched_(VectorSchedule::noise_schedule(plan_, cfg.optimized)),
        grad_sched_(VectorSchedule::gradient_schedule(plan_, cfg.optimized)) {
    dim_padded_ = spec_.dim_padded;
    cumulative_.assign(dim_padded_, 0);
  }

  IterationResult step(const std::vector<std::vector<double>>& gradients) {
    const int T = next_iteration_++;
    std::vector<int> surv1, surv2;
    survivor_sets(cfg_, T, surv1, surv2);

    std::vector<std::uint64_t> grad_sum(dim_padded_, 0);
    for (int s : surv1) {
      auto v = discretize_gradient(cfg_, spec_, field_, T, s, gradients[s]);
      for (int i = 0; i < dim_padded_; ++i) grad_sum[i] = field_.add(grad_sum[i], v[i]);
    }
    grad_vectors_[T] = std::move(grad_sum);
    for (int v : noise_sched_.entering(T)) {
      std::vector<std::uint64_t> acc(dim_padded_, 0);
      for (int s : surv1) {
        auto draw = client_noise(cfg_, field_, T, s, v, dim_padded_);
        for (int i = 0; i < dim_padded_; ++i) acc[i] = field_.add(acc[i], draw[i]);
      }
      noise_vectors_[v] = std::move(acc);
    }

    IterationResult result;
    result.transcript.iteration = T;
    result.release.assign(dim_padded_, 0);
    auto fold = [&](const std::vector<std::uint64_t>& vec, long long coeff) {
      std::uint64_t c = coeff >= 0 ? field_.reduce(static_cast<std::uint64_t>(coeff))
                                   : field_.neg(field_.reduce(static_cast<std::uint64_t>(-coeff)));
      for (int i = 0; i < dim_padded_; ++i) {
        result.release[i] = field_.add(result.release[i], field_.mul(c, vec[i]));
      }
    };
    for (const auto& use : grad_sched_.uses(T)) fold(grad_vectors_.at(use.id + 1), use.coeff);
    for (const auto& use : noise_sched_.uses(T)) fold(noise_vectors_.at(use.id), use.coeff);

    if (cfg_.optimized) {
      for (int i = 0; i < dim_padded_; ++i) cumulative_[i] = field_.add(cumulative_[i], result.release[i]);
    } else {
      cumulative_ = result.release;
    }
    result.cumulative = cumulative_;
    result.output = server_postprocess(cumulative_, field_, cfg_.discretization_params(), spec_);
    result.transcript.output_digest = fnv1a(result.cumulative);
    return result;
  }

 private:
  SimConfig cfg_;
  Field field_;
  FactorizationPlan plan_;
  FlattenSpec spec_;
  VectorSchedule noise_sched_;
  VectorSchedule grad_sched_;
  int dim_padded_ = 1;
  int next_iteration_ = 1;
  std::map<int, std::vector<std::uint64_t>> grad_vectors_;
  std::map<int, std::vector<std::uint64_t>> noise_vectors_;
  std::vector<std::uint64_t> cumulative_;
};

// ---------------------------------------------------------------------------
// Independent additive-attack ledger: predicts the exact output perturbation
// caused by the configured injections via Lagrange algebra over the public
// schedule, without running the protocol.  Per held vector it tracks the
// secret-level error matrix and per-party share-level errors, replaying the
// hop/use/output structure.

class AttackLedger {
 public:
  // Returns the predicted cumulative perturbation per iteration (length d').
  static std::vector<std::vector<std::uint64_t>> predict(const SimConfig& cfg) {
    AttackLedger ledger(cfg);
    return ledger.run();
  }

 private:
  struct State {
    std::vector<std::uint64_t> delta;  // k*k secret-level errors, [ (i-1)*k + (j-1) ]
    std::vector<std::uint64_t> eps;    // n*k share-level errors, [ slot*k + (l-1) ]
  };
  struct Key {
    bool noise = true;
    int id = 0;
    int batch = 0;
    bool operator<(const Key& o) const { return std::tie(noise, id, batch) < std::tie(o.noise, o.id, o.batch); }
  };

  explicit AttackLedger(const SimConfig& cfg)
      : cfg_(cfg),
        field_(cfg.modulus),
        plan_(make_plan(cfg)),
        scheme_(field_, cfg.n, cfg.t_c, cfg.packing()),
        spec_(FlattenSpec::make(cfg.dim, cfg.flatten_seed)),
        noise_sched_(VectorSchedule::noise_schedule(plan_, cfg.optimized)),
        grad_sched_(VectorSchedule::gradient_schedule(plan_, cfg.optimized)) {
    k_ = scheme_.k();
    dim_padded_ = spec_.dim_padded;
    batches_ = (dim_padded_ + k_ * k_ - 1) / (k_ * k_);
  }

  State blank() const {
    State st;
    st.delta.assign(static_cast<std::size_t>(k_) * k_, 0);
    st.eps.assign(static_cast<std::size_t>(cfg_.n) * k_, 0);
    return st;
  }

  static bool contains(const std::vector<int>& v, int x) { return std::find(v.begin(), v.end(), x) != v.end(); }

  std::vector<std::vector<std::uint64_t>> run() {
    std::map<Key, State> states;
    std::map<int, State> mask_states[2];  // batch -> state, families 0/1 (fresh each iteration)
    std::vector<std::vector<std::uint64_t>> out;
    std::vector<std::uint64_t> cumulative(dim_padded_, 0);
    std::vector<int> prev_surv2;

    for (int T = 1; T <= cfg_.iterations; ++T) {
      std::vector<int> surv1, surv2;
      survivor_sets(cfg_, T, surv1, surv2);

      // Hop: transform states of vectors reshared at T-1.
      if (T > 1) {
        std::vector<int> gamma_prev;
        for (int s : prev_surv2) gamma_prev.push_back(s + 1);
        std::map<Key, State> next;
        auto hop = [&](const Key& key) {
          auto it = states.find(key);
          State st = it != states.end() ? it->second : blank();
          State fresh = blank();
          // Secret errors transpose; share errors of the resharing sources
          // fold into the new secrets through the recovery coefficients.
          for (int i = 1; i <= k_; ++i) {
            const auto& coeffs = scheme_.recons_coeffs(gamma_prev, i);
            for (int j = 1; j <= k_; ++j) {
              std::uint64_t v = st.delta[(j - 1) * static_cast<std::size_t>(k_) + (i - 1)];
              for (std::size_t gi = 0; gi < gamma_prev.size(); ++gi) {
                int p = gamma_prev[gi] - 1;
                v = field_.add(v, field_.mul(coeffs[gi], st.eps[p * static_cast<std::size_t>(k_) + (j - 1)]));
              }
              fresh.delta[(i - 1) * static_cast<std::size_t>(k_) + (j - 1)] = v;
            }
          }
          // Tampered reshare messages sent at T-1 create share-level errors.
          for (const auto& inj : cfg_.injections) {
            if (inj.cls != InjectionClass::Reshare || inj.iteration != T - 1) continue;
            if (inj.noise_vector != key.noise || inj.vector_id != key.id || inj.batch != key.batch) continue;
            if (!contains(prev_surv2, inj.sender)) continue;
            if (!contains(surv1, inj.target)) continue;
            for (int m = 1; m <= k_; ++m) {
              std::uint64_t lam = scheme_.recons_coeff(gamma_prev, inj.sender + 1, m);
              auto& cell = fresh.eps[inj.target * static_cast<std::size_t>(k_) + (m - 1)];
              cell = field_.add(cell, field_.mul(lam, inj.error));
            }
          }
          next[key] = std::move(fresh);
        };
        for (int v : noise_sched_.reshare_set(T - 1)) {
          for (int b = 0; b < batches_; ++b) hop(Key{true, v, b});
        }
        for (int g : grad_sched_.reshare_set(T - 1)) {
          for (int b = 0; b < batches_; ++b) hop(Key{false, g, b});
        }
        states = std::move(next);
      }

      // Fresh-share tampering creates share-level errors on the aggregates.
      mask_states[0].clear();
      mask_states[1].clear();
      for (const auto& inj : cfg_.injections) {
        if (inj.iteration != T) continue;
        if (inj.cls != InjectionClass::FreshNoise && inj.cls != InjectionClass::FreshGradient &&
            inj.cls != InjectionClass::FreshMask) {
          continue;
        }
        if (!contains(surv1, inj.sender) || !contains(surv1, inj.target)) continue;
        if (inj.batch >= batches_ || inj.sharing < 1 || inj.sharing > k_) continue;
        State* st = nullptr;
        if (inj.cls == InjectionClass::FreshNoise) {
          if (!contains(noise_sched_.entering(T), inj.vector_id)) continue;
          st = &states.try_emplace(Key{true, inj.vector_id, inj.batch}, blank()).first->second;
        } else if (inj.cls == InjectionClass::FreshGradient) {
          st = &states.try_emplace(Key{false, T - 1, inj.batch}, blank()).first->second;
        } else {
          if (!family1_needed(T)) continue;
          st = &mask_states[inj.family].try_emplace(inj.batch, blank()).first->second;
        }
        auto& cell = st->eps[inj.target * static_cast<std::size_t>(k_) + (inj.sharing - 1)];
        cell = field_.add(cell, inj.error);
      }

      // Release perturbation at T.
      std::vector<int> gamma_out;
      for (int s : surv2) gamma_out.push_back(s + 1);
      std::vector<std::uint64_t> chi(dim_padded_, 0);
      auto add_state = [&](const State& st, long long coeff, bool flip, int batch) {
        std::uint64_t c = coeff >= 0 ? field_.reduce(static_cast<std::uint64_t>(coeff))
                                     : field_.neg(field_.reduce(static_cast<std::uint64_t>(-coeff)));
        for (int i = 1; i <= k_; ++i) {
          for (int j = 1; j <= k_; ++j) {
            const auto& coeffs = scheme_.recons_coeffs(gamma_out, j);
            std::uint64_t v = st.delta[(i - 1) * static_cast<std::size_t>(k_) + (j - 1)];
            for (std::size_t gi = 0; gi < gamma_out.size(); ++gi) {
              int p = gamma_out[gi] - 1;
              v = field_.add(v, field_.mul(coeffs[gi], st.eps[p * static_cast<std::size_t>(k_) + (i - 1)]));
            }
            // Stored slot (i, j) maps to coordinate (i, j) when aligned and
            // to (j, i) after the server's family-1 transpose.
            int row = flip ? j : i;
            int col = flip ? i : j;
            int coord = batch * k_ * k_ + (row - 1) * k_ + (col - 1);
            if (coord < dim_padded_) chi[coord] = field_.add(chi[coord], field_.mul(c, v));
          }
        }
      };
      auto add_uses = [&](const VectorSchedule& sched, bool noise) {
        for (const auto& use : sched.uses(T)) {
          bool flip = k_ > 1 && sched.flipped(use.id, T);
          for (int b = 0; b < batches_; ++b) {
            auto it = states.find(Key{noise, use.id, b});
            if (it == states.end()) continue;
            add_state(it->second, use.coeff, flip, b);
          }
        }
      };
      add_uses(noise_sched_, true);
      add_uses(grad_sched_, false);
      for (int fam = 0; fam < 2; ++fam) {
        for (const auto& [batch, st] : mask_states[fam]) add_state(st, 1, fam == 1, batch);
      }
      for (const auto& inj : cfg_.injections) {
        if (inj.cls != InjectionClass::Output || inj.iteration != T) continue;
        if (!contains(surv2, inj.sender)) continue;
        if (inj.batch >= batches_ || inj.sharing < 1 || inj.sharing > k_) continue;
        if (inj.family == 1 && !family1_needed(T)) continue;
        for (int m = 1; m <= k_; ++m) {
          std::uint64_t lam = scheme_.recons_coeff(gamma_out, inj.sender + 1, m);
          int row = inj.family == 0 ? inj.sharing : m;
          int col = inj.family == 0 ? m : inj.sharing;
          int coord = inj.batch * k_ * k_ + (row - 1) * k_ + (col - 1);
          if (coord < dim_padded_) chi[coord] = field_.add(chi[coord], field_.mul(lam, inj.error));
        }
      }

      if (cfg_.optimized) {
        for (int i = 0; i < dim_padded_; ++i) cumulative[i] = field_.add(cumulative[i], chi[i]);
      } else {
        cumulative = chi;
      }
      out.push_back(cumulative);
      prev_surv2 = surv2;
    }
    return out;
  }

  bool family1_needed(int T) const {
    if (k_ == 1) return false;
    for (const auto& use : noise_sched_.uses(T)) {
      if (noise_sched_.flipped(use.id, T)) return true;
    }
    for (const auto& use : grad_sched_.uses(T)) {
      if (grad_sched_.flipped(use.id, T)) return true;
    }
    return false;
  }

  SimConfig cfg_;
  Field field_;
  FactorizationPlan plan_;
  PackedScheme scheme_;
  FlattenSpec spec_;
  VectorSchedule noise_sched_;
  VectorSchedule grad_sched_;
  int k_ = 1;
  int dim_padded_ = 1;
  int batches_ = 1;
};

// ---------------------------------------------------------------------------
// Gradient providers for the synthetic tasks.

class GradientProvider {
 public:
  virtual ~GradientProvider() = default;
  virtual std::vector<std::vector<double>> gradients(int iteration, const std::vector<int>& client_ids) = 0;
};

// Random vectors with norm at most `radius`, drawn per (iteration, slot).
class RandomBallProvider : public GradientProvider {
 public:
  RandomBallProvider(std::uint64_t seed, int dim, double radius) : seed_(seed), dim_(dim), radius_(radius) {}

  std::vector<std::vector<double>> gradients(int iteration, const std::vector<int>& client_ids) override {
    std::vector<std::vector<double>> out(client_ids.size());
    for (std::size_t s = 0; s < client_ids.size(); ++s) {
      Rng rng(derive_seed(seed_, {seedtag::kGradient, static_cast<std::uint64_t>(iteration), s}));
      out[s].resize(dim_);
      double norm_sq = 0;
      for (auto& v : out[s]) {
        v = rng.next_unit() * 2.0 - 1.0;
        norm_sq += v * v;
      }
      double target = radius_ * rng.next_unit();
      double scale = norm_sq > 0 ? target / std::sqrt(norm_sq) : 0.0;
      for (auto& v : out[s]) v *= scale;
    }
    return out;
  }

 private:
  std::uint64_t seed_;
  int dim_;
  double radius_;
};

// Mean estimation: every client holds one fixed data vector (derived from its
// universe id) and contributes it whenever selected.
class MeanEstimationProvider : public GradientProvider {
 public:
  MeanEstimationProvider(std::uint64_t seed, int dim, double radius) : seed_(seed), dim_(dim), radius_(radius) {}

  std::vector<double> client_vector(int client_id) const {
    Rng rng(derive_seed(seed_, {seedtag::kData, static_cast<std::uint64_t>(client_id)}));
    std::vector<double> v(dim_);
    double norm_sq = 0;
    for (auto& x : v) {
      x = rng.next_unit() * 2.0 - 1.0;
      norm_sq += x * x;
    }
    double scale = norm_sq > 0 ? radius_ * 0.9 / std::sqrt(norm_sq) : 0.0;
    for (auto& x : v) x *= scale;
    return v;
  }

  std::vector<std::vector<double>> gradients(int, const std::vector<int>& client_ids) override {
    std::vector<std::vector<double>> out(client_ids.size());
    for (std::size_t s = 0; s < client_ids.size(); ++s) out[s] = client_vector(client_ids[s]);
    return out;
  }

 private:
  std::uint64_t seed_;
  int dim_;
  double radius_;
};

// ---------------------------------------------------------------------------
// Training loop

struct TrainingResult {
  std::vector<IterationResult> iterations;
  std::vector<IterationResult> oracle;  // filled when run_oracle is set
};

inline TrainingResult run_training(const SimConfig& cfg, GradientProvider& provider, bool run_oracle = false) {
  cfg.validate();
  Simulator sim(cfg);
  PlainOracle oracle(cfg);
  TrainingResult out;
  for (int T = 1; T <= cfg.iterations; ++T) {
    auto grads = provider.gradients(T, committee_roster(cfg, T));
    out.iterations.push_back(sim.step(grads));
    if (run_oracle) out.oracle.push_back(oracle.step(grads));
  }
  return out;
}

}  // namespace dmm
