/*
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "recycle/reward.hpp"

namespace recycle::grpo {

inline constexpr std::size_t kDefaultRollouts = 8;
inline constexpr double kDefaultEpsilon = 0.2;
inline constexpr double kDefaultBeta = 0.005;
inline constexpr double kDefaultStdFloor = 1e-8;

inline constexpr std::size_t kMaxVocab = 64;
inline constexpr std::size_t kMaxSeqLen = 16;

struct GrpoConfig {
    std::size_t n_rollouts = kDefaultRollouts;
    double epsilon = kDefaultEpsilon;
    double beta = kDefaultBeta;
    double std_floor = kDefaultStdFloor;

    void validate() const;
    nlohmann::json to_json() const;
    static GrpoConfig from_json(const nlohmann::json& j);

    friend bool operator==(const GrpoConfig&, const GrpoConfig&) = default;
};

/// Tabular softmax policy: one row of logits per context state. A sequence
/// is generated position by position, position t reading state states[t].
class ToyPolicy {
public:
    ToyPolicy(std::size_t num_states, std::size_t vocab, std::size_t seq_len);

    std::size_t num_states() const noexcept { return num_states_; }
    std::size_t vocab() const noexcept { return vocab_; }
    std::size_t seq_len() const noexcept { return seq_len_; }
    std::size_t num_params() const noexcept { return logits_.size(); }

    std::span<double> logits() noexcept { return logits_; }
    std::span<const double> logits() const noexcept { return logits_; }
    double& logit(std::size_t state, std::size_t token) { return logits_[state * vocab_ + token]; }
    double logit(std::size_t state, std::size_t token) const {
        return logits_[state * vocab_ + token];
    }

    /// Softmax of one state's row, computed with max-subtraction.
    std::vector<double> probs(std::size_t state) const;
    std::vector<double> log_probs(std::size_t state) const;

    double sequence_log_prob(std::span<const int> states, std::span<const int> outputs) const;

    /// Inverse-CDF sampling in token order; advances rng_state.
    std::vector<int> sample(std::span<const int> states, std::uint64_t& rng_state) const;

    bool same_space(const ToyPolicy& other) const noexcept;

    friend bool operator==(const ToyPolicy&, const ToyPolicy&) = default;

private:
    std::size_t num_states_;
    std::size_t vocab_;
    std::size_t seq_len_;
    std::vector<double> logits_;
};

struct RolloutGroup {
    std::string input_id;
    std::vector<int> states;
    std::vector<std::vector<int>> outputs;
    std::vector<double> log_probs_current;
    std::vector<double> log_probs_base;
    std::vector<double> rewards;
    std::vector<double> advantages;
};

/// (r_i - mean) / max(population std, std_floor); all zeros when the
/// population std is below std_floor.
std::vector<double> advantages(std::span<const double> rewards, double std_floor = kDefaultStdFloor);

/// min(ratio * adv, clip(ratio, 1 - eps, 1 + eps) * adv).
double clipped_term(double ratio, double advantage, double epsilon);

/// Exact KL(policy(.|state) || base(.|state)).
double kl_penalty(const ToyPolicy& policy, const ToyPolicy& base, std::size_t state);

/// Mean per-position KL along a state sequence.
double sequence_kl(const ToyPolicy& policy, const ToyPolicy& base, std::span<const int> states);

/// Mean over rollouts of clipped_term(P_i, A_i, eps) - beta * KL_i with
/// P_i = pi(x'_i) / pi_base(x'_i). Throws IntegrityError when the group's
/// stored log-probs disagree with the supplied policies by more than 1e-6.
double grpo_objective(const RolloutGroup& group, const ToyPolicy& policy, const ToyPolicy& base,
                      const GrpoConfig& config);

/// Batch objective without the integrity check. The ratio denominator and the
/// KL anchor are separate so the trainer can take ratios against the policy
/// that produced the rollouts while anchoring KL to the frozen base.
double batch_objective(std::span<const RolloutGroup> batch, const ToyPolicy& policy,
                       const ToyPolicy& ratio_reference, const ToyPolicy& kl_reference,
                       const GrpoConfig& config);

struct ObjectiveGradient {
    double value = 0.0;
    std::vector<double> gradient;
};

/// Analytic gradient of batch_objective with respect to every logit.
ObjectiveGradient batch_gradient(std::span<const RolloutGroup> batch, const ToyPolicy& policy,
                                 const ToyPolicy& ratio_reference, const ToyPolicy& kl_reference,
                                 const GrpoConfig& config);

ObjectiveGradient batch_gradient_serial(std::span<const RolloutGroup> batch, const ToyPolicy& policy,
                                        const ToyPolicy& ratio_reference, const ToyPolicy& kl_reference,
                                        const GrpoConfig& config);

/// One gradient-ascent step on the batch objective (ratios against base).
ToyPolicy ascend(const ToyPolicy& policy, const ToyPolicy& base,
                 std::span<const RolloutGroup> batch, const GrpoConfig& config,
                 double learning_rate);
ToyPolicy ascend(const ToyPolicy& policy, const ToyPolicy& ratio_reference,
                 const ToyPolicy& kl_reference, std::span<const RolloutGroup> batch,
                 const GrpoConfig& config, double learning_rate);

/// Reward of one (input, output) pair as a full breakdown.
using RewardHandle = std::function<RewardBreakdown(std::span<const int> input,
                                                   std::span<const int> output)>;

/// Samples n rollouts for one input from `policy` and fills rewards and
/// advantages. The rng stream is derived from (seed, input_id).
RolloutGroup make_group(const std::string& input_id, std::span<const int> states,
                        const ToyPolicy& policy, const ToyPolicy& base, const RewardHandle& reward,
                        const GrpoConfig& config, std::uint64_t seed);

struct ComponentMeans {
    double dataman = 0.0;
    double bertscore = 0.0;
    double structure = 0.0;
    double length = 0.0;
    double total = 0.0;
    /// Mean per-position KL to the base policy over the validation inputs.
    double kl = 0.0;
};

struct ValidationInput {
    std::string id;
    std::vector<int> states;
};

/// Means of each reward component over `samples_per_input` seeded samples per
/// input. The same seed gives the same draws at every call.
ComponentMeans validation_rewards(const ToyPolicy& policy, const ToyPolicy& base,
                                  std::span<const ValidationInput> inputs,
                                  const RewardHandle& reward, std::uint64_t seed,
                                  std::size_t samples_per_input = 4);

// --- Toy target-token lab -------------------------------------------------

enum class RatioReference {
    kFrozenBase,     // P = pi / pi_base, base never updated
    kRolloutPolicy,  // P = pi / pi_old, the policy that sampled the batch
};

RatioReference parse_ratio_reference(const std::string& name);
std::string ratio_reference_name(RatioReference r);

struct LabConfig {
    GrpoConfig grpo;
    RewardConfig reward;
    std::uint64_t seed = 1234;
    double learning_rate = 0.5;
    std::size_t steps = 200;
    std::size_t vocab = 8;
    std::size_t seq_len = 6;
    int target_token = 0;
    std::size_t train_inputs = 64;
    std::size_t validation_inputs = 128;
    std::size_t groups_per_step = 4;
    std::size_t validation_samples = 4;
    std::size_t eval_every = 10;
    RatioReference ratio_reference = RatioReference::kRolloutPolicy;

    void validate() const;
    nlohmann::json to_json() const;
    /// Accepts the flat keys n_rollouts, epsilon, beta, std_floor, seed,
    /// learning_rate, steps plus the lab-specific keys above.
    static LabConfig from_json(const nlohmann::json& j);
};

/// Toy rephrasing task: the quality delta rewards emitting `target`; the
/// three faithfulness indicators hold for every same-length output.
class TargetTokenTask {
public:
    TargetTokenTask(int target, RewardConfig config);

    RewardBreakdown operator()(std::span<const int> input, std::span<const int> output) const;

    /// Difference between the best and worst achievable mean total reward.
    double attainable_range() const noexcept;

    static double target_fraction(std::span<const int> seq, int target) noexcept;

private:
    int target_;
    RewardConfig config_;
};

struct CurvePoint {
    std::size_t step = 0;
    ComponentMeans means;
};

struct LabResult {
    std::vector<CurvePoint> curve;
    ToyPolicy final_policy;
    double attainable_range = 0.0;
};

LabResult run_lab(const LabConfig& config);

/// One record per validation step.
void write_curve(std::ostream& out, std::span<const CurvePoint> curve);

}  // namespace recycle::grpo
