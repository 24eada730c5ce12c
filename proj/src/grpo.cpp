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

#include "recycle/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "recycle/errors.hpp"
#include "recycle/hash.hpp"

namespace recycle::grpo {

void GrpoConfig::validate() const {
    if (n_rollouts < 2) throw ConfigError("n_rollouts must be >= 2");
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("epsilon must lie in (0, 1)");
    if (!(beta >= 0.0) || !std::isfinite(beta)) throw ConfigError("beta must be >= 0");
    if (!(std_floor > 0.0) || !std::isfinite(std_floor)) throw ConfigError("std_floor must be > 0");
}

nlohmann::json GrpoConfig::to_json() const {
    return {{"n_rollouts", n_rollouts}, {"epsilon", epsilon}, {"beta", beta}, {"std_floor", std_floor}};
}

GrpoConfig GrpoConfig::from_json(const nlohmann::json& j) {
    GrpoConfig c;
    try {
        c.n_rollouts = j.value("n_rollouts", c.n_rollouts);
        c.epsilon = j.value("epsilon", c.epsilon);
        c.beta = j.value("beta", c.beta);
        c.std_floor = j.value("std_floor", c.std_floor);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("grpo config: ") + e.what());
    }
    c.validate();
    return c;
}

ToyPolicy::ToyPolicy(std::size_t num_states, std::size_t vocab, std::size_t seq_len)
    : num_states_(num_states), vocab_(vocab), seq_len_(seq_len), logits_(num_states * vocab, 0.0) {
    if (num_states == 0) throw ValidationError("toy policy needs at least one state");
    if (vocab < 2 || vocab > kMaxVocab) throw ValidationError("toy policy vocabulary must be in [2, 64]");
    if (seq_len == 0 || seq_len > kMaxSeqLen)
        throw ValidationError("toy policy sequence length must be in [1, 16]");
}

std::vector<double> ToyPolicy::log_probs(std::size_t state) const {
    if (state >= num_states_) throw ValidationError("state index out of range");
    const double* row = logits_.data() + state * vocab_;
    const double m = *std::max_element(row, row + vocab_);
    double z = 0.0;
    for (std::size_t v = 0; v < vocab_; ++v) z += std::exp(row[v] - m);
    const double log_z = m + std::log(z);
    std::vector<double> out(vocab_);
    for (std::size_t v = 0; v < vocab_; ++v) out[v] = row[v] - log_z;
    return out;
}

std::vector<double> ToyPolicy::probs(std::size_t state) const {
    auto lp = log_probs(state);
    for (auto& x : lp) x = std::exp(x);
    return lp;
}

double ToyPolicy::sequence_log_prob(std::span<const int> states, std::span<const int> outputs) const {
    if (states.size() != outputs.size())
        throw ValidationError("state and output sequences differ in length");
    double total = 0.0;
    for (std::size_t t = 0; t < states.size(); ++t) {
        const auto lp = log_probs(static_cast<std::size_t>(states[t]));
        const auto tok = static_cast<std::size_t>(outputs[t]);
        if (tok >= vocab_) throw ValidationError("output token out of range");
        total += lp[tok];
    }
    return total;
}

std::vector<int> ToyPolicy::sample(std::span<const int> states, std::uint64_t& rng_state) const {
    std::vector<int> out(states.size());
    for (std::size_t t = 0; t < states.size(); ++t) {
        const auto p = probs(static_cast<std::size_t>(states[t]));
        const double u = unit_double(splitmix64(rng_state));
        double acc = 0.0;
        std::size_t pick = vocab_ - 1;
        for (std::size_t v = 0; v < vocab_; ++v) {
            acc += p[v];
            if (u < acc) {
                pick = v;
                break;
            }
        }
        out[t] = static_cast<int>(pick);
    }
    return out;
}

bool ToyPolicy::same_space(const ToyPolicy& other) const noexcept {
    return num_states_ == other.num_states_ && vocab_ == other.vocab_ && seq_len_ == other.seq_len_;
}

std::vector<double> advantages(std::span<const double> rewards, double std_floor) {
    if (rewards.size() < 2)
        throw ValidationError("group statistics need at least 2 rewards, got " +
                              std::to_string(rewards.size()));
    const double n = static_cast<double>(rewards.size());
    const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
    double var = 0.0;
    for (double r : rewards) var += (r - mean) * (r - mean);
    const double sd = std::sqrt(var / n);
    std::vector<double> out(rewards.size(), 0.0);
    if (sd < std_floor) return out;
    for (std::size_t i = 0; i < rewards.size(); ++i) out[i] = (rewards[i] - mean) / sd;
    return out;
}

double clipped_term(double ratio, double advantage, double epsilon) {
    if (!(ratio > 0.0)) throw ValidationError("probability ratio must be positive");
    const double clipped = std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon);
    return std::min(ratio * advantage, clipped * advantage);
}

double kl_penalty(const ToyPolicy& policy, const ToyPolicy& base, std::size_t state) {
    if (!policy.same_space(base)) throw ValidationError("policy and base live in different spaces");
    const auto lp = policy.log_probs(state);
    const auto lq = base.log_probs(state);
    double kl = 0.0;
    for (std::size_t v = 0; v < lp.size(); ++v) kl += std::exp(lp[v]) * (lp[v] - lq[v]);
    return std::max(kl, 0.0);
}

double sequence_kl(const ToyPolicy& policy, const ToyPolicy& base, std::span<const int> states) {
    if (states.empty()) return 0.0;
    double total = 0.0;
    for (int s : states) total += kl_penalty(policy, base, static_cast<std::size_t>(s));
    return total / static_cast<double>(states.size());
}

namespace {

void check_group_shape(const RolloutGroup& g) {
    const std::size_t n = g.outputs.size();
    if (n < 2) throw ValidationError("rollout group '" + g.input_id + "' has fewer than 2 outputs");
    if (g.advantages.size() != n || g.log_probs_current.size() != n || g.log_probs_base.size() != n)
        throw ValidationError("rollout group '" + g.input_id + "' has inconsistent field lengths");
}

double group_objective(const RolloutGroup& g, const ToyPolicy& policy,
                       const ToyPolicy& ratio_reference, const ToyPolicy& kl_reference,
                       const GrpoConfig& config) {
    check_group_shape(g);
    const double kl = sequence_kl(policy, kl_reference, g.states);
    double sum = 0.0;
    for (std::size_t i = 0; i < g.outputs.size(); ++i) {
        const double ratio = std::exp(policy.sequence_log_prob(g.states, g.outputs[i]) -
                                      ratio_reference.sequence_log_prob(g.states, g.outputs[i]));
        sum += clipped_term(ratio, g.advantages[i], config.epsilon) - config.beta * kl;
    }
    return sum / static_cast<double>(g.outputs.size());
}

// Gradient of group_objective, accumulated into grad (same layout as logits).
double group_gradient(const RolloutGroup& g, const ToyPolicy& policy,
                      const ToyPolicy& ratio_reference, const ToyPolicy& kl_reference,
                      const GrpoConfig& config, std::vector<double>& grad) {
    check_group_shape(g);
    const std::size_t V = policy.vocab();
    const std::size_t L = g.states.size();
    const double inv_n = 1.0 / static_cast<double>(g.outputs.size());

    std::vector<std::vector<double>> p(L);
    for (std::size_t t = 0; t < L; ++t) p[t] = policy.probs(static_cast<std::size_t>(g.states[t]));

    double value = 0.0;
    for (std::size_t i = 0; i < g.outputs.size(); ++i) {
        const double ratio = std::exp(policy.sequence_log_prob(g.states, g.outputs[i]) -
                                      ratio_reference.sequence_log_prob(g.states, g.outputs[i]));
        const double a = g.advantages[i];
        const double clipped = std::clamp(ratio, 1.0 - config.epsilon, 1.0 + config.epsilon);
        value += std::min(ratio * a, clipped * a);
        // The clipped branch is constant in the parameters, so only the
        // unclipped branch carries gradient when it is the minimum.
        if (ratio * a <= clipped * a && a != 0.0) {
            const double scale = inv_n * a * ratio;
            for (std::size_t t = 0; t < L; ++t) {
                const std::size_t s = static_cast<std::size_t>(g.states[t]);
                double* row = grad.data() + s * V;
                const auto tok = static_cast<std::size_t>(g.outputs[i][t]);
                for (std::size_t v = 0; v < V; ++v) row[v] -= scale * p[t][v];
                row[tok] += scale;
            }
        }
    }

    // KL_i is the same for every rollout of the group: mean over positions of
    // KL(p_s || q_s), d/dlogit_{s,v} = p_v (log p_v - log q_v - KL_s).
    double kl_mean = 0.0;
    if (L > 0) {
        const double scale = config.beta / static_cast<double>(L);
        for (std::size_t t = 0; t < L; ++t) {
            const std::size_t s = static_cast<std::size_t>(g.states[t]);
            const auto lp = policy.log_probs(s);
            const auto lq = kl_reference.log_probs(s);
            double kl = 0.0;
            for (std::size_t v = 0; v < V; ++v) kl += p[t][v] * (lp[v] - lq[v]);
            kl_mean += kl;
            double* row = grad.data() + s * V;
            for (std::size_t v = 0; v < V; ++v) row[v] -= scale * p[t][v] * (lp[v] - lq[v] - kl);
        }
        kl_mean /= static_cast<double>(L);
    }
    return value * inv_n - config.beta * kl_mean;
}

}  // namespace

double grpo_objective(const RolloutGroup& group, const ToyPolicy& policy, const ToyPolicy& base,
                      const GrpoConfig& config) {
    if (!policy.same_space(base)) throw ValidationError("policy and base live in different spaces");
    check_group_shape(group);
    for (std::size_t i = 0; i < group.outputs.size(); ++i) {
        const double cur = policy.sequence_log_prob(group.states, group.outputs[i]);
        const double ref = base.sequence_log_prob(group.states, group.outputs[i]);
        if (std::abs(cur - group.log_probs_current[i]) > 1e-6 ||
            std::abs(ref - group.log_probs_base[i]) > 1e-6)
            throw IntegrityError("rollout group '" + group.input_id + "' output " + std::to_string(i) +
                                 ": stored log-probs do not match the supplied policies");
    }
    return group_objective(group, policy, base, base, config);
}

double batch_objective(std::span<const RolloutGroup> batch, const ToyPolicy& policy,
                       const ToyPolicy& ratio_reference, const ToyPolicy& kl_reference,
                       const GrpoConfig& config) {
    if (batch.empty()) return 0.0;
    double total = 0.0;
    for (const auto& g : batch) total += group_objective(g, policy, ratio_reference, kl_reference, config);
    return total / static_cast<double>(batch.size());
}

namespace {

ObjectiveGradient reduce_partials(const std::vector<double>& values,
                                  const std::vector<std::vector<double>>& partial, std::size_t params) {
    ObjectiveGradient out;
    out.gradient.assign(params, 0.0);
    const double inv = 1.0 / static_cast<double>(values.size());
    for (std::size_t k = 0; k < values.size(); ++k) {
        out.value += values[k] * inv;
        for (std::size_t j = 0; j < out.gradient.size(); ++j) out.gradient[j] += partial[k][j] * inv;
    }
    return out;
}

void check_spaces(const ToyPolicy& policy, const ToyPolicy& ratio_reference, const ToyPolicy& kl_reference) {
    if (!policy.same_space(ratio_reference) || !policy.same_space(kl_reference))
        throw ValidationError("policy and reference policies live in different spaces");
}

}  // namespace

ObjectiveGradient batch_gradient(std::span<const RolloutGroup> batch, const ToyPolicy& policy,
                                 const ToyPolicy& ratio_reference, const ToyPolicy& kl_reference,
                                 const GrpoConfig& config) {
    check_spaces(policy, ratio_reference, kl_reference);
    if (batch.empty()) return {0.0, std::vector<double>(policy.num_params(), 0.0)};
    for (const auto& g : batch) check_group_shape(g);

    // Per-group partials are summed in group order so the result does not
    // depend on the thread count.
    const auto n = static_cast<std::ptrdiff_t>(batch.size());
    std::vector<std::vector<double>> partial(batch.size(), std::vector<double>(policy.num_params(), 0.0));
    std::vector<double> values(batch.size(), 0.0);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t k = 0; k < n; ++k)
        values[k] = group_gradient(batch[k], policy, ratio_reference, kl_reference, config, partial[k]);
    return reduce_partials(values, partial, policy.num_params());
}

ObjectiveGradient batch_gradient_serial(std::span<const RolloutGroup> batch, const ToyPolicy& policy,
                                        const ToyPolicy& ratio_reference, const ToyPolicy& kl_reference,
                                        const GrpoConfig& config) {
    check_spaces(policy, ratio_reference, kl_reference);
    if (batch.empty()) return {0.0, std::vector<double>(policy.num_params(), 0.0)};
    std::vector<std::vector<double>> partial(batch.size(), std::vector<double>(policy.num_params(), 0.0));
    std::vector<double> values(batch.size(), 0.0);
    for (std::size_t k = 0; k < batch.size(); ++k)
        values[k] = group_gradient(batch[k], policy, ratio_reference, kl_reference, config, partial[k]);
    return reduce_partials(values, partial, policy.num_params());
}

ToyPolicy ascend(const ToyPolicy& policy, const ToyPolicy& ratio_reference,
                 const ToyPolicy& kl_reference, std::span<const RolloutGroup> batch,
                 const GrpoConfig& config, double learning_rate) {
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
        throw ValidationError("learning rate must be finite and >= 0");
    const auto g = batch_gradient(batch, policy, ratio_reference, kl_reference, config);
    for (double x : g.gradient)
        if (!std::isfinite(x)) throw NumericError("non-finite gradient component");
    ToyPolicy next = policy;
    auto w = next.logits();
    for (std::size_t j = 0; j < w.size(); ++j) w[j] += learning_rate * g.gradient[j];
    return next;
}

ToyPolicy ascend(const ToyPolicy& policy, const ToyPolicy& base, std::span<const RolloutGroup> batch,
                 const GrpoConfig& config, double learning_rate) {
    return ascend(policy, base, base, batch, config, learning_rate);
}

RolloutGroup make_group(const std::string& input_id, std::span<const int> states,
                        const ToyPolicy& policy, const ToyPolicy& base, const RewardHandle& reward,
                        const GrpoConfig& config, std::uint64_t seed) {
    RolloutGroup g;
    g.input_id = input_id;
    g.states.assign(states.begin(), states.end());
    std::uint64_t rng = derive_seed(seed, input_id);
    for (std::size_t i = 0; i < config.n_rollouts; ++i) {
        auto out = policy.sample(states, rng);
        g.log_probs_current.push_back(policy.sequence_log_prob(states, out));
        g.log_probs_base.push_back(base.sequence_log_prob(states, out));
        g.rewards.push_back(reward(states, out).total);
        g.outputs.push_back(std::move(out));
    }
    g.advantages = advantages(g.rewards, config.std_floor);
    return g;
}

ComponentMeans validation_rewards(const ToyPolicy& policy, const ToyPolicy& base,
                                  std::span<const ValidationInput> inputs,
                                  const RewardHandle& reward, std::uint64_t seed,
                                  std::size_t samples_per_input) {
    if (inputs.empty()) throw ValidationError("validation set is empty");
    if (samples_per_input == 0) throw ValidationError("samples_per_input must be positive");

    std::vector<ComponentMeans> per_input(inputs.size());
    const auto n = static_cast<std::ptrdiff_t>(inputs.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t k = 0; k < n; ++k) {
        const auto& in = inputs[k];
        ComponentMeans acc;
        for (std::size_t s = 0; s < samples_per_input; ++s) {
            std::uint64_t rng = derive_seed(seed, in.id + "#" + std::to_string(s));
            const auto out = policy.sample(in.states, rng);
            const auto b = reward(in.states, out);
            acc.dataman += b.r_dataman;
            acc.bertscore += b.r_bertscore;
            acc.structure += b.r_structure;
            acc.length += b.r_length;
            acc.total += b.total;
        }
        acc.kl = sequence_kl(policy, base, in.states) * static_cast<double>(samples_per_input);
        per_input[k] = acc;
    }

    ComponentMeans mean;
    for (const auto& a : per_input) {
        mean.dataman += a.dataman;
        mean.bertscore += a.bertscore;
        mean.structure += a.structure;
        mean.length += a.length;
        mean.total += a.total;
        mean.kl += a.kl;
    }
    const double denom = static_cast<double>(inputs.size() * samples_per_input);
    mean.dataman /= denom;
    mean.bertscore /= denom;
    mean.structure /= denom;
    mean.length /= denom;
    mean.total /= denom;
    mean.kl /= denom;
    return mean;
}

RatioReference parse_ratio_reference(const std::string& name) {
    if (name == "frozen-base") return RatioReference::kFrozenBase;
    if (name == "rollout-policy") return RatioReference::kRolloutPolicy;
    throw ConfigError("ratio_reference must be frozen-base or rollout-policy, got '" + name + "'");
}

std::string ratio_reference_name(RatioReference r) {
    return r == RatioReference::kFrozenBase ? "frozen-base" : "rollout-policy";
}

void LabConfig::validate() const {
    grpo.validate();
    reward.validate();
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
        throw ConfigError("learning_rate must be finite and >= 0");
    if (vocab < 2 || vocab > kMaxVocab) throw ConfigError("vocab must be in [2, 64]");
    if (seq_len == 0 || seq_len > kMaxSeqLen) throw ConfigError("seq_len must be in [1, 16]");
    if (target_token < 0 || static_cast<std::size_t>(target_token) >= vocab)
        throw ConfigError("target_token must be a vocabulary index");
    if (train_inputs == 0) throw ConfigError("train_inputs must be positive");
    if (validation_inputs == 0) throw ConfigError("validation_inputs must be positive");
    if (groups_per_step == 0) throw ConfigError("groups_per_step must be positive");
    if (validation_samples == 0) throw ConfigError("validation_samples must be positive");
    if (eval_every == 0) throw ConfigError("eval_every must be positive");
}

nlohmann::json LabConfig::to_json() const {
    nlohmann::json j = grpo.to_json();
    j["seed"] = seed;
    j["learning_rate"] = learning_rate;
    j["steps"] = steps;
    j["vocab"] = vocab;
    j["seq_len"] = seq_len;
    j["target_token"] = target_token;
    j["train_inputs"] = train_inputs;
    j["validation_inputs"] = validation_inputs;
    j["groups_per_step"] = groups_per_step;
    j["validation_samples"] = validation_samples;
    j["eval_every"] = eval_every;
    j["ratio_reference"] = ratio_reference_name(ratio_reference);
    j["reward"] = reward.to_json();
    return j;
}

LabConfig LabConfig::from_json(const nlohmann::json& j) {
    LabConfig c;
    try {
        c.grpo = GrpoConfig::from_json(j);
        if (j.contains("reward")) c.reward = RewardConfig::from_json(j["reward"]);
        c.seed = j.value("seed", c.seed);
        c.learning_rate = j.value("learning_rate", c.learning_rate);
        c.steps = j.value("steps", c.steps);
        c.vocab = j.value("vocab", c.vocab);
        c.seq_len = j.value("seq_len", c.seq_len);
        c.target_token = j.value("target_token", c.target_token);
        c.train_inputs = j.value("train_inputs", c.train_inputs);
        c.validation_inputs = j.value("validation_inputs", c.validation_inputs);
        c.groups_per_step = j.value("groups_per_step", c.groups_per_step);
        c.validation_samples = j.value("validation_samples", c.validation_samples);
        c.eval_every = j.value("eval_every", c.eval_every);
        if (j.contains("ratio_reference"))
            c.ratio_reference = parse_ratio_reference(j["ratio_reference"].get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("grpo lab config: ") + e.what());
    }
    c.validate();
    return c;
}

TargetTokenTask::TargetTokenTask(int target, RewardConfig config)
    : target_(target), config_(config) {}

double TargetTokenTask::target_fraction(std::span<const int> seq, int target) noexcept {
    if (seq.empty()) return 0.0;
    const auto hits = std::count(seq.begin(), seq.end(), target);
    return static_cast<double>(hits) / static_cast<double>(seq.size());
}

RewardBreakdown TargetTokenTask::operator()(std::span<const int> input,
                                            std::span<const int> output) const {
    RewardComponents c;
    // Continuous quality delta on the DataMan scale: 1 + 4 * target fraction.
    c.r_dataman = 4.0 * (target_fraction(output, target_) - target_fraction(input, target_));
    c.r_bertscore = 1;
    c.r_structure = 1;
    c.r_length = length_reward(input.size(), output.size(), config_.tau_length);
    return combine(c, config_);
}

double TargetTokenTask::attainable_range() const noexcept { return 4.0 * config_.lambda_dataman; }

namespace {

std::vector<ValidationInput> random_inputs(const std::string& prefix, std::size_t count,
                                           std::size_t vocab, std::size_t seq_len,
                                           std::uint64_t seed) {
    std::uint64_t rng = derive_seed(seed, prefix);
    std::vector<ValidationInput> out(count);
    for (std::size_t k = 0; k < count; ++k) {
        out[k].id = prefix + "-" + std::to_string(k);
        out[k].states.resize(seq_len);
        for (auto& s : out[k].states) s = static_cast<int>(splitmix64(rng) % vocab);
    }
    return out;
}

}  // namespace

LabResult run_lab(const LabConfig& config) {
    config.validate();
    const TargetTokenTask task(config.target_token, config.reward);
    const RewardHandle reward = [&task](std::span<const int> in, std::span<const int> out) {
        return task(in, out);
    };

    const auto train = random_inputs("train", config.train_inputs, config.vocab, config.seq_len, config.seed);
    const auto valid =
        random_inputs("val", config.validation_inputs, config.vocab, config.seq_len, config.seed);
    const std::uint64_t validation_seed = derive_seed(config.seed, "validation");

    ToyPolicy policy(config.vocab, config.vocab, config.seq_len);
    {
        std::uint64_t rng = derive_seed(config.seed, "init");
        for (auto& w : policy.logits()) w = 0.2 * unit_double(splitmix64(rng)) - 0.1;
    }
    const ToyPolicy base = policy;

    LabResult result{{}, policy, task.attainable_range()};
    result.curve.push_back({0, validation_rewards(policy, base, valid, reward, validation_seed,
                                                  config.validation_samples)});

    for (std::size_t step = 1; step <= config.steps; ++step) {
        const std::uint64_t step_seed = derive_seed(config.seed, "step-" + std::to_string(step));
        std::uint64_t pick = step_seed;
        std::vector<std::size_t> chosen(config.groups_per_step);
        for (auto& c : chosen) c = splitmix64(pick) % train.size();

        std::vector<RolloutGroup> batch(chosen.size());
        const auto n = static_cast<std::ptrdiff_t>(chosen.size());
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t k = 0; k < n; ++k) {
            const auto& in = train[chosen[k]];
            batch[k] = make_group(in.id, in.states, policy, base, reward, config.grpo, step_seed);
        }

        const ToyPolicy& ratio_ref =
            config.ratio_reference == RatioReference::kFrozenBase ? base : policy;
        policy = ascend(policy, ratio_ref, base, batch, config.grpo, config.learning_rate);

        if (step % config.eval_every == 0 || step == config.steps)
            result.curve.push_back({step, validation_rewards(policy, base, valid, reward, validation_seed,
                                                             config.validation_samples)});
    }
    result.final_policy = policy;
    return result;
}

void write_curve(std::ostream& out, std::span<const CurvePoint> curve) {
    for (const auto& p : curve) {
        nlohmann::json rec{{"step", p.step},
                           {"dataman", p.means.dataman},
                           {"bertscore", p.means.bertscore},
                           {"structure", p.means.structure},
                           {"length", p.means.length},
                           {"total", p.means.total},
                           {"kl", p.means.kl}};
        out << rec.dump() << '\n';
    }
}

}  // namespace recycle::grpo
