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

// Reference computations written directly from the definitions, sharing no
// code with the library beyond its public types.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

// --- budget prefix ------------------------------------------------------------

struct Item {
    std::string id;
    double score;
    std::uint64_t tokens;
};

struct PrefixAnswer {
    std::vector<std::string> ids;  // selected, in sorted order
    std::uint64_t shortfall = 0;
    bool empty = true;
    double tau = 0.0;
};

// Every prefix length k of the (score desc, id asc) order is summed from
// scratch; the answer is the smallest k reaching the target.
inline PrefixAnswer budget_prefix(std::vector<Item> items, std::uint64_t target) {
    std::stable_sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
        if (a.score > b.score) return true;
        if (a.score < b.score) return false;
        return a.id < b.id;
    });
    std::size_t chosen = items.size();
    for (std::size_t k = 0; k <= items.size(); ++k) {
        std::uint64_t sum = 0;
        for (std::size_t i = 0; i < k; ++i) sum += items[i].tokens;
        if (sum >= target) {
            chosen = k;
            break;
        }
    }
    PrefixAnswer a;
    std::uint64_t total = 0;
    for (std::size_t i = 0; i < chosen; ++i) {
        a.ids.push_back(items[i].id);
        total += items[i].tokens;
    }
    a.shortfall = total >= target ? 0 : target - total;
    a.empty = chosen == 0;
    if (chosen) a.tau = items[chosen - 1].score;
    return a;
}

// --- reward -------------------------------------------------------------------

struct RewardTuple {
    int dataman_org, dataman_rec;
    double similarity;
    bool preserved;
    std::uint64_t len_org, len_rec;
};

struct Weights {
    double ld = 3, lb = 1, ls = 1, ll = 1, tau_b = 0.65, tau_l = 1.25;
};

inline double reward_total(const RewardTuple& t, const Weights& w) {
    const double r_d = static_cast<double>(t.dataman_rec) - static_cast<double>(t.dataman_org);
    const double r_b = t.similarity >= w.tau_b ? 1.0 : 0.0;
    const double r_s = t.preserved ? 1.0 : 0.0;
    const double r_l = static_cast<double>(t.len_rec) <= w.tau_l * static_cast<double>(t.len_org) ? 1.0 : 0.0;
    return w.ld * r_d + w.lb * r_b + w.ls * r_s + w.ll * r_l;
}

// --- greedy matching ------------------------------------------------------------

using Matrix = std::vector<std::vector<double>>;

inline double cos_sim(const std::vector<double>& u, const std::vector<double>& v) {
    double dot = 0.0, uu = 0.0, vv = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        dot += u[k] * v[k];
        uu += u[k] * u[k];
        vv += v[k] * v[k];
    }
    return std::clamp(dot / std::sqrt(uu * vv), -1.0, 1.0);
}

// Best total over every map from `from` tokens to `to` tokens (|to|^|from|
// maps), divided by |from|.
inline double best_map_mean(const Matrix& from, const Matrix& to) {
    const std::size_t n = from.size(), m = to.size();
    Matrix sim(n, std::vector<double>(m));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) sim[i][j] = cos_sim(from[i], to[j]);
    std::vector<std::size_t> choice(n, 0);
    double best = -std::numeric_limits<double>::infinity();
    for (;;) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) total += sim[i][choice[i]];
        best = std::max(best, total);
        std::size_t k = 0;
        while (k < n && ++choice[k] == m) choice[k++] = 0;
        if (k == n) break;
    }
    return best / static_cast<double>(n);
}

struct Prf {
    double p, r, f;
};

inline Prf greedy_match(const Matrix& reference, const Matrix& candidate) {
    Prf out{};
    out.r = best_map_mean(reference, candidate);
    out.p = best_map_mean(candidate, reference);
    out.f = out.p + out.r == 0.0 ? 0.0 : 2.0 * out.p * out.r / (out.p + out.r);
    return out;
}

// --- GRPO -----------------------------------------------------------------------

inline std::vector<double> softmax(const double* logits, std::size_t n) {
    double m = logits[0];
    for (std::size_t i = 1; i < n; ++i) m = std::max(m, logits[i]);
    std::vector<double> p(n);
    double z = 0.0;
    for (std::size_t i = 0; i < n; ++i) z += (p[i] = std::exp(logits[i] - m));
    for (auto& x : p) x /= z;
    return p;
}

inline double kl_exact(const double* p_logits, const double* q_logits, std::size_t n) {
    const auto p = softmax(p_logits, n), q = softmax(q_logits, n);
    double kl = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        if (p[i] > 0) kl += p[i] * (std::log(p[i]) - std::log(q[i]));
    return kl;
}

inline double mean(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double population_std(const std::vector<double>& v) {
    const double mu = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - mu) * (x - mu);
    return std::sqrt(s / static_cast<double>(v.size()));
}

// Central differences of f at x, one coordinate at a time.
inline std::vector<double> central_difference(const std::function<double(const std::vector<double>&)>& f,
                                              std::vector<double> x, double h) {
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double keep = x[i];
        x[i] = keep + h;
        const double up = f(x);
        x[i] = keep - h;
        const double down = f(x);
        x[i] = keep;
        g[i] = (up - down) / (2.0 * h);
    }
    return g;
}

}  // namespace oracle
