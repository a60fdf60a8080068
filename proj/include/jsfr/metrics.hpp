// SPDX-License-Identifier: Apache-2.0
//
// jsfr - joint sparse frequency recovery via atomic norm minimization
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef JSFR_METRICS_HPP
#define JSFR_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "jsfr/common.hpp"
#include "jsfr/core_model.hpp"
#include "jsfr/retrieval.hpp"

namespace jsfr
{

/// The K strongest estimated components paired with the (sorted) truth.
struct Match
{
    std::vector<double> freqs; // matched_freqs[i] pairs with truth[i]
    std::vector<double> amps;  // mean amplitudes of the matched components
    std::vector<double> spurious_amps;
    bool partial = false; // fewer than K estimated components
};

/// Pairs the K largest-amplitude components with the truth by sorted order on
/// the circle, choosing the cyclic shift with the smallest total wrap distance.
inline Match match_topK(const Estimate& est, const FrequencySet& truth, std::size_t K)
{
    if (truth.size() != K)
        throw DimensionError("match_topK: truth must have K entries");
    Match m;
    const auto order = est.order_by_amplitude();
    const std::size_t kk = std::min(K, order.size());
    m.partial = kk < K;

    std::vector<std::size_t> top(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(kk));
    std::sort(top.begin(), top.end(), [&](std::size_t a, std::size_t b) { return est.freqs[a] < est.freqs[b]; });
    for (std::size_t j = kk; j < order.size(); ++j)
        m.spurious_amps.push_back(est.mean_amps(static_cast<Index>(order[j])));

    const double nan = std::numeric_limits<double>::quiet_NaN();
    m.freqs.assign(K, nan);
    m.amps.assign(K, nan);
    if (kk == 0)
        return m;

    if (!m.partial)
    {
        std::size_t best_shift = 0;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t s = 0; s < K; ++s)
        {
            double tot = 0.0;
            for (std::size_t i = 0; i < K; ++i)
                tot += wrap_distance(est.freqs[top[(i + s) % K]], truth[i]);
            if (tot < best)
            {
                best = tot;
                best_shift = s;
            }
        }
        for (std::size_t i = 0; i < K; ++i)
        {
            const std::size_t j = top[(i + best_shift) % K];
            m.freqs[i] = est.freqs[j];
            m.amps[i] = est.mean_amps(static_cast<Index>(j));
        }
        return m;
    }

    // Partial: each estimate goes to its nearest unclaimed true frequency.
    std::vector<bool> taken(K, false);
    for (std::size_t j : top)
    {
        std::size_t best_i = K;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < K; ++i)
            if (!taken[i] && wrap_distance(est.freqs[j], truth[i]) < best)
            {
                best = wrap_distance(est.freqs[j], truth[i]);
                best_i = i;
            }
        taken[best_i] = true;
        m.freqs[best_i] = est.freqs[j];
        m.amps[best_i] = est.mean_amps(static_cast<Index>(j));
    }
    return m;
}

struct SuccessThresholds
{
    double freq_rmse = 1e-8;
    double amp_err = 1e-4;
    double data_rel = 1e-8;
};

struct Score
{
    bool success = false;
    bool enough_components = false;
    double freq_rmse = std::numeric_limits<double>::infinity();
    double amp_err = std::numeric_limits<double>::infinity();
    double data_rel = 0.0;
};

/// Wrap-aware frequency RMSE and max amplitude error (spurious components count
/// against their zero truth).
inline Score score_components(const Estimate& est, const FrequencySet& truth, const RVector& true_mean_amps)
{
    const std::size_t K = truth.size();
    if (static_cast<std::size_t>(true_mean_amps.size()) != K)
        throw DimensionError("score: amplitude vector does not match truth");
    Score s;
    s.enough_components = est.size() >= K;
    if (!s.enough_components)
        return s;
    const Match m = match_topK(est, truth, K);
    double se = 0.0;
    double amp = 0.0;
    for (std::size_t i = 0; i < K; ++i)
    {
        const double d = wrap_distance(m.freqs[i], truth[i]);
        se += d * d;
        amp = std::max(amp, std::abs(m.amps[i] - true_mean_amps(static_cast<Index>(i))));
    }
    for (double a : m.spurious_amps)
        amp = std::max(amp, a);
    s.freq_rmse = K > 0 ? std::sqrt(se / static_cast<double>(K)) : 0.0;
    s.amp_err = amp;
    return s;
}

/// Complete-data success: K* >= K, frequency RMSE and amplitude error under
/// their thresholds. true_mean_amps is aligned with the sorted truth.
inline Score score_complete(const Estimate& est, const FrequencySet& truth, const RVector& true_mean_amps,
                            const SuccessThresholds& th = {})
{
    Score s = score_components(est, truth, true_mean_amps);
    s.success = s.enough_components && s.freq_rmse < th.freq_rmse && s.amp_err < th.amp_err;
    return s;
}

inline bool success_complete(const Estimate& est, const FrequencySet& truth, const RVector& true_mean_amps,
                             const SuccessThresholds& th = {})
{
    return score_complete(est, truth, true_mean_amps, th).success;
}

/// Missing-data success: adds the relative data recovery test on the full
/// matrix; the frequency threshold defaults to 1e-6.
inline Score score_missing(const Estimate& est, const CMatrix& Y_star, const CMatrix& Y_true,
                           const FrequencySet& truth, const RVector& true_mean_amps,
                           SuccessThresholds th = {1e-6, 1e-4, 1e-8})
{
    if (Y_star.rows() != Y_true.rows() || Y_star.cols() != Y_true.cols())
        throw DimensionError("score_missing: data shapes differ");
    Score s = score_components(est, truth, true_mean_amps);
    const double ref = Y_true.norm();
    s.data_rel = ref > 0.0 ? (Y_star - Y_true).norm() / ref : (Y_star - Y_true).norm();
    s.success = s.enough_components && s.data_rel < th.data_rel && s.freq_rmse < th.freq_rmse &&
                s.amp_err < th.amp_err;
    return s;
}

inline bool success_missing(const Estimate& est, const CMatrix& Y_star, const CMatrix& Y_true,
                            const FrequencySet& truth, const RVector& true_mean_amps,
                            SuccessThresholds th = {1e-6, 1e-4, 1e-8})
{
    return score_missing(est, Y_star, Y_true, truth, true_mean_amps, th).success;
}

/// Mean plus two standard deviations of ||E||_F^2 for M x L complex Gaussian
/// noise of variance sigma2.
inline double noise_ball_radius(Index M, Index L, double sigma2)
{
    if (M < 1 || L < 1 || sigma2 < 0.0)
        throw ConfigError("noise_ball_radius: need M, L >= 1 and sigma2 >= 0");
    const double ml = static_cast<double>(M * L);
    return (ml + 2.0 * std::sqrt(ml)) * sigma2;
}

/// Share of the squared mean amplitudes carried by components outside the K
/// strongest.
inline double spurious_power_fraction(const Estimate& est, std::size_t K)
{
    if (est.size() == 0)
        return 0.0;
    const auto order = est.order_by_amplitude();
    double total = 0.0;
    double spur = 0.0;
    for (std::size_t j = 0; j < order.size(); ++j)
    {
        const double a = est.mean_amps(static_cast<Index>(order[j]));
        total += a * a;
        if (j >= K)
            spur += a * a;
    }
    return total > 0.0 ? spur / total : 0.0;
}

} // namespace jsfr

#endif
