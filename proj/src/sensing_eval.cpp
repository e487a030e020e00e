#include "iscap/sensing_eval.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace iscap::sensing {

using scenario::steering_vector;

void TargetSet::validate(const scenario::ScenarioConfig& cfg) const {
    const std::size_t n = angles.size();
    if (amplitudes.size() != n || delays.size() != n || dopplers.size() != n)
        throw ConfigError("target set: field lengths disagree");
    for (double tau : delays)
        if (tau < 0.0 || tau >= 1.0 / cfg.subcarrier_spacing)
            throw ConfigError("target delay outside the unambiguous range");
    for (double nu : dopplers)
        if (std::abs(nu * cfg.carrier_freq * cfg.symbol_duration) >= 0.5)
            throw ConfigError("target Doppler outside the unambiguous range");
}

namespace {

class Cscg {
  public:
    explicit Cscg(std::uint64_t seed) : gen_(seed) {}
    double normal() {
        if (have_) {
            have_ = false;
            return spare_;
        }
        double u1;
        do {
            u1 = unit();
        } while (u1 <= 1e-300);
        const double u2 = unit();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * kPi * u2);
        have_ = true;
        return r * std::cos(2.0 * kPi * u2);
    }
    cxd unit_cscg() { return cxd(normal(), normal()) / std::sqrt(2.0); }
    double uniform() { return unit(); }

  private:
    double unit() { return (static_cast<double>(gen_()) + 0.5) * (1.0 / 18446744073709551616.0); }
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool have_ = false;
};

}  // namespace

TargetSet make_uniform_targets(const scenario::ScenarioConfig& cfg, int count, double span_begin,
                               double span_end, double distance, std::uint64_t seed) {
    TargetSet set;
    Cscg rng(seed ^ 0x9e3779b97f4a7c15ull);
    const double two_way_loss = db_to_linear(cfg.pathloss_ref_db) *
                                std::pow(2.0 * distance / cfg.pathloss_ref_dist,
                                         cfg.pathloss_exponent);
    const double mag = std::sqrt(1.0 / two_way_loss);
    for (int k = 0; k < count; ++k) {
        const double frac = count == 1 ? 0.5 : static_cast<double>(k) / (count - 1);
        set.angles.push_back(span_begin + frac * (span_end - span_begin));
        set.amplitudes.push_back(std::polar(mag, 2.0 * kPi * rng.uniform()));
        set.delays.push_back(2.0 * distance / 299792458.0);
        set.dopplers.push_back(0.0);
    }
    return set;
}

EchoFrame synthesize_echo(const metrics::BeamformingSolution& solution, const TargetSet& targets,
                          const scenario::ScenarioConfig& cfg, std::uint64_t rng_seed) {
    targets.validate(cfg);
    const int N = solution.n_subcarriers();
    const int L = solution.n_symbols();
    const int K = solution.n_streams() - 1;

    // Information streams must carry beams, not general covariances.
    std::vector<std::vector<std::vector<CVec>>> beams(
        N, std::vector<std::vector<CVec>>(L, std::vector<CVec>(K)));
    for (int n = 0; n < N; ++n)
        for (int l = 0; l < L; ++l)
            for (int k = 1; k <= K; ++k) {
                const CMat w = 0.5 * (solution.w(n, l, k) + solution.w(n, l, k).adjoint());
                Eigen::SelfAdjointEigenSolver<CMat> eig(w);
                const RVec ev = eig.eigenvalues();
                const double top = ev(ev.size() - 1);
                if (top < 0.0) throw ConfigError("information covariance not PSD");
                if (ev.size() > 1 && std::abs(ev(ev.size() - 2)) > 1e-6 * std::max(top, 1e-30))
                    throw ConfigError(
                        "information stream is not rank one; run the extraction first");
                beams[n][l][k - 1] =
                    top > 0.0 ? CVec(std::sqrt(top) * eig.eigenvectors().col(ev.size() - 1))
                              : CVec(CVec::Zero(cfg.n_tx));
            }

    // Dedicated-stream factor: W0 = F F^H so F xi has covariance W0.
    std::vector<std::vector<CMat>> w0_factor(N, std::vector<CMat>(L));
    for (int n = 0; n < N; ++n)
        for (int l = 0; l < L; ++l) {
            const CMat w = 0.5 * (solution.w(n, l, 0) + solution.w(n, l, 0).adjoint());
            Eigen::SelfAdjointEigenSolver<CMat> eig(w);
            RVec ev = eig.eigenvalues().cwiseMax(0.0);
            w0_factor[n][l] = eig.eigenvectors() * ev.cwiseSqrt().asDiagonal();
        }

    Cscg rng(rng_seed);
    EchoFrame frame;
    frame.transmit.assign(N, std::vector<CVec>(L));
    frame.received.assign(N, std::vector<CVec>(L));

    std::vector<CVec> rx_steer, tx_steer;
    for (int k = 0; k < targets.size(); ++k) {
        rx_steer.push_back(steering_vector(targets.angles[k], cfg.n_rx, cfg.spacing_ratio));
        tx_steer.push_back(steering_vector(targets.angles[k], cfg.n_tx, cfg.spacing_ratio));
    }

    // Draw order fixed: per (n, l), info symbols then the dedicated vector,
    // then noise, so frames are reproducible for a given seed.
    const double noise_sd = std::sqrt(cfg.noise_power_sense);
    for (int n = 0; n < N; ++n)
        for (int l = 0; l < L; ++l) {
            CVec x = CVec::Zero(cfg.n_tx);
            for (int k = 0; k < K; ++k) x += beams[n][l][k] * rng.unit_cscg();
            CVec xi(cfg.n_tx);
            for (int m = 0; m < cfg.n_tx; ++m) xi(m) = rng.unit_cscg();
            x += w0_factor[n][l] * xi;
            frame.transmit[n][l] = x;

            CVec y = CVec::Zero(cfg.n_rx);
            for (int k = 0; k < targets.size(); ++k) {
                const double phase = 2.0 * kPi * (l * targets.dopplers[k] * cfg.carrier_freq *
                                                      cfg.symbol_duration -
                                                  n * targets.delays[k] * cfg.subcarrier_spacing);
                const cxd rot = std::polar(1.0, phase) * targets.amplitudes[k];
                const cxd projected = (tx_steer[k].transpose() * x).value();
                y += rot * projected * rx_steer[k];
            }
            for (int m = 0; m < cfg.n_rx; ++m) y(m) += noise_sd * rng.unit_cscg();
            frame.received[n][l] = y;
        }
    return frame;
}

std::vector<double> music_spectrum(const EchoFrame& frame, int slot, int expected_targets,
                                   const scenario::AngularGrid& grid,
                                   const scenario::SlotSchedule& schedule,
                                   const scenario::ScenarioConfig& cfg) {
    if (expected_targets >= cfg.n_rx)
        throw EstimationError("subspace estimation needs fewer targets than receive antennas");
    const auto [begin, end] = schedule.slot_symbols[slot];
    CMat cov = CMat::Zero(cfg.n_rx, cfg.n_rx);
    for (int l = begin; l < end; ++l)
        for (std::size_t n = 0; n < frame.received.size(); ++n)
            cov += frame.received[n][l] * frame.received[n][l].adjoint();
    Eigen::SelfAdjointEigenSolver<CMat> eig(cov);
    const CMat noise_basis = eig.eigenvectors().leftCols(cfg.n_rx - expected_targets);
    std::vector<double> spectrum(grid.size());
    for (int m = 0; m < grid.size(); ++m) {
        const CVec a = steering_vector(grid.angles[m], cfg.n_rx, cfg.spacing_ratio);
        const double denom = (noise_basis.adjoint() * a).squaredNorm();
        spectrum[m] = 1.0 / std::max(denom, 1e-300);
    }
    return spectrum;
}

std::vector<double> music_doa(const EchoFrame& frame, int slot, int expected_targets,
                              const scenario::AngularGrid& grid,
                              const scenario::SlotSchedule& schedule,
                              const scenario::ScenarioConfig& cfg) {
    if (expected_targets == 0) return {};
    const auto spectrum = music_spectrum(frame, slot, expected_targets, grid, schedule, cfg);
    const int M = grid.size();

    // Local maxima, strictly above both neighbors; plateaus resolve to the
    // smaller angle; endpoints qualify against their single neighbor.
    std::vector<std::pair<double, int>> peaks;
    for (int m = 0; m < M; ++m) {
        const double v = spectrum[m];
        const bool left_ok = m == 0 || v > spectrum[m - 1];
        bool right_ok;
        if (m == M - 1) {
            right_ok = true;
        } else if (v > spectrum[m + 1]) {
            right_ok = true;
        } else if (v == spectrum[m + 1]) {
            int r = m + 1;
            while (r < M && spectrum[r] == v) ++r;
            right_ok = (r == M) || (spectrum[r] < v);
        } else {
            right_ok = false;
        }
        if (left_ok && right_ok) peaks.emplace_back(v, m);
    }
    std::stable_sort(peaks.begin(), peaks.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });

    std::vector<double> doas;
    for (int p = 0; p < std::min<int>(expected_targets, peaks.size()); ++p)
        doas.push_back(grid.angles[peaks[p].second]);
    std::sort(doas.begin(), doas.end());
    if (static_cast<int>(doas.size()) < expected_targets) {
        std::ostringstream os;
        os << "found only " << doas.size() << " spectral peaks of " << expected_targets
           << " expected; partial:";
        for (double d : doas) os << " " << rad2deg(d);
        throw EstimationError(os.str());
    }
    return doas;
}

std::pair<double, double> estimate_delay_doppler(const EchoFrame& frame,
                                                 const metrics::BeamformingSolution& solution,
                                                 double theta_hat,
                                                 const scenario::ScenarioConfig& cfg) {
    const int N = static_cast<int>(frame.received.size());
    const int L = static_cast<int>(frame.received[0].size());
    const CVec a = steering_vector(theta_hat, cfg.n_rx, cfg.spacing_ratio);
    const CVec v = steering_vector(theta_hat, cfg.n_tx, cfg.spacing_ratio);

    const double guard = 1e-9 * std::sqrt(cfg.tx_power / cfg.n_subcarriers);
    CMat c = CMat::Zero(N, L);
    std::vector<std::vector<bool>> valid(N, std::vector<bool>(L, false));
    int n_valid = 0;
    for (int n = 0; n < N; ++n)
        for (int l = 0; l < L; ++l) {
            const cxd ref = (v.transpose() * frame.transmit[n][l]).value();
            if (std::abs(ref) < guard) continue;  // division blow-up guard
            c(n, l) = (a.adjoint() * frame.received[n][l]).value() / ref;
            valid[n][l] = true;
            ++n_valid;
        }
    if (n_valid == 0) throw EstimationError("all reference signals below the guard level");

    // |A(i,j)|^2 over the 2-D likelihood grid; the direct transform keeps the
    // guard mask simple at these grid sizes.
    double best = -1.0;
    int best_i = 0, best_j = 0;
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < L; ++j) {
            cxd acc = 0.0;
            for (int n = 0; n < N; ++n)
                for (int l = 0; l < L; ++l) {
                    if (!valid[n][l]) continue;
                    const double phase = 2.0 * kPi * (static_cast<double>(n) * i / N -
                                                      static_cast<double>(l) * j / L);
                    acc += c(n, l) * std::polar(1.0, phase);
                }
            const double mag = std::norm(acc);
            if (mag > best) {
                best = mag;
                best_i = i;
                best_j = j;
            }
        }
    const double tau = static_cast<double>(best_i) / (N * cfg.subcarrier_spacing);
    const int j_signed = best_j > L / 2 ? best_j - L : best_j;
    const double nu = static_cast<double>(j_signed) / (L * cfg.carrier_freq * cfg.symbol_duration);
    return {tau, nu};
}

double angle_mse(const std::vector<double>& truth, const std::vector<double>& estimates,
                 bool* mismatch) {
    if (mismatch) *mismatch = truth.size() != estimates.size();
    std::vector<bool> used_t(truth.size(), false), used_e(estimates.size(), false);
    const std::size_t pairs = std::min(truth.size(), estimates.size());
    double acc = 0.0;
    for (std::size_t p = 0; p < pairs; ++p) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t bt = 0, be = 0;
        for (std::size_t i = 0; i < truth.size(); ++i) {
            if (used_t[i]) continue;
            for (std::size_t j = 0; j < estimates.size(); ++j) {
                if (used_e[j]) continue;
                const double d = std::abs(truth[i] - estimates[j]);
                if (d < best) {
                    best = d;
                    bt = i;
                    be = j;
                }
            }
        }
        used_t[bt] = used_e[be] = true;
        acc += best * best;
    }
    return pairs == 0 ? 0.0 : acc / pairs;
}

EstimationReport evaluate_estimation(const metrics::BeamformingSolution& solution,
                                     const TargetSet& targets, const scenario::Instance& inst,
                                     std::uint64_t rng_seed) {
    EstimationReport rep;
    const auto frame = synthesize_echo(solution, targets, inst.cfg, rng_seed);

    // Per-slot DoA estimation over the targets inside each slot's bands.
    std::vector<double> est_angles;
    std::vector<int> matched_targets;
    for (int q = 0; q < inst.schedule.n_slots(); ++q) {
        std::vector<int> members;
        if (q < static_cast<int>(targets.slot_membership.size()) &&
            !targets.slot_membership[q].empty()) {
            members = targets.slot_membership[q];
        } else {
            for (int k = 0; k < targets.size(); ++k) {
                bool inside = false;
                for (int m = 0; m < inst.grid.size(); ++m)
                    if (inst.desired[q][m] > 0.5 &&
                        std::abs(inst.grid.angles[m] - targets.angles[k]) <=
                            0.5 * (inst.grid.angles[1] - inst.grid.angles[0]))
                        inside = true;
                if (inside) members.push_back(k);
            }
        }
        if (members.empty()) continue;
        try {
            auto doas = music_doa(frame, q, static_cast<int>(members.size()), inst.grid,
                                  inst.schedule, inst.cfg);
            est_angles.insert(est_angles.end(), doas.begin(), doas.end());
            matched_targets.insert(matched_targets.end(), members.begin(), members.end());
        } catch (const EstimationError&) {
            rep.count_mismatch = true;
        }
    }

    for (int idx : matched_targets) {
        rep.truth_angles.push_back(targets.angles[idx]);
        rep.truth_delays.push_back(targets.delays[idx]);
        rep.truth_dopplers.push_back(targets.dopplers[idx]);
    }
    rep.est_angles = est_angles;
    bool mism = false;
    rep.angle_mse = angle_mse(rep.truth_angles, rep.est_angles, &mism);
    rep.count_mismatch = rep.count_mismatch || mism;

    for (double theta : est_angles) {
        const auto [tau, nu] = estimate_delay_doppler(frame, solution, theta, inst.cfg);
        rep.est_delays.push_back(tau);
        rep.est_dopplers.push_back(nu);
    }
    return rep;
}

std::string EstimationReport::to_csv() const {
    std::ostringstream os;
    os.precision(12);
    os << "target_id,truth_deg,est_deg,truth_delay_s,est_delay_s,truth_doppler,est_doppler\n";
    const std::size_t rows = std::min(truth_angles.size(), est_angles.size());
    for (std::size_t k = 0; k < rows; ++k) {
        os << k + 1 << "," << rad2deg(truth_angles[k]) << "," << rad2deg(est_angles[k]) << ","
           << (k < truth_delays.size() ? truth_delays[k] : 0.0) << ","
           << (k < est_delays.size() ? est_delays[k] : 0.0) << ","
           << (k < truth_dopplers.size() ? truth_dopplers[k] : 0.0) << ","
           << (k < est_dopplers.size() ? est_dopplers[k] : 0.0) << "\n";
    }
    os << "mse_rad2," << angle_mse << ",mismatch," << (count_mismatch ? 1 : 0) << ",,,\n";
    return os.str();
}

}  // namespace iscap::sensing
