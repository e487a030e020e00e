#include "iscap/metrics.hpp"

#include <cmath>
#include <sstream>

namespace iscap::metrics {

using scenario::steering_vector;

BeamformingSolution BeamformingSolution::zeros(int n_subcarriers, int n_symbols, int n_streams,
                                               int n_tx) {
    BeamformingSolution sol;
    sol.covariances.assign(
        n_subcarriers,
        std::vector<std::vector<CMat>>(n_symbols, std::vector<CMat>(n_streams, CMat::Zero(n_tx, n_tx))));
    return sol;
}

void BeamformingSolution::hermitize() {
    for (auto& per_n : covariances)
        for (auto& per_l : per_n)
            for (auto& w : per_l) w = 0.5 * (w + w.adjoint()).eval();
}

void BeamformingSolution::validate(double power_budget) const {
    for (const auto& per_n : covariances)
        for (const auto& per_l : per_n)
            for (const auto& w : per_l) {
                if ((w - w.adjoint()).cwiseAbs().maxCoeff() > 1e-10)
                    throw ConfigError("solution: covariance not Hermitian within 1e-10");
                Eigen::SelfAdjointEigenSolver<CMat> eig(0.5 * (w + w.adjoint()),
                                                        Eigen::EigenvaluesOnly);
                const double tr = w.trace().real();
                if (eig.eigenvalues().minCoeff() < -1e-8 * std::max(tr, 1e-30))
                    throw ConfigError("solution: covariance not PSD within tolerance");
            }
    for (double r : power_residual(*this, power_budget))
        if (std::abs(r) > 1e-6 * power_budget)
            throw ConfigError("solution: per-symbol power not equal to the budget");
    if (zeta < 0.0) throw ConfigError("solution: zeta must be nonnegative");
}

double beampattern_gain(const BeamformingSolution& sol, int symbol, double theta,
                        double spacing_ratio) {
    if (symbol < 0 || symbol >= sol.n_symbols()) throw std::out_of_range("symbol index");
    const int n_tx = static_cast<int>(sol.w(0, 0, 0).rows());
    const CVec vc = steering_vector(theta, n_tx, spacing_ratio).conjugate();
    double gain = 0.0;
    for (int n = 0; n < sol.n_subcarriers(); ++n)
        for (int k = 0; k < sol.n_streams(); ++k) {
            const CMat& w = sol.w(n, symbol, k);
            gain += (vc.adjoint() * (0.5 * (w + w.adjoint())) * vc).value().real();
        }
    return gain;
}

double matching_error(const BeamformingSolution& sol, const std::vector<std::vector<double>>& desired,
                      const scenario::AngularGrid& grid, const scenario::SlotSchedule& schedule,
                      double spacing_ratio) {
    double err = 0.0;
    for (int l = 0; l < sol.n_symbols(); ++l) {
        const int q = schedule.slot_of_symbol(l);
        for (int m = 0; m < grid.size(); ++m) {
            const double g = beampattern_gain(sol, l, grid.angles[m], spacing_ratio);
            const double d = g - sol.zeta * desired[q][m];
            err += d * d;
        }
    }
    return err;
}

double normalized_matching_error(double error, int n_symbols, int n_grid, double zeta) {
    if (zeta == 0.0) throw ConfigError("normalized matching error undefined for zeta = 0");
    return error / (static_cast<double>(n_symbols) * n_grid * zeta * zeta);
}

namespace {
double quad_form(const CVec& h, const CMat& w) {
    return (h.adjoint() * (0.5 * (w + w.adjoint())) * h).value().real();
}
}  // namespace

double sinr(const BeamformingSolution& sol, const scenario::ChannelSet& channels, int subcarrier,
            int symbol, int ir, double noise_power) {
    const CVec h = channels.ir(subcarrier, ir);
    const int k = ir + 1;  // stream index of this IR
    double signal = 0.0, interference = 0.0;
    for (int i = 0; i < sol.n_streams(); ++i) {
        const double p = quad_form(h, sol.w(subcarrier, symbol, i));
        if (i == k)
            signal = p;
        else
            interference += p;
    }
    return std::max(signal, 0.0) / (std::max(interference, 0.0) + noise_power);
}

double average_rate(const BeamformingSolution& sol, const scenario::ChannelSet& channels, int ir,
                    double noise_power) {
    double sum = 0.0;
    for (int l = 0; l < sol.n_symbols(); ++l)
        for (int n = 0; n < sol.n_subcarriers(); ++n)
            sum += std::log2(1.0 + sinr(sol, channels, n, l, ir, noise_power));
    return sum / (static_cast<double>(sol.n_symbols()) * sol.n_subcarriers());
}

double harvested_power(const BeamformingSolution& sol, const scenario::ChannelSet& channels, int er) {
    // Average over symbols only; subcarriers accumulate (Eq.-(10) convention).
    double sum = 0.0;
    for (int l = 0; l < sol.n_symbols(); ++l)
        for (int n = 0; n < sol.n_subcarriers(); ++n) {
            const CVec g = channels.er(n, er);
            for (int k = 0; k < sol.n_streams(); ++k) sum += quad_form(g, sol.w(n, l, k));
        }
    return sum / sol.n_symbols();
}

std::vector<double> power_residual(const BeamformingSolution& sol, double power_budget) {
    std::vector<double> res(sol.n_symbols(), 0.0);
    for (int l = 0; l < sol.n_symbols(); ++l) {
        double tr = 0.0;
        for (int n = 0; n < sol.n_subcarriers(); ++n)
            for (int k = 0; k < sol.n_streams(); ++k) tr += sol.w(n, l, k).trace().real();
        res[l] = tr - power_budget;
    }
    return res;
}

PerformanceReport evaluate(const BeamformingSolution& sol, const scenario::ScenarioConfig& cfg,
                           const scenario::ChannelSet& channels, const scenario::AngularGrid& grid,
                           const scenario::SlotSchedule& schedule,
                           const std::vector<std::vector<double>>& desired) {
    PerformanceReport rep;
    rep.zeta = sol.zeta;
    rep.matching_error = matching_error(sol, desired, grid, schedule, cfg.spacing_ratio);
    rep.normalized_error =
        normalized_matching_error(rep.matching_error, cfg.n_symbols, cfg.n_grid, sol.zeta);
    for (int k = 0; k < channels.n_ir(); ++k)
        rep.per_ir_rate.push_back(average_rate(sol, channels, k, cfg.noise_power_comm));
    for (int i = 0; i < channels.n_er(); ++i)
        rep.per_er_power.push_back(harvested_power(sol, channels, i));
    rep.per_symbol_power_residual = power_residual(sol, cfg.tx_power);
    rep.gain.assign(schedule.n_slots(), std::vector<double>(grid.size(), 0.0));
    for (int q = 0; q < schedule.n_slots(); ++q) {
        const int l = schedule.slot_symbols[q].first;
        for (int m = 0; m < grid.size(); ++m)
            rep.gain[q][m] = beampattern_gain(sol, l, grid.angles[m], cfg.spacing_ratio);
    }
    return rep;
}

std::string report_to_csv(const PerformanceReport& report, const scenario::AngularGrid& grid,
                          const std::vector<std::vector<double>>& desired) {
    std::ostringstream os;
    os.precision(12);
    os << "slot,grid_angle_deg,gain,desired\n";
    for (std::size_t q = 0; q < report.gain.size(); ++q)
        for (int m = 0; m < grid.size(); ++m)
            os << q + 1 << "," << rad2deg(grid.angles[m]) << "," << report.gain[q][m] << ","
               << report.zeta * desired[q][m] << "\n";
    os << "entity_type,entity_id,metric,value\n";
    os << "design,0,matching_error," << report.matching_error << "\n";
    os << "design,0,normalized_error," << report.normalized_error << "\n";
    os << "design,0,zeta," << report.zeta << "\n";
    for (std::size_t k = 0; k < report.per_ir_rate.size(); ++k)
        os << "ir," << k + 1 << ",rate_bps_hz," << report.per_ir_rate[k] << "\n";
    for (std::size_t i = 0; i < report.per_er_power.size(); ++i)
        os << "er," << i + 1 << ",harvested_w," << report.per_er_power[i] << "\n";
    for (std::size_t l = 0; l < report.per_symbol_power_residual.size(); ++l)
        os << "symbol," << l << ",power_residual_w," << report.per_symbol_power_residual[l] << "\n";
    return os.str();
}

}  // namespace iscap::metrics
