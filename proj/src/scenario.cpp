#include "iscap/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace iscap::scenario {

void ScenarioConfig::validate() const {
    if (n_tx < 1 || n_rx < 1 || n_symbols < 1 || n_subcarriers < 1 || n_slots < 1 || n_grid < 2)
        throw ConfigError("scenario: counts must be positive (grid needs at least 2 angles)");
    if (n_rx < n_tx)
        throw ConfigError("scenario: n_rx must be >= n_tx for the sensing array");
    if (n_symbols % n_slots != 0)
        throw ConfigError("scenario: n_slots must divide n_symbols");
    if (carrier_freq <= 0 || subcarrier_spacing <= 0 || symbol_duration <= 0)
        throw ConfigError("scenario: frequencies and durations must be positive");
    if (tx_power <= 0 || noise_power_comm <= 0 || noise_power_sense <= 0)
        throw ConfigError("scenario: powers must be positive");
    if (spacing_ratio <= 0)
        throw ConfigError("scenario: spacing_ratio must be positive");
    if (rician_factor < 0 || pathloss_ref_dist <= 0)
        throw ConfigError("scenario: bad fading/path-loss parameters");
    if (rate_requirement < 0 || power_requirement < 0)
        throw ConfigError("scenario: requirements must be nonnegative");
}

void UserGeometry::validate() const {
    if (ir_angles.empty() || er_angles.empty())
        throw ConfigError("geometry: need at least one IR and one ER");
    if (ir_angles.size() != ir_distances.size() || er_angles.size() != er_distances.size())
        throw ConfigError("geometry: angle/distance lists must have equal length");
    auto check = [](const std::vector<double>& angles, const std::vector<double>& dists) {
        for (double a : angles)
            if (a < -kPi / 2 - 1e-12 || a > kPi / 2 + 1e-12)
                throw ConfigError("geometry: user angle outside [-pi/2, pi/2]");
        for (double d : dists)
            if (d <= 0) throw ConfigError("geometry: user distance must be positive");
    };
    check(ir_angles, ir_distances);
    check(er_angles, er_distances);
}

int SlotSchedule::slot_of_symbol(int l) const {
    for (int q = 0; q < n_slots(); ++q)
        if (l >= slot_symbols[q].first && l < slot_symbols[q].second) return q;
    throw std::out_of_range("symbol index outside schedule");
}

CVec steering_vector(double theta, int count, double spacing_ratio) {
    CVec v(count);
    const double phase_step = 2.0 * kPi * spacing_ratio * std::sin(theta);
    for (int m = 0; m < count; ++m) v(m) = std::polar(1.0, phase_step * m);
    return v;
}

AngularGrid make_angular_grid(int m) {
    if (m < 2) throw ConfigError("angular grid needs at least 2 points");
    AngularGrid grid;
    grid.angles.resize(m);
    for (int i = 0; i < m; ++i)
        grid.angles[i] = -kPi / 2 + kPi * static_cast<double>(i) / (m - 1);
    return grid;
}

std::vector<std::pair<int, int>> slot_partition(int l, int q) {
    if (q < 1 || l < 1 || l % q != 0)
        throw ConfigError("slot partition requires n_slots dividing n_symbols");
    const int block = l / q;
    std::vector<std::pair<int, int>> slots(q);
    for (int j = 0; j < q; ++j) slots[j] = {j * block, (j + 1) * block};
    return slots;
}

std::vector<std::vector<double>> desired_beampattern(const AngularGrid& grid,
                                                     const std::vector<double>& centers,
                                                     double width,
                                                     const SlotSchedule& schedule) {
    if (static_cast<int>(centers.size()) != schedule.n_slots())
        throw ConfigError("desired beampattern needs one center per slot");
    std::vector<std::vector<double>> gains(centers.size(), std::vector<double>(grid.size(), 0.0));
    for (std::size_t q = 0; q < centers.size(); ++q)
        for (int m = 0; m < grid.size(); ++m)
            if (std::abs(grid.angles[m] - centers[q]) <= width / 2)
                gains[q][m] = 1.0;
    return gains;
}

SlotSchedule make_schedule(const ScenarioConfig& cfg, const AngularGrid& grid,
                           const std::vector<double>& centers, double width) {
    for (std::size_t q = 1; q < centers.size(); ++q)
        if (centers[q] <= centers[q - 1])
            throw ConfigError("slot scan centers must be strictly increasing");
    SlotSchedule sched;
    sched.slot_symbols = slot_partition(cfg.n_symbols, cfg.n_slots);
    const auto gains = desired_beampattern(grid, centers, width, sched);
    sched.interest_masks.resize(gains.size());
    for (std::size_t q = 0; q < gains.size(); ++q) {
        sched.interest_masks[q].resize(grid.size());
        for (int m = 0; m < grid.size(); ++m) sched.interest_masks[q][m] = gains[q][m] > 0.5;
    }
    return sched;
}

double path_loss(const ScenarioConfig& cfg, double distance) {
    if (distance <= 0) throw ConfigError("path loss needs a positive distance");
    return db_to_linear(cfg.pathloss_ref_db) *
           std::pow(distance / cfg.pathloss_ref_dist, cfg.pathloss_exponent);
}

namespace {

// Box-Muller on mt19937_64 keeps draws identical across standard libraries.
class GaussianSource {
  public:
    explicit GaussianSource(std::uint64_t seed) : gen_(seed) {}

    double next() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = unit();
        } while (u1 <= 1e-300);
        const double u2 = unit();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * kPi * u2);
        have_spare_ = true;
        return r * std::cos(2.0 * kPi * u2);
    }

    cxd next_cscg() {
        const double re = next();
        const double im = next();
        return cxd(re, im) / std::sqrt(2.0);  // unit variance per complex entry
    }

  private:
    double unit() {
        return (static_cast<double>(gen_()) + 0.5) * (1.0 / 18446744073709551616.0);
    }
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

CMat user_channel(const ScenarioConfig& cfg, double angle, double distance, GaussianSource& rng) {
    const double lp = path_loss(cfg, distance);
    const double kappa = cfg.rician_factor;
    const double los_w = std::sqrt(kappa / (1.0 + kappa));
    const double nlos_w = std::sqrt(1.0 / (1.0 + kappa));
    const CVec los = steering_vector(angle, cfg.n_tx, cfg.spacing_ratio).conjugate();
    CMat h(cfg.n_subcarriers, cfg.n_tx);
    for (int n = 0; n < cfg.n_subcarriers; ++n) {
        for (int m = 0; m < cfg.n_tx; ++m) {
            const cxd scatter = rng.next_cscg();
            h(n, m) = std::sqrt(1.0 / lp) * (los_w * los(m) + nlos_w * scatter);
        }
    }
    return h;
}

}  // namespace

Instance make_instance(const ScenarioConfig& cfg, const UserGeometry& geometry,
                       const std::vector<double>& scan_centers, double scan_width) {
    Instance inst;
    inst.cfg = cfg;
    inst.geometry = geometry;
    inst.grid = make_angular_grid(cfg.n_grid);
    inst.schedule = make_schedule(cfg, inst.grid, scan_centers, scan_width);
    inst.desired = desired_beampattern(inst.grid, scan_centers, scan_width, inst.schedule);
    inst.channels = generate_channels(cfg, geometry);
    return inst;
}

ChannelSet generate_channels(const ScenarioConfig& cfg, const UserGeometry& geometry) {
    cfg.validate();
    geometry.validate();
    GaussianSource rng(cfg.rng_seed);
    ChannelSet set;
    set.ir_channels.reserve(geometry.n_ir());
    set.er_channels.reserve(geometry.n_er());
    for (int k = 0; k < geometry.n_ir(); ++k)
        set.ir_channels.push_back(user_channel(cfg, geometry.ir_angles[k], geometry.ir_distances[k], rng));
    for (int i = 0; i < geometry.n_er(); ++i)
        set.er_channels.push_back(user_channel(cfg, geometry.er_angles[i], geometry.er_distances[i], rng));
    return set;
}

}  // namespace iscap::scenario
