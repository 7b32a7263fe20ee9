#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace mimoloc {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Antenna geometry of a distributed MIMO radar plus the true target.
///
/// Positions are stored column-wise: `transmitters` is D x M and `receivers`
/// is D x N, all in meters.
struct Scenario {
    int dim = 2;
    Mat transmitters;
    Mat receivers;
    Vec target;

    int num_tx() const { return static_cast<int>(transmitters.cols()); }
    int num_rx() const { return static_cast<int>(receivers.cols()); }

    /// Throws InvalidInput unless D in {2,3}, M,N >= 1, shapes agree and
    /// every coordinate is finite.
    void validate() const;

    /// Largest absolute antenna coordinate.
    double antenna_scale() const;
};

/// Per-pair range noise and per-antenna position noise.
///
/// `pair_variance` is M x N, indexed (m, n); antenna variances may be empty
/// when the scenario has exactly known antenna positions.
struct NoiseModel {
    double k1 = 1.0;
    double k2 = 1000.0;
    Mat pair_variance;
    Vec antenna_variance_t;
    Vec antenna_variance_s;

    bool has_antenna_noise() const {
        return antenna_variance_t.size() > 0 || antenna_variance_s.size() > 0;
    }
};

/// Observed (perturbed) antenna positions and their normalized weights.
struct AntennaObservation {
    Mat transmitters;  // D x M
    Mat receivers;     // D x N
    Vec weight_t;
    Vec weight_s;
};

/// Noisy bistatic ranges with the normalized pair weights used by every
/// energy function.
struct MeasurementSet {
    Mat range;   // M x N, meters
    Mat weight;  // M x N, sums to one
    NoiseModel noise;
    std::optional<AntennaObservation> antennas;

    int num_tx() const { return static_cast<int>(range.rows()); }
    int num_rx() const { return static_cast<int>(range.cols()); }
    bool antenna_mode() const { return antennas.has_value(); }
};

/// ||u - t|| + ||u - s||. Throws InvalidInput on dimension mismatch.
double bistatic_range(const Vec& u, const Vec& t, const Vec& s);

/// Noise-free M x N range matrix at position `u`.
Mat bistatic_ranges(const Vec& u, const Mat& transmitters, const Mat& receivers);

/// w_mn = (1/var_mn) / sum(1/var). Throws InvalidInput on non-positive entries.
Mat pair_weights(const Mat& variance);

/// Inverse-variance weights normalized to sum to one.
Vec inverse_variance_weights(const Vec& variance);

/// Uniform weights 1/(MN), used when no variance information is available.
Mat uniform_pair_weights(int m, int n);

/// Draws r~_mn = r_mn + N(0, var_mn). Deterministic in `seed`.
MeasurementSet simulate_measurements(const Scenario& scenario, const NoiseModel& noise,
                                     std::uint64_t seed);

/// Builds the noise model whose average SNR equals `snr_db`, with
/// var_mn = k1 * g_t,m^2 * g_s,n^2.
///
/// Throws SingularGeometry when the target sits on an antenna.
NoiseModel noise_from_snr(const Scenario& scenario, double snr_db, double k2 = 1000.0);

/// Average SNR (dB) implied by `noise`, i.e. 10 log10(mean(k2 / var_mn)).
double average_snr_db(const NoiseModel& noise);

/// Sets every antenna variance to `variance` (meters^2).
void set_antenna_variance(NoiseModel& noise, const Scenario& scenario, double variance);

/// Draws observed antenna positions t~ = t + N(0, var_t I), s~ likewise.
AntennaObservation simulate_antenna_positions(const Scenario& scenario, const NoiseModel& noise,
                                              std::uint64_t seed);

/// Names accepted by builtin_scenario().
std::vector<std::string> builtin_scenario_names();

/// "scenario1-2d" (3 Tx, 3 Rx) or "scenario2-3d" (5 Tx, 6 Rx). Throws NotFound.
Scenario builtin_scenario(std::string_view name);

/// Antennas on a circle of the given radius. Tx1/Tx2 sit at angles 0 and pi,
/// Rx1/Rx2 at pi/2 and -pi/2, the rest uniform; the target is uniform in the
/// disk of radius radius/2.
Scenario random_circle_scenario(int m, int n, double radius, std::uint64_t seed);

/// Writes `m,n,r_true,r_meas,sigma2,w` rows (1-based indices, row-major over (m,n)).
void write_measurements_csv(std::ostream& out, const Scenario& scenario,
                            const MeasurementSet& meas);

}  // namespace mimoloc
