#pragma once

#include <complex>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "pacosim/signal_trace.hpp"

namespace pacosim {

/// SISO transfer function num(s)/den(s) * exp(-tau*s), coefficients stored in
/// descending powers of s.
struct RationalDelaySystem {
    std::vector<double> num;
    std::vector<double> den;
    double tau = 0.0;  // dead time, seconds

    RationalDelaySystem(std::vector<double> num_coeffs, std::vector<double> den_coeffs,
                        double dead_time = 0.0);

    std::complex<double> response(double omega) const;

    /// True iff every den root lies strictly in the open left half plane.
    bool is_stable() const;

    std::size_t order() const { return den.size() - 1; }
};

/// Roots of a real polynomial (descending coefficients) via the companion
/// matrix. Degree-zero polynomials have none.
std::vector<std::complex<double>> polynomial_roots(std::span<const double> coeffs);

struct FrequencyGrid {
    std::vector<double> omegas;  // rad/s, positive, strictly increasing

    explicit FrequencyGrid(std::vector<double> points);
    static FrequencyGrid logspace(double omega_min, double omega_max, std::size_t count);

    /// 2000 points over [1e-3, 1e4] rad/s.
    static FrequencyGrid analysis_default();
};

using ResponseFn = std::function<std::complex<double>(double)>;

struct IndexResult {
    double value = 0.0;
    double omega = 0.0;  // frequency achieving the extremum
};

/// Input-feedforward passivity index: min over the grid of Re G(jw), with
/// optional golden-section refinement around the grid minimizer.
IndexResult ifp_index(const ResponseFn& g, const FrequencyGrid& grid, bool refine = true);
IndexResult ifp_index(const RationalDelaySystem& sys, const FrequencyGrid& grid,
                      bool refine = true);

/// Output-feedback passivity index, computed as min Re(1/G(jw)).
IndexResult ofp_index(const ResponseFn& g, const FrequencyGrid& grid, bool refine = true);
IndexResult ofp_index(const RationalDelaySystem& sys, const FrequencyGrid& grid,
                      bool refine = true);

/// L2 gain: max over the grid of |G(jw)|.
IndexResult l2_gain(const ResponseFn& g, const FrequencyGrid& grid, bool refine = true);
IndexResult l2_gain(const RationalDelaySystem& sys, const FrequencyGrid& grid,
                    bool refine = true);

struct NyquistPoint {
    double omega;
    std::complex<double> value;
};

std::vector<NyquistPoint> nyquist_points(const ResponseFn& g, const FrequencyGrid& grid,
                                         bool inverse = false);
std::vector<NyquistPoint> nyquist_points(const RationalDelaySystem& sys,
                                         const FrequencyGrid& grid, bool inverse = false);

/// CSV with header `omega,re,im`.
void write_nyquist_csv(std::ostream& os, std::span<const NyquistPoint> points);

/// Feedback interconnection of IF-OFP(e1,d1) and IF-OFP(e2,d2) is finite gain
/// stable iff e1 + d2 > 0 and e2 + d1 > 0.
bool check_fgs_interconnection(const SupplyRateSpec& lv1, const SupplyRateSpec& lv2);

}  // namespace pacosim
