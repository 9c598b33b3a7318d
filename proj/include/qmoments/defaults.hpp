#pragma once

// Every tunable default of the library lives here.
//
//   name                     value   used by
//   -----------------------  ------  -------------------------------------------
//   kTolStruct               1e-10   generator / Gaussian-data structural checks
//   kTolOde                  1e-10   adaptive Runge-Kutta integrations
//   kTaylorRadius            0.5     Taylor fallback threshold on ||B||_1 * t
//   kMaxOrder                8       moment hierarchies and partition enumeration
//   kMaxPoissonOrder         5       stacked Poisson block systems
//   kStackedPoissonOrder     3       Auto solver: stacked exponential up to this order
//   kMaxFockDimension        4096    truncated Fock space dimension
//   kMaxSuperopDimension     64      dense superoperator exponential (d <= 64)
//   kLeakageThreshold        1e-8    top-two-level population allowed in oracle runs
//   kMaxCutoff               64      cutoff doubling ceiling for leakage reruns
//   kCompareTolerance        1e-6    engine vs oracle relative error in `compare`
//   kQuadratureTol           1e-13   adaptive Gauss-Kronrod relative tolerance
//   kLeibnizTolerance        1e-10   relative Leibniz-identity residual in `leibniz`
//   kLeibnizInstances        100     random instances in the `leibniz` ensemble
//   kDefaultCutoff           20      Fock cutoff per mode when a scenario gives none

namespace qmoments::defaults {

inline constexpr double kTolStruct = 1e-10;
inline constexpr double kTolOde = 1e-10;
inline constexpr double kTaylorRadius = 0.5;
inline constexpr int kMaxOrder = 8;
inline constexpr int kMaxPoissonOrder = 5;
inline constexpr int kStackedPoissonOrder = 3;
inline constexpr int kMaxFockDimension = 4096;
inline constexpr int kMaxSuperopDimension = 64;
inline constexpr double kLeakageThreshold = 1e-8;
inline constexpr int kMaxCutoff = 64;
inline constexpr double kCompareTolerance = 1e-6;
inline constexpr double kQuadratureTol = 1e-13;
inline constexpr double kLeibnizTolerance = 1e-10;
inline constexpr int kLeibnizInstances = 100;
inline constexpr int kDefaultCutoff = 20;

}  // namespace qmoments::defaults
