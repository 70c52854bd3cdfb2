//! Physical constants (SI, CODATA 2018 exact values).

/// Reduced Planck constant, J·s. Exact: h / 2π with h = 6.626 070 15e-34.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Boltzmann constant, J/K (exact).
pub const K_B: f64 = 1.380_649e-23;

/// Speed of light in vacuum, m/s (exact).
pub const C: f64 = 299_792_458.0;
