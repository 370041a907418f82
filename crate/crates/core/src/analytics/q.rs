/// Two-exponential approximation (1/12)e^{−x²/2} + (1/4)e^{−2x²/3}.
pub fn q_approx(x: f64) -> f64 {
    let x2 = x * x;
    (-x2 / 2.0).exp() / 12.0 + (-2.0 * x2 / 3.0).exp() / 4.0
}

/// Gaussian tail probability Q(x) = erfc(x/√2)/2.
pub fn q_exact(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}
