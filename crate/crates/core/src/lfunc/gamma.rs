//! log Γ on the complex plane (Lanczos, g = 7), with reflection to the left of Re z = 1/2.

use std::f64::consts::PI;

use num_complex::Complex64;

const G: f64 = 7.0;
const COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Principal-branch-free log Γ(z): the imaginary part is continuous along vertical lines
/// in the right half-plane, which is all exp() needs.
pub fn ln_gamma(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        // Γ(z)Γ(1 − z) = π / sin(πz)
        return Complex64::new(PI.ln(), 0.0) - (z * PI).sin().ln() - ln_gamma(Complex64::new(1.0, 0.0) - z);
    }
    let z = z - 1.0;
    let mut x = Complex64::new(COEF[0], 0.0);
    for (i, c) in COEF.iter().enumerate().skip(1) {
        x += *c / (z + i as f64);
    }
    let t = z + G + 0.5;
    Complex64::new(0.5 * (2.0 * PI).ln(), 0.0) + (z + 0.5) * t.ln() - t + x.ln()
}

pub fn gamma(z: Complex64) -> Complex64 {
    ln_gamma(z).exp()
}

/// log Γ_R(s) = log(π^{−s/2} Γ(s/2)).
pub fn ln_gamma_r(s: Complex64) -> Complex64 {
    -s * 0.5 * PI.ln() + ln_gamma(s * 0.5)
}
