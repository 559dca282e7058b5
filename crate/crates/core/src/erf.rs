//! Error function and its complement.
//!
//! Piecewise rational approximations after the classic SunPro `s_erf.c`
//! scheme: an odd rational in `x²` near zero, a rational in `|x| - 1` around
//! one, and `exp(-x² - 0.5625 + R(1/x²)/S(1/x²)) / x` in the tails. Absolute
//! error is a few ulps, far inside the 1.5e-7 the minority cap needs, and the
//! results depend only on IEEE arithmetic and `exp`.

#![allow(clippy::excessive_precision)]

const ERX: f64 = 8.45062911510467529297e-01;

// [0, 0.84375]
const EFX: f64 = 1.28379167095512586316e-01;
const PP0: f64 = 1.28379167095512558561e-01;
const PP1: f64 = -3.25042107247001499370e-01;
const PP2: f64 = -2.84817495755985104766e-02;
const PP3: f64 = -5.77027029648944159157e-03;
const PP4: f64 = -2.37630166566501626084e-05;
const QQ1: f64 = 3.97917223959155352819e-01;
const QQ2: f64 = 6.50222499887672944485e-02;
const QQ3: f64 = 5.08130628187576562776e-03;
const QQ4: f64 = 1.32494738004321644526e-04;
const QQ5: f64 = -3.96022827877536812320e-06;

// [0.84375, 1.25]
const PA0: f64 = -2.36211856075265944077e-03;
const PA1: f64 = 4.14856118683748331666e-01;
const PA2: f64 = -3.72207876035701323847e-01;
const PA3: f64 = 3.18346619901161753674e-01;
const PA4: f64 = -1.10894694282396677476e-01;
const PA5: f64 = 3.54783043256182359371e-02;
const PA6: f64 = -2.16637559486879084300e-03;
const QA1: f64 = 1.06420880400844228286e-01;
const QA2: f64 = 5.40397917702171048937e-01;
const QA3: f64 = 7.18286544141962662868e-02;
const QA4: f64 = 1.26171219808761642112e-01;
const QA5: f64 = 1.36370839120290507362e-02;
const QA6: f64 = 1.19844998467991074170e-02;

// [1.25, 1/0.35]
const RA0: f64 = -9.86494403484714822705e-03;
const RA1: f64 = -6.93858572707181764372e-01;
const RA2: f64 = -1.05586262253232909814e+01;
const RA3: f64 = -6.23753324503260060396e+01;
const RA4: f64 = -1.62396669462573470355e+02;
const RA5: f64 = -1.84605092906711035994e+02;
const RA6: f64 = -8.12874355063065934246e+01;
const RA7: f64 = -9.81432934416914548592e+00;
const SA1: f64 = 1.96512716674392571292e+01;
const SA2: f64 = 1.37657754143519042600e+02;
const SA3: f64 = 4.34565877475229228821e+02;
const SA4: f64 = 6.45387271733267880336e+02;
const SA5: f64 = 4.29008140027567833386e+02;
const SA6: f64 = 1.08635005541779435134e+02;
const SA7: f64 = 6.57024977031928170135e+00;
const SA8: f64 = -6.04244152148580987438e-02;

// [1/0.35, 28]
const RB0: f64 = -9.86494292470009928597e-03;
const RB1: f64 = -7.99283237680523006574e-01;
const RB2: f64 = -1.77579549177547519889e+01;
const RB3: f64 = -1.60636384855821916062e+02;
const RB4: f64 = -6.37566443368389627722e+02;
const RB5: f64 = -1.02509513161107724954e+03;
const RB6: f64 = -4.83519191608651397019e+02;
const SB1: f64 = 3.03380607434824582924e+01;
const SB2: f64 = 3.25792512996573918826e+02;
const SB3: f64 = 1.53672958608443695994e+03;
const SB4: f64 = 3.19985821950859553908e+03;
const SB5: f64 = 2.55305040643316442583e+03;
const SB6: f64 = 4.74528541206955367215e+02;
const SB7: f64 = -2.24409524465858183362e+01;

// 2^-28
const SMALL: f64 = 3.725_290_298_461_914e-9;

/// `(erf(x) - x) / x` correction on `[0, 0.84375)`.
fn small_correction(x: f64) -> f64 {
    let z = x * x;
    let r = PP0 + z * (PP1 + z * (PP2 + z * (PP3 + z * PP4)));
    let s = 1.0 + z * (QQ1 + z * (QQ2 + z * (QQ3 + z * (QQ4 + z * QQ5))));
    r / s
}

/// `erf(1 + s) - ERX` on `[0.84375, 1.25)`.
fn near_one(ax: f64) -> f64 {
    let s = ax - 1.0;
    let p = PA0 + s * (PA1 + s * (PA2 + s * (PA3 + s * (PA4 + s * (PA5 + s * PA6)))));
    let q = 1.0 + s * (QA1 + s * (QA2 + s * (QA3 + s * (QA4 + s * (QA5 + s * QA6)))));
    p / q
}

/// `erfc(ax)` for `1.25 <= ax < 28`.
fn tail(ax: f64) -> f64 {
    let s = 1.0 / (ax * ax);
    let (r, q) = if ax < 1.0 / 0.35 {
        (
            RA0 + s * (RA1 + s * (RA2 + s * (RA3 + s * (RA4 + s * (RA5 + s * (RA6 + s * RA7)))))),
            1.0 + s
                * (SA1
                    + s * (SA2 + s * (SA3 + s * (SA4 + s * (SA5 + s * (SA6 + s * (SA7 + s * SA8))))))),
        )
    } else {
        (
            RB0 + s * (RB1 + s * (RB2 + s * (RB3 + s * (RB4 + s * (RB5 + s * RB6))))),
            1.0 + s * (SB1 + s * (SB2 + s * (SB3 + s * (SB4 + s * (SB5 + s * (SB6 + s * SB7)))))),
        )
    };
    // drop the low 32 bits so z*z is exact
    let z = f64::from_bits(ax.to_bits() & 0xffff_ffff_0000_0000);
    (-z * z - 0.5625).exp() * ((z - ax) * (z + ax) + r / q).exp() / ax
}

/// Error function. Odd symmetry is exact; saturates to ±1 for `|x| ≥ 6`.
pub fn erf_approx(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let ax = x.abs();
    let magnitude = if ax < SMALL {
        ax + EFX * ax
    } else if ax < 0.84375 {
        ax + ax * small_correction(ax)
    } else if ax < 1.25 {
        ERX + near_one(ax)
    } else if ax < 6.0 {
        1.0 - tail(ax)
    } else {
        1.0
    };
    magnitude.copysign(x)
}

/// Complementary error function `1 - erf(x)`, accurate in the right tail.
pub fn erfc_approx(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        return 2.0 - erfc_approx(-x);
    }
    if x < 0.84375 {
        let y = small_correction(x);
        if x < 0.25 {
            1.0 - (x + x * y)
        } else {
            0.5 - (x * y + (x - 0.5))
        }
    } else if x < 1.25 {
        (1.0 - ERX) - near_one(x)
    } else if x < 28.0 {
        tail(x)
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Maclaurin series of erf, summed until terms stop contributing.
    fn erf_series(x: f64) -> f64 {
        let mut term = x;
        let mut sum = x;
        let mut n = 0u32;
        loop {
            n += 1;
            term *= -x * x / n as f64;
            let contribution = term / (2 * n + 1) as f64;
            sum += contribution;
            if contribution.abs() < 1e-18 || n > 200 {
                break;
            }
        }
        sum * 2.0 / std::f64::consts::PI.sqrt()
    }

    #[test]
    fn known_points() {
        assert_eq!(erf_approx(0.0), 0.0);
        assert!((erf_approx(6.0) - 1.0).abs() < 1e-9);
        assert!((erf_approx(1.0) - 0.8427008).abs() < 1e-7);
        assert!((erf_approx(1.0) - erf_series(1.0)).abs() < 1e-14);
        assert_eq!(erf_approx(40.0), 1.0);
        assert_eq!(erf_approx(-40.0), -1.0);
    }

    #[test]
    fn matches_series_oracle_on_grid() {
        // the alternating series loses precision beyond |x| ~ 3
        for i in -300..=300 {
            let x = i as f64 / 100.0;
            let err = (erf_approx(x) - erf_series(x)).abs();
            assert!(err < 1.5e-7 * 1e-3, "x = {x}, err = {err}");
        }
    }

    #[test]
    fn complement_is_consistent() {
        for i in -400..=400 {
            let x = i as f64 / 100.0;
            assert!((erfc_approx(x) - (1.0 - erf_approx(x))).abs() < 1e-15, "x = {x}");
        }
        // erfc(5) from tables
        assert!((erfc_approx(5.0) / 1.5374597944280349e-12 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn odd_symmetry_is_exact() {
        for i in 0..2000 {
            let x = i as f64 * 0.0037 + 1e-10;
            assert_eq!(erf_approx(-x), -erf_approx(x));
        }
    }
}
