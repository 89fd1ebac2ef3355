//! Scalar closures of the model: CheZ steady level, motility, volume growth
//! rate and the grid-snapped intracellular drift.

use crate::error::{PbdmError, Result};
use crate::params::{DiffusionProfile, KvMode, ModelParams};

/// Steady CheZ level `L(h) = Zw (0.5 - 0.5 tanh(mu (h - h0)))`.
#[inline]
pub fn chez_level(h: f64, p: &ModelParams) -> f64 {
    p.zw * (0.5 - 0.5 * (p.mu * (h - p.h0)).tanh())
}

/// `dL/dh = -0.5 Zw mu sech^2(mu (h - h0))`.
#[inline]
pub fn chez_level_slope(h: f64, p: &ModelParams) -> f64 {
    let s = 1.0 / (p.mu * (h - p.h0)).cosh();
    -0.5 * p.zw * p.mu * s * s
}

#[inline]
fn motility_unchecked(z: f64, p: &ModelParams) -> f64 {
    match p.profile {
        DiffusionProfile::Linear => z / (2.0 * p.zw) + 0.01,
        DiffusionProfile::Power30 => 0.5 * (z / p.zw).powi(30) + 0.01,
    }
}

/// Motility `D(z)` for `z` in `[0, Zw]`.
///
/// Values within a relative `1e-12` of the interval ends are clamped so that
/// `k dz` at `k = Nz` is accepted.
pub fn motility(z: f64, p: &ModelParams) -> Result<f64> {
    let slack = 1e-12 * p.zw;
    if !(z >= -slack && z <= p.zw + slack) {
        return Err(PbdmError::Domain(format!("z = {z} outside [0, {}]", p.zw)));
    }
    Ok(motility_unchecked(z.clamp(0.0, p.zw), p))
}

/// `D'(z)`.
pub fn motility_slope(z: f64, p: &ModelParams) -> f64 {
    match p.profile {
        DiffusionProfile::Linear => 1.0 / (2.0 * p.zw),
        DiffusionProfile::Power30 => 15.0 * (z / p.zw).powi(29) / p.zw,
    }
}

/// `d/dh D(L(h)) = D'(L(h)) L'(h)`, evaluated analytically.
pub fn motility_ahl_derivative(h: f64, p: &ModelParams) -> f64 {
    motility_slope(chez_level(h, p), p) * chez_level_slope(h, p)
}

/// Volume growth rate `k_V`.
#[inline]
pub fn volume_growth_rate(p: &ModelParams, n_local: f64) -> f64 {
    match p.kv_mode {
        KvMode::ConstantR => p.r,
        KvMode::RTimesN => p.r * n_local,
    }
}

/// Nearest z node to a CheZ level; ties round half away from zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnappedLevel {
    pub index: usize,
    pub level: f64,
}

pub fn round_to_grid(level: f64, dz: f64) -> SnappedLevel {
    let index = (level / dz).round().max(0.0) as usize;
    SnappedLevel {
        index,
        level: index as f64 * dz,
    }
}

/// Drift value with its upwind split `g = g+ - g-`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DriftEval {
    pub value: f64,
    pub plus: f64,
    pub minus: f64,
}

impl DriftEval {
    #[inline]
    pub fn new(value: f64) -> Self {
        Self {
            value,
            plus: value.max(0.0),
            minus: (-value).max(0.0),
        }
    }
}

/// Discrete drift `k_V (R(L(h)/dz) dz - z_k)` toward the snapped CheZ level
/// of the supplied AHL value.
pub fn discrete_drift(z_k: f64, h_neighbor: f64, n_local: f64, p: &ModelParams, dz: f64) -> DriftEval {
    let snapped = round_to_grid(chez_level(h_neighbor, p), dz);
    DriftEval::new(volume_growth_rate(p, n_local) * (snapped.level - z_k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p() -> ModelParams {
        ModelParams::biological()
    }

    #[test]
    fn level_at_threshold_is_half() {
        assert_eq!(chez_level(0.25, &p()), 0.615);
    }

    #[test]
    fn level_near_zero_ahl_saturates() {
        let l = chez_level(0.0, &p());
        assert!((l - 1.23).abs() < 1e-6 && l < 1.23);
        assert!(chez_level(1e6, &p()) < 1e-300);
    }

    #[test]
    fn motility_endpoints() {
        let lin = p();
        assert!((motility(0.0, &lin).unwrap() - 0.01).abs() < 1e-15);
        assert!((motility(1.23, &lin).unwrap() - 0.51).abs() < 1e-15);
        let pw = ModelParams::patterns();
        assert!((motility(1.23, &pw).unwrap() - 0.51).abs() < 1e-15);
        assert!(motility(-0.1, &lin).is_err());
        assert!(motility(1.3, &lin).is_err());
        // k dz at the top node may exceed Zw by an ulp
        assert!(motility(41.0 * 0.03, &lin).is_ok());
    }

    #[test]
    fn growth_rate_modes() {
        let c = p();
        assert_eq!(volume_growth_rate(&c, 7.0), 0.6931);
        let rn = c.with_kv_mode(KvMode::RTimesN);
        assert_eq!(volume_growth_rate(&rn, 0.0), 0.0);
        assert_eq!(volume_growth_rate(&rn, 1.0), 0.6931);
    }

    #[test]
    fn rounding_rule() {
        assert_eq!(round_to_grid(20.5 * 0.03, 0.03).index, 21);
        assert_eq!(round_to_grid(0.0, 0.03).index, 0);
        assert_eq!(round_to_grid(20.49 * 0.03, 0.03).index, 20);
    }

    #[test]
    fn drift_examples() {
        let c = p();
        let g = discrete_drift(0.0, 0.25, 0.0, &c, 0.03);
        assert!((g.value - 0.6931 * 0.63).abs() < 1e-12);
        assert_eq!(g.minus, 0.0);
        let z = 21.0 * 0.03;
        assert_eq!(discrete_drift(z, 0.25, 0.0, &c, 0.03).value, 0.0);
        let g = discrete_drift(41.0 * 0.03, 1e3, 0.0, &c, 0.03);
        assert!((g.value + 0.6931 * 1.23).abs() < 1e-12);
        assert_eq!(g.plus, 0.0);
        assert!((g.minus - 0.852513).abs() < 1e-6);
    }

    #[test]
    fn ahl_derivative_at_threshold() {
        let c = p();
        assert!((motility_ahl_derivative(0.25, &c) + 7.5).abs() < 1e-12);
        let far = 0.25 + 20.0 / 30.0;
        assert!(motility_ahl_derivative(far, &c).abs() < 1e-10);
        let steeper = ModelParams { mu: 60.0, ..c };
        assert!((motility_ahl_derivative(0.25, &steeper) + 15.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn level_is_monotone(a in -10.0f64..10.0, b in -10.0f64..10.0) {
            let c = p();
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(chez_level(lo, &c) >= chez_level(hi, &c));
        }

        #[test]
        fn ahl_derivative_matches_differences(h in 0.0f64..0.5, power in proptest::bool::ANY) {
            let mut c = p();
            if power { c.profile = DiffusionProfile::Power30; }
            let f = |h: f64| motility(chez_level(h, &c), &c).unwrap();
            let eps = 1e-6;
            let fd = (f(h + eps) - f(h - eps)) / (2.0 * eps);
            let an = motility_ahl_derivative(h, &c);
            // away from saturation only
            prop_assume!(an.abs() > 1e-3);
            prop_assert!((fd - an).abs() <= 1e-5 * an.abs(), "fd {} an {}", fd, an);
        }

        #[test]
        fn drift_split_is_exact(z in 0.0f64..1.23, h in -1.0f64..2.0, n in 0.0f64..2.0) {
            let c = p().with_kv_mode(KvMode::RTimesN);
            let g = discrete_drift(z, h, n, &c, 0.03);
            prop_assert_eq!(g.plus * g.minus, 0.0);
            prop_assert_eq!(g.plus - g.minus, g.value);
            prop_assert!(g.plus >= 0.0 && g.minus >= 0.0);
        }

        #[test]
        fn snapping_error_is_at_most_half_cell(l in 0.0f64..1.23, dz in 0.001f64..0.1) {
            let s = round_to_grid(l, dz);
            prop_assert!((s.level - l).abs() <= 0.5 * dz * (1.0 + 1e-12));
        }
    }
}
