//! Closed-form eigenvalue families of the linearized kinetic and limit
//! models around their homogeneous steady states.

use num_complex::Complex64;

use crate::error::{PbdmError, Result};
use crate::model::{chez_level, motility, motility_ahl_derivative};
use crate::params::ModelParams;

/// Real parts within this band of zero are treated as zero.
pub const CLASSIFY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Case {
    /// `k_V = r`, cells present, no nutrient.
    A1,
    /// `k_V = r`, no cells, nutrient `n`.
    A2,
    /// `k_V = r n`, cells present, no nutrient.
    B1,
    /// `k_V = r n`, no cells, nutrient `n`.
    B2,
    /// Limit model at `(0, 0, n)`.
    AdmN,
    /// Limit model at `(varrho, h, 0)` with `h` away from the threshold.
    AdmHOffThreshold,
    /// Limit model at `(varrho, h0, 0)`.
    AdmHThreshold,
}

impl Case {
    pub const ALL: [Case; 7] = [
        Case::A1,
        Case::A2,
        Case::B1,
        Case::B2,
        Case::AdmN,
        Case::AdmHOffThreshold,
        Case::AdmHThreshold,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Case::A1 => "A1",
            Case::A2 => "A2",
            Case::B1 => "B1",
            Case::B2 => "B2",
            Case::AdmN => "ADM_n",
            Case::AdmHOffThreshold => "ADM_h_offthreshold",
            Case::AdmHThreshold => "ADM_h_threshold",
        }
    }

    pub fn parse(s: &str) -> Result<Case> {
        Case::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| PbdmError::Config(format!("unknown stability case {s:?}")))
    }

    fn group(self) -> usize {
        match self {
            Case::A1 => 1,
            Case::A2 => 2,
            Case::B1 => 3,
            Case::B2 => 4,
            Case::AdmN => 5,
            Case::AdmHOffThreshold => 6,
            Case::AdmHThreshold => 7,
        }
    }

    /// Whether some family depends on the CheZ level `z`.
    pub fn depends_on_z(self) -> bool {
        matches!(self, Case::A1 | Case::A2 | Case::B1 | Case::B2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    Stable,
    Unstable,
    Marginal,
}

impl Stability {
    pub fn as_str(self) -> &'static str {
        match self {
            Stability::Stable => "stable",
            Stability::Unstable => "unstable",
            Stability::Marginal => "marginal",
        }
    }
}

/// Homogeneous steady state `(varrho, h, n)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyState {
    pub varrho: f64,
    pub h: f64,
    pub n: f64,
}

impl SteadyState {
    /// Cells with the balancing AHL level and no nutrient.
    pub fn colonized(varrho: f64, p: &ModelParams) -> Self {
        Self {
            varrho,
            h: p.alpha * varrho / p.beta,
            n: 0.0,
        }
    }

    pub fn empty(n: f64) -> Self {
        Self { varrho: 0.0, h: 0.0, n }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenQuery {
    pub case: Case,
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub steady: SteadyState,
    /// CheZ level for the z-dependent families.
    pub z: f64,
}

impl EigenQuery {
    pub fn wavenumber_sq(&self) -> f64 {
        self.k1 * self.k1 + self.k2 * self.k2
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Eigen {
    /// `l{case}_{i}` for the `i`-th family of the case.
    pub family: String,
    pub value: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenReport {
    pub eigenvalues: Vec<Eigen>,
    pub class: Stability,
}

impl EigenReport {
    fn new(case: Case, values: Vec<Complex64>) -> Self {
        let class = classify(values.iter().map(|v| v.re));
        let eigenvalues = values
            .into_iter()
            .enumerate()
            .map(|(i, value)| Eigen {
                family: format!("l{}_{}", case.group(), i + 1),
                value,
            })
            .collect();
        Self { eigenvalues, class }
    }

    pub fn max_re(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|e| e.value.re)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Unstable if any real part exceeds the tolerance, stable if all are
/// below minus the tolerance, marginal otherwise.
pub fn classify(re: impl IntoIterator<Item = f64>) -> Stability {
    let mut all_negative = true;
    for r in re {
        if r > CLASSIFY_TOL {
            return Stability::Unstable;
        }
        if r >= -CLASSIFY_TOL {
            all_negative = false;
        }
    }
    if all_negative {
        Stability::Stable
    } else {
        Stability::Marginal
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

fn check_steady(case: Case, s: &SteadyState, p: &ModelParams) -> Result<()> {
    let balanced = close(s.h, p.alpha * s.varrho / p.beta);
    let ok = match case {
        Case::A1 | Case::B1 | Case::AdmHOffThreshold => s.n == 0.0 && balanced,
        Case::A2 | Case::B2 | Case::AdmN => s.varrho == 0.0 && s.h == 0.0,
        Case::AdmHThreshold => s.n == 0.0 && balanced && close(s.h, p.h0),
    };
    if ok {
        Ok(())
    } else {
        Err(PbdmError::Precondition(format!(
            "steady state (varrho={}, h={}, n={}) does not fit case {}",
            s.varrho,
            s.h,
            s.n,
            case.name()
        )))
    }
}

pub fn eigenvalues_case(q: &EigenQuery, p: &ModelParams) -> Result<EigenReport> {
    let k = q.wavenumber_sq();
    if !(k.is_finite() && q.k3.is_finite()) {
        return Err(PbdmError::Domain("non-finite wavenumber".into()));
    }
    check_steady(q.case, &q.steady, p)?;
    let s = q.steady;
    let real = |v: f64| Complex64::new(v, 0.0);
    let d_steady = motility(chez_level(s.h, p), p)?;
    let ahl = -k * p.dh - p.beta;
    let values = match q.case {
        Case::A1 | Case::A2 | Case::B1 | Case::B2 => {
            let d_z = motility(q.z, p)?;
            let tilde_g = chez_level(s.h, p) - q.z;
            let kr = p.kappa * p.r;
            let internal = Complex64::new(-k * d_z + kr, -q.k3 * kr * tilde_g);
            match q.case {
                Case::A1 => vec![
                    real(-k * d_steady),
                    internal,
                    real(ahl),
                    real(-k * p.dn - p.gamma * s.varrho),
                ],
                Case::B1 => vec![
                    real(-k * d_steady),
                    real(-k * d_z),
                    real(ahl),
                    real(-k * p.dn - p.gamma * s.varrho),
                ],
                _ => {
                    let rn = p.r * s.n;
                    vec![real(-k * d_steady + rn), internal + rn, real(ahl), real(-k * p.dn)]
                }
            }
        }
        Case::AdmN => vec![real(-k * d_steady + p.r * s.n), real(ahl), real(-k * p.dn)],
        Case::AdmHOffThreshold => vec![real(-k * d_steady), real(ahl), real(-k * p.dn - p.gamma * s.varrho)],
        Case::AdmHThreshold => {
            let t = adm_threshold_quadratic(k, p, s.varrho)?;
            vec![t.roots[0], t.roots[1], real(t.third)]
        }
    };
    Ok(EigenReport::new(q.case, values))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdRoots {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub roots: [Complex64; 2],
    /// `-K Dn - gamma varrho`.
    pub third: f64,
    pub class: Stability,
}

/// Roots of `lambda^2 + (a+b) lambda + ab + c` at the AHL threshold.
pub fn adm_threshold_quadratic(k: f64, p: &ModelParams, varrho_bar: f64) -> Result<ThresholdRoots> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(PbdmError::Domain(format!("K = {k} must be positive")));
    }
    let a = k * motility(chez_level(p.h0, p), p)?;
    let b = k * p.dh + p.beta;
    let c = p.alpha * k * motility_ahl_derivative(p.h0, p) * varrho_bar;
    let roots = quadratic_roots(a + b, a * b + c);
    let third = -k * p.dn - p.gamma * varrho_bar;
    let class = classify([roots[0].re, roots[1].re, third]);
    Ok(ThresholdRoots {
        a,
        b,
        c,
        roots,
        third,
        class,
    })
}

/// Roots of `x^2 + s x + q`, larger real part first, computed without
/// cancellation.
fn quadratic_roots(s: f64, q: f64) -> [Complex64; 2] {
    let disc = s * s - 4.0 * q;
    if disc >= 0.0 {
        let sq = disc.sqrt();
        let w = -0.5 * (s + s.signum() * sq);
        let (x1, x2) = if w == 0.0 { (0.0, 0.0) } else { (w, q / w) };
        let (hi, lo) = if x1 >= x2 { (x1, x2) } else { (x2, x1) };
        [Complex64::new(hi, 0.0), Complex64::new(lo, 0.0)]
    } else {
        let im = 0.5 * (-disc).sqrt();
        [Complex64::new(-0.5 * s, im), Complex64::new(-0.5 * s, -im)]
    }
}

/// Where the z-dependent families are evaluated in a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ZSample {
    At(f64),
    /// Worst case over the nodes `k dz`, `k = 0..=Zw/dz`.
    WorstOnGrid {
        dz: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub k: f64,
    pub z: f64,
    pub report: EigenReport,
}

impl SweepRow {
    pub fn max_re(&self) -> f64 {
        self.report.max_re()
    }
}

/// Evaluates a case over a list of squared wavenumbers `K = k1^2`.
pub fn sweep_stability(
    case: Case,
    ks: &[f64],
    p: &ModelParams,
    steady: SteadyState,
    k3: f64,
    zs: ZSample,
) -> Result<Vec<SweepRow>> {
    let levels: Vec<f64> = match zs {
        ZSample::At(z) => vec![z],
        ZSample::WorstOnGrid { dz } if case.depends_on_z() => {
            if !(dz > 0.0) {
                return Err(PbdmError::Domain(format!("dz = {dz} must be positive")));
            }
            let nz = (p.zw / dz).round() as usize;
            (0..=nz).map(|k| (k as f64 * dz).min(p.zw)).collect()
        }
        ZSample::WorstOnGrid { .. } => vec![0.0],
    };
    ks.iter()
        .map(|&k| {
            if !(k >= 0.0 && k.is_finite()) {
                return Err(PbdmError::Domain(format!("K = {k} must be finite and non-negative")));
            }
            let mut best: Option<SweepRow> = None;
            for &z in &levels {
                let q = EigenQuery {
                    case,
                    k1: k.sqrt(),
                    k2: 0.0,
                    k3,
                    steady,
                    z,
                };
                let report = eigenvalues_case(&q, p)?;
                if best.as_ref().is_none_or(|b| report.max_re() > b.max_re()) {
                    best = Some(SweepRow { k, z, report });
                }
            }
            Ok(best.expect("at least one level"))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn query(case: Case, k: f64, steady: SteadyState) -> EigenQuery {
        EigenQuery {
            case,
            k1: k.sqrt(),
            k2: 0.0,
            k3: 1.0,
            steady,
            z: 0.0,
        }
    }

    #[test]
    fn a1_small_k_is_unstable() {
        let p = ModelParams::biological().with_kappa(8.0);
        let s = SteadyState::colonized(1.0, &p);
        let r = eigenvalues_case(&query(Case::A1, 0.0, s), &p).unwrap();
        assert!((r.eigenvalues[1].value.re - 8.0 * 0.6931).abs() < 1e-12);
        assert_eq!(r.eigenvalues[0].value.re, 0.0);
        assert_eq!(r.class, Stability::Unstable);
        assert_eq!(r.eigenvalues[1].family, "l1_2");
    }

    #[test]
    fn b1_is_stable_for_positive_k() {
        let p = ModelParams::biological();
        let s = SteadyState::colonized(1.0, &p);
        let r = eigenvalues_case(&query(Case::B1, 0.0, s), &p).unwrap();
        assert!((r.eigenvalues[2].value.re + 1.8).abs() < 1e-15);
        assert_eq!(r.class, Stability::Marginal);
        let rows = sweep_stability(
            Case::B1,
            &[0.1, 1.0, 10.0],
            &p,
            s,
            1.0,
            ZSample::WorstOnGrid { dz: 0.03 },
        )
        .unwrap();
        assert!(rows.iter().all(|r| r.report.class == Stability::Stable));
    }

    #[test]
    fn a2_instability_band() {
        let p = ModelParams::biological();
        let s = SteadyState::empty(0.5);
        let edge = p.r * 0.5 / 0.51;
        let r = eigenvalues_case(&query(Case::A2, 0.99 * edge, s), &p).unwrap();
        assert!(r.eigenvalues[0].value.re > 0.0);
        let r = eigenvalues_case(&query(Case::A2, 1.01 * edge, s), &p).unwrap();
        assert!(r.eigenvalues[0].value.re < 0.0);
    }

    #[test]
    fn b2_unstable_at_small_k() {
        let p = ModelParams::biological().with_kappa(8.0);
        let r = eigenvalues_case(&query(Case::B2, 0.01, SteadyState::empty(0.5)), &p).unwrap();
        assert_eq!(r.class, Stability::Unstable);
    }

    #[test]
    fn adm_families() {
        let p = ModelParams::biological();
        let r = eigenvalues_case(&query(Case::AdmN, 0.01, SteadyState::empty(0.5)), &p).unwrap();
        assert_eq!(r.class, Stability::Unstable);
        let p = ModelParams::stability_study();
        let s = SteadyState::colonized(1.0, &p);
        let r = eigenvalues_case(&query(Case::AdmHOffThreshold, 1.0, s), &p).unwrap();
        assert_eq!(r.class, Stability::Stable);
    }

    #[test]
    fn mismatched_steady_state_is_rejected() {
        let p = ModelParams::biological();
        let bad = SteadyState {
            varrho: 1.0,
            h: 0.0,
            n: 0.0,
        };
        assert!(matches!(
            eigenvalues_case(&query(Case::A1, 1.0, bad), &p),
            Err(PbdmError::Precondition(_))
        ));
        assert!(eigenvalues_case(&query(Case::A2, 1.0, SteadyState::colonized(1.0, &p)), &p).is_err());
    }

    #[test]
    fn threshold_quadratic_example() {
        let p = ModelParams::stability_study();
        let t = adm_threshold_quadratic(1.0, &p, 5.0).unwrap();
        assert!((t.a - 0.26).abs() < 1e-12);
        assert!((t.b - 1.9).abs() < 1e-12);
        assert!((t.c + 67.5).abs() < 1e-9);
        let s = 2.16f64;
        let disc = (s * s + 4.0 * (67.5 - 0.494)).sqrt();
        assert!((t.roots[0].re - (-s + disc) / 2.0).abs() < 1e-10);
        assert!((t.roots[1].re - (-s - disc) / 2.0).abs() < 1e-10);
        assert!((t.roots[0].re - 7.177).abs() < 1e-3 && (t.roots[1].re + 9.337).abs() < 1e-3);
        assert_eq!(t.class, Stability::Unstable);
        assert!(adm_threshold_quadratic(0.0, &p, 5.0).is_err());
    }

    #[test]
    fn threshold_factors_when_coupling_vanishes() {
        let p = ModelParams::stability_study();
        let t = adm_threshold_quadratic(2.0, &p, 0.0).unwrap();
        let mut got = [t.roots[0].re, t.roots[1].re];
        got.sort_by(f64::total_cmp);
        let mut want = [-t.a, -t.b];
        want.sort_by(f64::total_cmp);
        assert!((got[0] - want[0]).abs() < 1e-12 && (got[1] - want[1]).abs() < 1e-12);
    }

    #[test]
    fn empty_sweep() {
        let p = ModelParams::biological();
        let rows = sweep_stability(
            Case::B1,
            &[],
            &p,
            SteadyState::colonized(1.0, &p),
            1.0,
            ZSample::At(0.0),
        )
        .unwrap();
        assert!(rows.is_empty());
    }

    #[test]
    fn case_names_round_trip() {
        for c in Case::ALL {
            assert_eq!(Case::parse(c.name()).unwrap(), c);
        }
        assert!(Case::parse("C3").is_err());
    }

    proptest! {
        #[test]
        fn vieta_and_residual(k in 1e-3f64..100.0, varrho in 0.0f64..20.0) {
            let p = ModelParams::stability_study();
            let t = adm_threshold_quadratic(k, &p, varrho).unwrap();
            let (s, q) = (t.a + t.b, t.a * t.b + t.c);
            let sum = t.roots[0] + t.roots[1];
            let prod = t.roots[0] * t.roots[1];
            prop_assert!((sum.re + s).abs() <= 1e-10 * s.abs().max(1.0));
            prop_assert!((prod.re - q).abs() <= 1e-10 * q.abs().max(1.0));
            for r in t.roots {
                let res = r * r + r * s + q;
                let scale = (r.norm() * r.norm()).max(q.abs()).max(1.0);
                prop_assert!(res.norm() <= 1e-10 * scale);
            }
        }

        #[test]
        fn k3_never_changes_classification(k in 0.0f64..10.0, k3 in -50.0f64..50.0, z in 0.0f64..1.23) {
            let p = ModelParams::biological().with_kappa(8.0);
            for (case, s) in [
                (Case::A1, SteadyState::colonized(1.0, &p)),
                (Case::A2, SteadyState::empty(0.5)),
                (Case::B2, SteadyState::empty(0.5)),
            ] {
                let mut q = query(case, k, s);
                q.z = z;
                let base = eigenvalues_case(&q, &p).unwrap();
                q.k3 = k3;
                prop_assert_eq!(eigenvalues_case(&q, &p).unwrap().class, base.class);
            }
        }
    }
}
