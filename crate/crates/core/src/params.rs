use crate::error::{PbdmError, Result};

/// How the cell volume growth rate `k_V` is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KvMode {
    /// `k_V = r`
    ConstantR,
    /// `k_V = r n(x, t)`
    RTimesN,
}

/// Motility profile `D(z)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DiffusionProfile {
    /// `D(z) = z / (2 Zw) + 0.01`
    Linear,
    /// `D(z) = 0.5 (z / Zw)^30 + 0.01`
    Power30,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Cell growth rate.
    pub r: f64,
    /// Response speed of intracellular CheZ to AHL.
    pub kappa: f64,
    pub dh: f64,
    pub dn: f64,
    /// AHL production.
    pub alpha: f64,
    /// AHL degradation.
    pub beta: f64,
    /// Nutrient consumption.
    pub gamma: f64,
    /// AHL threshold of CheZ suppression.
    pub h0: f64,
    /// Sensitivity of `L(h)` around `h0`.
    pub mu: f64,
    /// CheZ level of wild-type cells; the internal-state maximum.
    pub zw: f64,
    pub kv_mode: KvMode,
    pub profile: DiffusionProfile,
}

impl ModelParams {
    /// The experiment-matched set: `h0 = 0.25, r = 0.6931, D_h = 0.9,
    /// beta = alpha = 2 D_h, D_n = 2r, gamma = 3r`, `mu = 30`, linear `D(z)`.
    pub fn biological() -> Self {
        let r = 0.6931;
        let dh = 0.9;
        Self {
            r,
            kappa: 1.0,
            dh,
            dn: 2.0 * r,
            alpha: 2.0 * dh,
            beta: 2.0 * dh,
            gamma: 3.0 * r,
            h0: 0.25,
            mu: 30.0,
            zw: 1.23,
            kv_mode: KvMode::ConstantR,
            profile: DiffusionProfile::Linear,
        }
    }

    /// The stability-study set: `h0 = 5, r = 0.6931, D_h = 0.1,
    /// alpha = beta = 1.8, D_n = 2r, gamma = 3r`, `mu = 30`, linear `D(z)`.
    pub fn stability_study() -> Self {
        let r = 0.6931;
        Self {
            r,
            kappa: 1.0,
            dh: 0.1,
            dn: 2.0 * r,
            alpha: 1.8,
            beta: 1.8,
            gamma: 3.0 * r,
            h0: 5.0,
            mu: 30.0,
            zw: 1.23,
            kv_mode: KvMode::ConstantR,
            profile: DiffusionProfile::Linear,
        }
    }

    /// The pattern-formation set: the biological rates with the steep
    /// `mu = 1000` switch and the `Power30` motility profile.
    pub fn patterns() -> Self {
        Self {
            mu: 1000.0,
            profile: DiffusionProfile::Power30,
            ..Self::biological()
        }
    }

    pub fn with_kappa(self, kappa: f64) -> Self {
        Self { kappa, ..self }
    }

    pub fn with_kv_mode(self, kv_mode: KvMode) -> Self {
        Self { kv_mode, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("r", self.r),
            ("kappa", self.kappa),
            ("Dh", self.dh),
            ("Dn", self.dn),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("mu", self.mu),
            ("Zw", self.zw),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(PbdmError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !self.h0.is_finite() {
            return Err(PbdmError::Config("h0 must be finite".into()));
        }
        Ok(())
    }

    /// Upper bound of `D(z)` on `[0, Zw]` (both profiles reach it at `Zw`).
    pub fn max_motility(&self) -> f64 {
        0.51
    }
}
