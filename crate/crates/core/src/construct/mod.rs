//! Constructive lower-bound paths: the multi-scale cylinder construction for
//! critical heavy tails and the up/down-skeleton tree for the BRW.

mod brw;
mod heavy;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

pub use brw::{build_brw_path, BrwConstruction, SkeletonChoice, SkeletonSide};
pub use heavy::{
    build_heavy_path, cylinder_hit_stats, verify_apriori, AprioriReport, LevelRect, LevelSets,
    RectCheck,
};

/// Where a parameter set came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParamSource {
    PaperAsymptotic,
    DeskOverride,
}

/// Desk-scale values replacing the asymptotic choices. `lambda` and `rho`
/// keep their asymptotic values when omitted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamOverride {
    pub s: u32,
    /// Ignored by the BRW, whose level count follows from `s`.
    #[serde(rename = "M", default)]
    pub levels: u32,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub rho: Option<f64>,
}

impl ParamOverride {
    pub fn new(s: u32, levels: u32) -> Self {
        Self {
            s,
            levels,
            lambda: None,
            rho: None,
        }
    }
}

/// Parameters of the multi-scale construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiScaleParams {
    pub n: u64,
    /// Separation between consecutive scales.
    pub s: u32,
    /// Number of levels.
    #[serde(rename = "M")]
    pub levels: u32,
    pub lambda: f64,
    pub rho: f64,
    pub source: ParamSource,
}

impl MultiScaleParams {
    /// Cylinder width fraction `ρ / λ²`.
    pub fn r(&self) -> f64 {
        self.rho / (self.lambda * self.lambda)
    }

    /// With no levels the construction returns only the two corners.
    pub fn is_degenerate(&self) -> bool {
        self.levels == 0
    }
}

/// `s = round(100 log log n)`, `M = ⌊log n / (10 s)⌋`, `λ = (log n)^{1/4}`,
/// `ρ = (log log n)^{1/2}`, all logarithms base 2, unless overridden.
pub fn heavy_params(n: u64, over: Option<ParamOverride>) -> Result<MultiScaleParams> {
    if n < 4 {
        return Err(domain(format!("the construction needs n ≥ 4, got {n}")));
    }
    let log_n = (n as f64).log2();
    let loglog = log_n.log2();
    let lambda_asym = log_n.powf(0.25);
    let rho_asym = loglog.sqrt();
    let params = match over {
        None => {
            let s = (100.0 * loglog).round() as u32;
            MultiScaleParams {
                n,
                s,
                levels: (log_n / (10.0 * s as f64)).floor() as u32,
                lambda: lambda_asym,
                rho: rho_asym,
                source: ParamSource::PaperAsymptotic,
            }
        }
        Some(o) => {
            if o.s == 0 {
                return Err(Error::Infeasible("s must be at least 1".into()));
            }
            let top = o.levels as f64 * o.s as f64;
            if top > log_n - 2.0 {
                return Err(Error::Infeasible(format!(
                    "M·s = {top} exceeds log2 n − 2 = {}",
                    log_n - 2.0
                )));
            }
            MultiScaleParams {
                n,
                s: o.s,
                levels: o.levels,
                lambda: o.lambda.unwrap_or(lambda_asym),
                rho: o.rho.unwrap_or(rho_asym),
                source: ParamSource::DeskOverride,
            }
        }
    };
    if !(params.lambda > 0.0 && params.rho > 0.0) {
        return Err(Error::Infeasible("lambda and rho must be positive".into()));
    }
    let r = params.r();
    if !(r < 1.0) && !params.is_degenerate() {
        return Err(Error::Infeasible(format!(
            "cylinder width ρ/λ² = {r} must be below 1"
        )));
    }
    Ok(params)
}

/// Model whose growth shape [`reference_bound`] evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundModel {
    Heavy,
    Brw,
    Logcorrected,
}

/// Growth shape `n (log n)^p / log log n` with unit constant:
/// `p = (d+2)/(2(d+1))` for critical heavy tails, `1/2` for the BRW and
/// `(d+2)/(2(d+1)) − β/(d+1)` for log-corrected tails.
pub fn reference_bound(n: u64, model: BoundModel, beta: Option<f64>, d: u32) -> Result<f64> {
    if n < 4 {
        return Err(domain(format!("reference bound needs n ≥ 4, got {n}")));
    }
    if d == 0 {
        return Err(domain("codimension d must be at least 1"));
    }
    let d = d as f64;
    let heavy = (d + 2.0) / (2.0 * (d + 1.0));
    let p = match model {
        BoundModel::Heavy => heavy,
        BoundModel::Brw => 0.5,
        BoundModel::Logcorrected => {
            let beta = beta.ok_or_else(|| domain("log-corrected bound needs beta"))?;
            heavy - beta / (d + 1.0)
        }
    };
    let log_n = (n as f64).log2();
    Ok(n as f64 * log_n.powf(p) / log_n.log2())
}
