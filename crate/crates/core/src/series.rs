//! Exact log-series algebra: Mayer coefficients `b_k`, high-fugacity
//! coefficients `c_k` and finite-size stabilization diagnostics.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::enumeration::{canonical_counts_with, top_defect_counts, Budget};
use crate::error::{invalid, Error, Result};
use crate::lattice::ModelSpec;
use crate::ratio::{rational_string, ratio_of};
use crate::region::Region;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesKind {
    /// Low-fugacity coefficients `b_k`.
    MayerB,
    /// High-fugacity coefficients `c_k`.
    GauntFisherC,
}

/// Exact coefficients `values[k − 1]` for `k = 1..=K`.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesCoeffs {
    pub kind: SeriesKind,
    pub values: Vec<BigRational>,
    pub volume: usize,
    pub region: String,
    pub tau: Option<usize>,
}

impl SeriesCoeffs {
    /// Coefficient of order `k ≥ 1`.
    pub fn get(&self, k: usize) -> &BigRational {
        &self.values[k - 1]
    }

    pub fn order(&self) -> usize {
        self.values.len()
    }
}

fn int(n: &BigUint) -> BigRational {
    BigRational::from_integer(BigInt::from(n.clone()))
}

/// `[ℓ_1..ℓ_K]` with `log Σ a_k t^k = Σ ℓ_k t^k`, by the Newton recursion
/// `k ℓ_k = k a_k − Σ_{j<k} j ℓ_j a_{k−j}`.
pub fn log_series(a: &[BigRational], order: usize) -> Result<Vec<BigRational>> {
    if a.first().map(|a0| !a0.is_one()).unwrap_or(true) {
        return invalid("log series: constant coefficient must be 1");
    }
    let coef = |k: usize| a.get(k).cloned().unwrap_or_else(BigRational::zero);
    let mut l: Vec<BigRational> = Vec::with_capacity(order);
    for k in 1..=order {
        let kk = BigRational::from_integer(BigInt::from(k));
        let mut acc = &kk * coef(k);
        for j in 1..k {
            let jj = BigRational::from_integer(BigInt::from(j));
            acc -= jj * &l[j - 1] * coef(k - j);
        }
        l.push(acc / kk);
    }
    Ok(l)
}

/// Inverse of [`log_series`]: `[1, a_1..a_K]` with `exp Σ ℓ_k t^k = Σ a_k t^k`.
pub fn exp_series(l: &[BigRational], order: usize) -> Vec<BigRational> {
    let mut a = vec![BigRational::one()];
    for k in 1..=order {
        let mut acc = BigRational::zero();
        for j in 1..=k {
            if let Some(lj) = l.get(j - 1) {
                acc += BigRational::from_integer(BigInt::from(j)) * lj * &a[k - j];
            }
        }
        a.push(acc / BigRational::from_integer(BigInt::from(k)));
    }
    a
}

/// `Σ_{n≥1} (−1)^{n+1}/n Σ_{k_1+…+k_n=k} a_{k_1}⋯a_{k_n}` for `k = 1..=K`,
/// the explicit multinomial form of the logarithm (`a[0]` is ignored).
pub fn composition_log(a: &[BigRational], order: usize) -> Vec<BigRational> {
    let coef = |k: usize| a.get(k).cloned().unwrap_or_else(BigRational::zero);
    // prod[k]: sum over compositions of k into the current number of parts.
    let mut prod: Vec<BigRational> = (0..=order).map(|k| if k == 0 { BigRational::zero() } else { coef(k) }).collect();
    let mut out = vec![BigRational::zero(); order + 1];
    for n in 1..=order {
        let w = BigRational::new(BigInt::from(if n % 2 == 1 { 1 } else { -1 }), BigInt::from(n));
        for k in 1..=order {
            if !prod[k].is_zero() {
                out[k] += &w * &prod[k];
            }
        }
        let mut next = vec![BigRational::zero(); order + 1];
        for (k, slot) in next.iter_mut().enumerate() {
            for j in 1..k {
                if !prod[k - j].is_zero() {
                    *slot += coef(j) * &prod[k - j];
                }
            }
        }
        prod = next;
    }
    out.remove(0);
    out
}

fn two_pipelines(a: &[BigRational], order: usize, what: &str) -> Result<Vec<BigRational>> {
    let explicit = composition_log(a, order);
    let mut normalized = a.to_vec();
    normalized[0] = BigRational::one();
    let newton = log_series(&normalized, order)?;
    if explicit != newton {
        return Err(Error::PropertyViolation(format!(
            "{what}: multinomial and Newton log-series disagree"
        )));
    }
    Ok(explicit)
}

/// `b_k(Λ) = [z^k] log Ξ_Λ(z) / |Λ|` for `k = 1..=K`.
pub fn mayer_coefficients(z: &[BigUint], volume: usize, order: usize, region: &str) -> Result<SeriesCoeffs> {
    if z.first().map(|z0| !z0.is_one()).unwrap_or(true) {
        return invalid("mayer coefficients: Z(0) must be 1");
    }
    if volume == 0 {
        return invalid("mayer coefficients: empty region");
    }
    let a: Vec<BigRational> = z.iter().map(int).collect();
    let v = BigRational::from_integer(BigInt::from(volume));
    let values = two_pipelines(&a, order, "mayer coefficients")?.into_iter().map(|x| x / &v).collect();
    Ok(SeriesCoeffs {
        kind: SeriesKind::MayerB,
        values,
        volume,
        region: region.to_string(),
        tau: None,
    })
}

/// `c_k(Λ) = (1/|Λ|) Σ_n (−1)^{n+1}/(n τ^n) Σ Q(k_1)⋯Q(k_n)` for `k = 1..=K`.
pub fn gaunt_fisher_coefficients(q: &[BigUint], tau: usize, volume: usize, order: usize, region: &str) -> Result<SeriesCoeffs> {
    if q.first().map(|q0| q0.is_zero()).unwrap_or(true) {
        return invalid("gaunt-fisher coefficients: Q(0) must be positive");
    }
    if tau == 0 || volume == 0 {
        return invalid("gaunt-fisher coefficients: τ and |Λ| must be positive");
    }
    let t = BigRational::from_integer(BigInt::from(tau));
    let a: Vec<BigRational> = q.iter().map(|x| int(x) / &t).collect();
    let v = BigRational::from_integer(BigInt::from(volume));
    let values = two_pipelines(&a, order, "gaunt-fisher coefficients")?
        .into_iter()
        .map(|x| x / &v)
        .collect();
    Ok(SeriesCoeffs {
        kind: SeriesKind::GauntFisherC,
        values,
        volume,
        region: region.to_string(),
        tau: Some(tau),
    })
}

/// Coefficients of one kind for one region, computed by enumeration.
pub fn region_series(
    model: &ModelSpec,
    region: &Region,
    kind: SeriesKind,
    order: usize,
    tau: usize,
    budget: &Budget,
) -> Result<SeriesCoeffs> {
    match kind {
        SeriesKind::MayerB => {
            let p = canonical_counts_with(model, region, budget)?;
            if p.n_max() < order {
                return invalid(format!("order {order} exceeds N_max = {} of {}", p.n_max(), region.describe()));
            }
            mayer_coefficients(p.coefficients(), region.volume(), order, &region.describe())
        }
        SeriesKind::GauntFisherC => {
            let (nmax, q) = top_defect_counts(model, region, order, budget)?;
            if nmax < order {
                return invalid(format!("order {order} exceeds N_max = {nmax} of {}", region.describe()));
            }
            gaunt_fisher_coefficients(&q, tau, region.volume(), order, &region.describe())
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    /// Identical on the largest regions from `first_volume` on.
    Stable { value: BigRational, first_volume: usize },
    /// Still changing; `exponent` is the log-log slope of |c_k| against |Λ|.
    Diverging { exponent: Option<f64> },
}

#[derive(Clone, Debug)]
pub struct StabilizationReport {
    pub kind: SeriesKind,
    pub series: Vec<SeriesCoeffs>,
    pub verdicts: Vec<Verdict>,
}

impl StabilizationReport {
    pub fn to_json(&self) -> serde_json::Value {
        let verdicts: Vec<serde_json::Value> = self
            .verdicts
            .iter()
            .enumerate()
            .map(|(i, v)| match v {
                Verdict::Stable { value, first_volume } => serde_json::json!({
                    "k": i + 1, "verdict": "stable", "value": rational_string(value), "first_stable_volume": first_volume,
                }),
                Verdict::Diverging { exponent } => serde_json::json!({
                    "k": i + 1, "verdict": "diverging", "growth_exponent": exponent,
                }),
            })
            .collect();
        serde_json::json!({
            "kind": self.kind,
            "regions": self.series.iter().map(|s| serde_json::json!({
                "region": s.region,
                "volume": s.volume,
                "tau": s.tau,
                "coefficients": s.values.iter().map(rational_string).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
            "stabilization": verdicts,
        })
    }
}

/// Per-order verdicts for a family of regions of strictly increasing volume.
pub fn stabilization_verdicts(series: &[SeriesCoeffs]) -> Result<Vec<Verdict>> {
    if series.len() < 3 {
        return invalid("stabilization needs at least 3 regions");
    }
    if series.windows(2).any(|w| w[0].volume >= w[1].volume) {
        return invalid("stabilization regions must have strictly increasing volume");
    }
    let order = series.iter().map(|s| s.order()).min().unwrap_or(0);
    let n = series.len();
    let mut out = Vec::with_capacity(order);
    for k in 1..=order {
        let last = series[n - 1].get(k);
        if series[n - 2].get(k) == last {
            let mut first = n - 2;
            while first > 0 && series[first - 1].get(k) == last {
                first -= 1;
            }
            out.push(Verdict::Stable {
                value: last.clone(),
                first_volume: series[first].volume,
            });
        } else {
            let pts: Vec<(f64, f64)> = series
                .iter()
                .filter_map(|s| {
                    let v = s.get(k).abs().to_f64()?;
                    (v > 0.0).then(|| ((s.volume as f64).ln(), v.ln()))
                })
                .collect();
            out.push(Verdict::Diverging {
                exponent: least_squares_slope(&pts),
            });
        }
    }
    Ok(out)
}

fn least_squares_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Coefficients over a growing region family with per-order verdicts.
pub fn stabilization_report(
    model: &ModelSpec,
    regions: &[Region],
    kind: SeriesKind,
    order: usize,
    tau: usize,
    budget: &Budget,
) -> Result<StabilizationReport> {
    if regions.len() < 3 {
        return invalid("stabilization needs at least 3 regions");
    }
    let series: Vec<SeriesCoeffs> = regions
        .par_iter()
        .map(|r| region_series(model, r, kind, order, tau, budget))
        .collect::<Result<_>>()?;
    let verdicts = stabilization_verdicts(&series)?;
    Ok(StabilizationReport { kind, series, verdicts })
}

/// Exact ρ(y) per site on a torus: `(z/|Λ|) d/dz log Ξ` at `z = 1/y`.
pub fn torus_density(p: &[BigUint], volume: usize, y: &BigRational) -> Result<BigRational> {
    if y.is_zero() {
        return invalid("inverse fugacity must be nonzero");
    }
    let z = y.recip();
    let mut xi = BigRational::zero();
    let mut dxi = BigRational::zero();
    let mut zk = BigRational::one();
    for (k, c) in p.iter().enumerate() {
        let c = int(c);
        xi += &c * &zk;
        dxi += c * BigRational::from_integer(BigInt::from(k)) * &zk;
        zk *= &z;
    }
    if xi.is_zero() {
        return Err(Error::Pole);
    }
    Ok(dxi / (xi * ratio_of(volume as i64, 1)))
}
