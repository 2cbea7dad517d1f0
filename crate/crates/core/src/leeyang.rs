//! Lee-Yang zeros of exact partition polynomials: certified simultaneous
//! root finding and the product and power-sum identities.


use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::enumeration::PartitionPolynomial;
use crate::error::{invalid, Error, Result};
use crate::series::SeriesCoeffs;

/// Complex number in binary fixed point: value = (re + i·im) / 2^bits.
#[derive(Clone, Debug, PartialEq)]
struct Fixed {
    re: BigInt,
    im: BigInt,
}

#[derive(Clone, Copy, Debug)]
struct Precision {
    bits: u32,
}

impl Precision {
    fn zero(&self) -> Fixed {
        Fixed { re: BigInt::zero(), im: BigInt::zero() }
    }

    fn int(&self, n: &BigInt) -> Fixed {
        Fixed { re: n << self.bits, im: BigInt::zero() }
    }

    fn fixed_from_f64(&self, re: f64, im: f64) -> Fixed {
        let conv = |x: f64| {
            let head = BigInt::from_f64(x * 2f64.powi(60)).unwrap_or_default();
            if self.bits >= 60 {
                head << (self.bits - 60)
            } else {
                head >> (60 - self.bits)
            }
        };
        Fixed { re: conv(re), im: conv(im) }
    }

    fn rescale(&self, x: &Fixed, to: Precision) -> Fixed {
        let f = |v: &BigInt| {
            if to.bits >= self.bits {
                v << (to.bits - self.bits)
            } else {
                v >> (self.bits - to.bits)
            }
        };
        Fixed { re: f(&x.re), im: f(&x.im) }
    }

    fn add(&self, a: &Fixed, b: &Fixed) -> Fixed {
        Fixed { re: &a.re + &b.re, im: &a.im + &b.im }
    }

    fn sub(&self, a: &Fixed, b: &Fixed) -> Fixed {
        Fixed { re: &a.re - &b.re, im: &a.im - &b.im }
    }

    fn mul(&self, a: &Fixed, b: &Fixed) -> Fixed {
        Fixed {
            re: (&a.re * &b.re - &a.im * &b.im) >> self.bits,
            im: (&a.re * &b.im + &a.im * &b.re) >> self.bits,
        }
    }

    fn div(&self, a: &Fixed, b: &Fixed) -> Option<Fixed> {
        let den = &b.re * &b.re + &b.im * &b.im;
        if den.is_zero() {
            return None;
        }
        let re = ((&a.re * &b.re + &a.im * &b.im) << self.bits) / &den;
        let im = ((&a.im * &b.re - &a.re * &b.im) << self.bits) / &den;
        Some(Fixed { re, im })
    }

    fn real(&self, v: &BigInt) -> f64 {
        BigRational::new(v.clone(), BigInt::one() << self.bits).to_f64().unwrap_or(f64::NAN)
    }

    fn abs(&self, a: &Fixed) -> f64 {
        self.real(&a.re).hypot(self.real(&a.im))
    }

    fn pair(&self, a: &Fixed) -> (f64, f64) {
        (self.real(&a.re), self.real(&a.im))
    }

    /// `(p(z), p'(z))` by Horner.
    fn eval(&self, coeffs: &[BigInt], z: &Fixed) -> (Fixed, Fixed) {
        let mut p = self.zero();
        let mut dp = self.zero();
        for c in coeffs.iter().rev() {
            dp = self.add(&self.mul(&dp, z), &p);
            p = self.add(&self.mul(&p, z), &self.int(c));
        }
        (p, dp)
    }
}

/// One certified root.
#[derive(Clone, Debug, Serialize)]
pub struct Root {
    pub re: f64,
    pub im: f64,
    pub modulus: f64,
    /// |Ξ(ξ)| at the reported center.
    pub residual: f64,
    /// Inclusion radius: the disk of this radius around the center meets a
    /// true root, counted per connected cluster of disks.
    pub radius: f64,
}

/// Roots whose inclusion disks overlap, reported with total multiplicity.
#[derive(Clone, Debug, Serialize)]
pub struct Cluster {
    pub members: Vec<usize>,
    pub multiplicity: usize,
}

#[derive(Clone, Debug)]
pub struct ZeroSet {
    pub roots: Vec<Root>,
    pub clusters: Vec<Cluster>,
    pub has_multiplicity: bool,
    pub region: String,
    pub volume: usize,
    pub coefficients: Vec<BigUint>,
    pub bits: u32,
    centers: Vec<Fixed>,
}

/// Iteration budget per precision level.
const MAX_ITERATIONS: usize = 400;
/// Precision ceiling for adaptive doubling.
const MAX_BITS: u32 = 8192;

/// Finds all zeros of `p` to `digits` significant digits by Aberth iteration,
/// doubling the working precision until every inclusion disk is small enough.
pub fn find_zeros(p: &PartitionPolynomial, digits: u32) -> Result<ZeroSet> {
    let mut zs = find_polynomial_zeros(p.coefficients(), digits)?;
    zs.region = p.region().to_string();
    zs.volume = p.volume();
    Ok(zs)
}

/// As [`find_zeros`] for a bare coefficient list `a_0 + a_1 z + …`.
pub fn find_polynomial_zeros(coeffs: &[BigUint], digits: u32) -> Result<ZeroSet> {
    let mut coeffs = coeffs.to_vec();
    while coeffs.last().map(|c| c.is_zero()).unwrap_or(false) {
        coeffs.pop();
    }
    let n = coeffs.len().saturating_sub(1);
    if n == 0 {
        return invalid("zeros: polynomial degree must be at least 1");
    }
    if coeffs[0].is_zero() {
        return invalid("zeros: constant coefficient must be nonzero");
    }
    let ints: Vec<BigInt> = coeffs.iter().map(|c| BigInt::from(c.clone())).collect();
    let target = 10f64.powi(-(digits as i32));
    let mut bits = ((digits as f64 * std::f64::consts::LOG2_10).ceil() as u32 + 64).max(128);
    let mut prec = Precision { bits };
    let mut z = initial_guesses(&ints, prec);
    loop {
        let converged = aberth(&ints, &mut z, prec, target);
        symmetrize(&mut z, prec);
        let (roots, clusters) = certify(&ints, &z, prec);
        let ok = converged
            && clusters.iter().all(|c| {
                c.members.iter().all(|&i| roots[i].radius * c.multiplicity as f64 <= target * roots[i].modulus)
            });
        if ok {
            let has_multiplicity = clusters.iter().any(|c| c.multiplicity > 1);
            return Ok(ZeroSet {
                roots,
                clusters,
                has_multiplicity,
                region: String::new(),
                volume: 0,
                coefficients: coeffs,
                bits,
                centers: z,
            });
        }
        if bits >= MAX_BITS {
            return Err(Error::NonConvergence {
                iterations: MAX_ITERATIONS,
                precision: bits,
                partial: roots.iter().map(|r| (r.re, r.im)).collect(),
            });
        }
        let next = Precision { bits: bits * 2 };
        z = z.iter().map(|x| prec.rescale(x, next)).collect();
        bits *= 2;
        prec = next;
    }
}

fn initial_guesses(c: &[BigInt], prec: Precision) -> Vec<Fixed> {
    let n = c.len() - 1;
    let ratio = |a: &BigInt, b: &BigInt| BigRational::new(a.abs(), b.abs()).to_f64().unwrap_or(1.0);
    let r = ratio(&c[0], &c[n]).powf(1.0 / n as f64).max(1e-12);
    (0..n)
        .map(|k| {
            let angle = 2.0 * std::f64::consts::PI * k as f64 / n as f64 + 0.4;
            let rk = r * (1.0 + 0.05 * ((k % 3) as f64));
            prec.fixed_from_f64(rk * angle.cos(), rk * angle.sin())
        })
        .collect()
}

/// Runs Aberth steps; true once every correction is below the target.
fn aberth(c: &[BigInt], z: &mut [Fixed], prec: Precision, target: f64) -> bool {
    let tiny = 2f64.powi(-(prec.bits as i32) + 16);
    for _ in 0..MAX_ITERATIONS {
        let snapshot = z.to_vec();
        let steps: Vec<(Fixed, f64)> = (0..snapshot.len())
            .into_par_iter()
            .map(|i| {
                let zi = &snapshot[i];
                let (p, dp) = prec.eval(c, zi);
                let Some(w) = prec.div(&p, &dp) else {
                    return (prec.fixed_from_f64(tiny, tiny), f64::INFINITY);
                };
                let mut s = prec.zero();
                for (j, zj) in snapshot.iter().enumerate() {
                    if j != i {
                        if let Some(inv) = prec.div(&prec.int(&BigInt::one()), &prec.sub(zi, zj)) {
                            s = prec.add(&s, &inv);
                        }
                    }
                }
                let den = prec.sub(&prec.int(&BigInt::one()), &prec.mul(&w, &s));
                let step = prec.div(&w, &den).unwrap_or(w);
                let size = prec.abs(&step) / prec.abs(zi).max(tiny);
                (step, size)
            })
            .collect();
        let mut worst: f64 = 0.0;
        for (zi, (step, size)) in z.iter_mut().zip(steps) {
            *zi = prec.sub(zi, &step);
            worst = worst.max(size);
        }
        if worst <= target * 1e-6 || worst <= tiny {
            return true;
        }
    }
    false
}

/// Snaps near-real roots onto the axis and averages conjugate partners.
fn symmetrize(z: &mut [Fixed], prec: Precision) {
    let n = z.len();
    let mut done = vec![false; n];
    for i in 0..n {
        if done[i] {
            continue;
        }
        done[i] = true;
        let (re, im) = prec.pair(&z[i]);
        let scale = re.hypot(im);
        if im.abs() <= 1e-6 * scale {
            z[i].im = BigInt::zero();
            continue;
        }
        let partner = (0..n)
            .filter(|&j| !done[j])
            .min_by(|&a, &b| {
                let da = { let (x, y) = prec.pair(&z[a]); (x - re).hypot(y + im) };
                let db = { let (x, y) = prec.pair(&z[b]); (x - re).hypot(y + im) };
                da.total_cmp(&db)
            });
        if let Some(j) = partner {
            let (x, y) = prec.pair(&z[j]);
            if (x - re).hypot(y + im) <= 1e-6 * scale {
                let re_avg: BigInt = (&z[i].re + &z[j].re) >> 1;
                let im_avg: BigInt = (&z[i].im - &z[j].im) >> 1;
                z[i] = Fixed { re: re_avg.clone(), im: im_avg.clone() };
                z[j] = Fixed { re: re_avg, im: -im_avg };
                done[j] = true;
            }
        }
    }
}

/// Inclusion disks `n·|W_i|` with `W_i = p(z_i) / (a_n Π_{j≠i}(z_i − z_j))`;
/// their union holds every root and each connected component of `m` disks
/// holds exactly `m` roots.
fn certify(c: &[BigInt], z: &[Fixed], prec: Precision) -> (Vec<Root>, Vec<Cluster>) {
    let n = z.len();
    let lead = prec.int(&c[n]);
    let roots: Vec<Root> = (0..n)
        .into_par_iter()
        .map(|i| {
            let (p, _) = prec.eval(c, &z[i]);
            let mut den = lead.clone();
            for (j, zj) in z.iter().enumerate() {
                if j != i {
                    den = prec.mul(&den, &prec.sub(&z[i], zj));
                }
            }
            let residual = prec.abs(&p);
            let w = prec.div(&p, &den).map(|w| prec.abs(&w)).unwrap_or(f64::INFINITY);
            let arithmetic = 2f64.powi(-(prec.bits as i32) + 8) * (1.0 + prec.abs(&z[i]));
            let (re, im) = prec.pair(&z[i]);
            Root {
                re,
                im,
                modulus: re.hypot(im),
                residual,
                radius: (n as f64 * w + arithmetic) * (1.0 + 1e-12),
            }
        })
        .collect();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while parent[r] != r {
            r = parent[r];
        }
        parent[i] = r;
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            let d = (roots[i].re - roots[j].re).hypot(roots[i].im - roots[j].im);
            if d <= roots[i].radius + roots[j].radius {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    let clusters = groups
        .into_values()
        .map(|members| Cluster { multiplicity: members.len(), members })
        .collect();
    (roots, clusters)
}

impl ZeroSet {
    pub fn degree(&self) -> usize {
        self.roots.len()
    }

    fn prec(&self) -> Precision {
        Precision { bits: self.bits }
    }

    /// Σ ξ_i^k for `k = 1..=order`, in working precision.
    pub fn power_sums(&self, order: usize) -> Vec<(f64, f64)> {
        let prec = self.prec();
        let mut pw: Vec<Fixed> = self.centers.clone();
        let mut out = Vec::with_capacity(order);
        for _ in 1..=order {
            let s = pw.iter().fold(prec.zero(), |acc, x| prec.add(&acc, x));
            out.push(prec.pair(&s));
            pw = pw.iter().zip(&self.centers).map(|(a, b)| prec.mul(a, b)).collect();
        }
        out
    }

    /// Π(−ξ_i) in working precision.
    pub fn negated_product(&self) -> (f64, f64) {
        let prec = self.prec();
        let mut acc = prec.int(&BigInt::one());
        for x in &self.centers {
            acc = prec.mul(&acc, &Fixed { re: -&x.re, im: -&x.im });
        }
        prec.pair(&acc)
    }

    /// Relative gap between the exact value Ξ(z) and `Z(N)·Π(z − ξ_i)` at a
    /// real rational point.
    pub fn reconstruction_error(&self, z: &BigRational) -> f64 {
        let exact: BigRational = self
            .coefficients
            .iter()
            .rev()
            .fold(BigRational::zero(), |acc, c| acc * z + BigRational::from_integer(BigInt::from(c.clone())));
        let prec = self.prec();
        let zf = z.to_f64().unwrap_or(f64::NAN);
        let point = prec.fixed_from_f64(zf, 0.0);
        let lead = BigInt::from(self.coefficients.last().expect("degree ≥ 1").clone());
        let mut acc = prec.int(&lead);
        for x in &self.centers {
            acc = prec.mul(&acc, &prec.sub(&point, x));
        }
        // The point itself is rounded to f64, so compare against Ξ at that point.
        let zq = BigRational::from_f64(zf).unwrap_or_else(|| z.clone());
        let at_point: BigRational = self
            .coefficients
            .iter()
            .rev()
            .fold(BigRational::zero(), |acc, c| acc * &zq + BigRational::from_integer(BigInt::from(c.clone())));
        let e = at_point.to_f64().unwrap_or(f64::NAN);
        let (re, im) = prec.pair(&acc);
        let scale = exact.abs().to_f64().unwrap_or(f64::NAN).max(f64::MIN_POSITIVE);
        (re - e).hypot(im) / scale
    }

    /// Columns `re,im,modulus,residual,radius`, one row per root.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["re", "im", "modulus", "residual", "radius"])
            .map_err(|e| Error::Validation(e.to_string()))?;
        for r in &self.roots {
            w.write_record([r.re, r.im, r.modulus, r.residual, r.radius].map(|x| format!("{x:e}")))
                .map_err(|e| Error::Validation(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Validation(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("ASCII output"))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Annulus {
    pub r_min: f64,
    pub r_min_error: f64,
    pub r_max: f64,
    pub r_max_error: f64,
}

pub fn annulus_summary(zeros: &ZeroSet) -> Result<Annulus> {
    let (min, max) = zeros
        .roots
        .iter()
        .fold((None::<&Root>, None::<&Root>), |(lo, hi), r| {
            let lo = match lo { Some(l) if l.modulus <= r.modulus => Some(l), _ => Some(r) };
            let hi = match hi { Some(h) if h.modulus >= r.modulus => Some(h), _ => Some(r) };
            (lo, hi)
        });
    let (Some(min), Some(max)) = (min, max) else {
        return invalid("annulus of an empty zero set");
    };
    Ok(Annulus {
        r_min: min.modulus,
        r_min_error: min.radius,
        r_max: max.modulus,
        r_max_error: max.radius,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct PowerSumCheck {
    pub k: usize,
    pub c_k: f64,
    pub from_zeros: f64,
    pub relative_residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityReport {
    pub region: String,
    pub product: (f64, f64),
    pub product_expected: f64,
    pub product_relative_residual: f64,
    pub power_sums: Vec<PowerSumCheck>,
    pub tolerance: f64,
    pub passed: bool,
}

impl IdentityReport {
    pub fn max_residual(&self) -> f64 {
        self.power_sums
            .iter()
            .map(|p| p.relative_residual)
            .fold(self.product_relative_residual, f64::max)
    }
}

/// Checks `Π(−ξ_i) = 1/Q(0)` and `c_k = −(1/(k|Λ|)) Σ ξ_i^k` for every order
/// present in `c`. Residuals are relative to the magnitude of the terms
/// entering each sum.
pub fn verify_zero_identities(zeros: &ZeroSet, q0: &BigUint, c: &SeriesCoeffs, tolerance: f64) -> Result<IdentityReport> {
    if c.volume != zeros.volume || c.region != zeros.region {
        return invalid(format!(
            "identity check: zeros of '{}' against coefficients of '{}'",
            zeros.region, c.region
        ));
    }
    if q0.is_zero() {
        return invalid("identity check: Q(0) must be positive");
    }
    let expected = BigRational::new(BigInt::one(), BigInt::from(q0.clone())).to_f64().unwrap_or(f64::NAN);
    let product = zeros.negated_product();
    let product_relative_residual = (product.0 - expected).hypot(product.1) / expected.abs();
    let sums = zeros.power_sums(c.order());
    let moduli: Vec<f64> = zeros.roots.iter().map(|r| r.modulus).collect();
    let volume = c.volume as f64;
    let power_sums = sums
        .iter()
        .enumerate()
        .map(|(i, &(re, im))| {
            let k = i + 1;
            let scale = moduli.iter().map(|m| m.powi(k as i32)).sum::<f64>() / (k as f64 * volume);
            let c_k = c.values[i].to_f64().unwrap_or(f64::NAN);
            let from_zeros = -re / (k as f64 * volume);
            let gap = (c_k - from_zeros).hypot(im / (k as f64 * volume));
            PowerSumCheck {
                k,
                c_k,
                from_zeros,
                relative_residual: gap / scale.max(c_k.abs()),
            }
        })
        .collect::<Vec<_>>();
    let mut report = IdentityReport {
        region: zeros.region.clone(),
        product,
        product_expected: expected,
        product_relative_residual,
        power_sums,
        tolerance,
        passed: false,
    };
    report.passed = report.max_residual() < tolerance;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(c: &[u32]) -> Vec<BigUint> {
        c.iter().map(|&x| BigUint::from(x)).collect()
    }

    #[test]
    fn linear_root() {
        let z = find_polynomial_zeros(&poly(&[1, 1]), 30).unwrap();
        assert_eq!(z.degree(), 1);
        assert!((z.roots[0].re + 1.0).abs() < 1e-25 && z.roots[0].im == 0.0);
    }

    #[test]
    fn ring_four_quadratic() {
        let z = find_polynomial_zeros(&poly(&[1, 4, 2]), 30).unwrap();
        let mut re: Vec<f64> = z.roots.iter().map(|r| r.re).collect();
        re.sort_by(f64::total_cmp);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((re[0] + 1.0 + s).abs() < 1e-14 && (re[1] + 1.0 - s).abs() < 1e-14);
        assert!(z.roots.iter().all(|r| r.im == 0.0));
        let a = annulus_summary(&z).unwrap();
        assert!((a.r_min - (1.0 - s)).abs() < 1e-14 && (a.r_max - (1.0 + s)).abs() < 1e-14);
        let (p, pi) = z.negated_product();
        assert!((p - 0.5).abs() < 1e-15 && pi == 0.0);
    }

    #[test]
    fn complex_pairs_are_conjugate() {
        // 1 + z² + z⁴ has roots at the primitive 3rd and 6th roots of unity.
        let z = find_polynomial_zeros(&poly(&[1, 0, 1, 0, 1]), 30).unwrap();
        for r in &z.roots {
            assert!((r.modulus - 1.0).abs() < 1e-14);
            assert!(z.roots.iter().any(|s| (s.re - r.re).abs() < 1e-20 && (s.im + r.im).abs() < 1e-20));
        }
    }

    #[test]
    fn double_root_is_clustered() {
        // (1 + z)² (2 + z)
        let z = find_polynomial_zeros(&poly(&[2, 5, 4, 1]), 20).unwrap();
        assert!(z.has_multiplicity);
        assert!(z.clusters.iter().any(|c| c.multiplicity == 2));
    }
}
