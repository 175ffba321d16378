//! Sturm-sequence eigenvalues, twisted-factorisation eigenvectors and gap scans.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{Flag, GapEstimate, Method};
use crate::logdomain::{log_sum_exp, SignedLog};
use crate::model::{build_hamiltonian, AdiabaticPoint, CostModel, TridiagonalOperator};
use crate::precision::{check_precision, consts, Ext, Scalar, NATIVE_BITS};
use crate::search::golden_section;

/// Ceiling for automatic precision doubling.
pub const ADAPTIVE_PRECISION_CAP: usize = 1024;

/// An eigenvalue with its normalised eigenvector in sign/log-magnitude form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Vec<SignedLog>,
    pub precision_bits: usize,
}

impl EigenPair {
    /// Components as doubles; entries below the double range become zero.
    pub fn dense(&self) -> Vec<f64> {
        self.vector.iter().map(|a| a.to_f64()).collect()
    }
}

struct Sturm<T> {
    diag: Vec<T>,
    off2: Vec<T>,
    pivmin: T,
}

impl<T: Scalar> Sturm<T> {
    /// Number of eigenvalues strictly below `lambda`.
    fn count(&self, lambda: &T) -> usize {
        let mut neg = 0;
        let mut q = self.diag[0].sub(lambda);
        if q.is_zero() {
            q = self.pivmin.clone();
        }
        if q.is_negative() {
            neg += 1;
        }
        for i in 1..self.diag.len() {
            q = self.diag[i].sub(lambda).sub(&self.off2[i - 1].div(&q));
            if q.is_zero() {
                q = self.pivmin.clone();
            }
            if q.is_negative() {
                neg += 1;
            }
        }
        neg
    }

    /// Shrinks `[lo, hi]` around eigenvalue `index` until its width is at most `width`.
    fn bisect(&self, index: usize, mut lo: T, mut hi: T, width: &T) -> (T, T) {
        loop {
            if !width.less_than(&hi.sub(&lo)) {
                break;
            }
            let mid = lo.add(&hi).half();
            if mid.sub(&lo).is_zero() || hi.sub(&mid).is_zero() {
                break;
            }
            if self.count(&mid) > index {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        (lo, hi)
    }
}

fn native_sturm(op: &TridiagonalOperator) -> Sturm<f64> {
    let off2: Vec<f64> = op.offdiag.iter().map(|e| e * e).collect();
    let emax = off2.iter().copied().fold(1.0, f64::max);
    Sturm { diag: op.diag.clone(), off2, pivmin: -f64::MIN_POSITIVE * emax }
}

/// Number of eigenvalues of `op` strictly below `lambda`.
pub fn sturm_count(op: &TridiagonalOperator, lambda: f64) -> usize {
    native_sturm(op).count(&lambda)
}

fn native_lowest(op: &TridiagonalOperator, first: usize, last: usize) -> Vec<(f64, f64)> {
    let sturm = native_sturm(op);
    let (glo, ghi) = op.gershgorin();
    let r = op.radius();
    let width = r * 2f64.powi(-(NATIVE_BITS as i32));
    let pad = 1e-12 * r;
    (first..=last).map(|i| sturm.bisect(i, glo - pad, ghi + pad, &width)).collect()
}

/// The operator rebuilt in software floats, either from exact model data or from an f64 operator.
struct ExtOperator {
    sturm: Sturm<Ext>,
    native: TridiagonalOperator,
    bits: usize,
}

impl ExtOperator {
    fn from_native(op: &TridiagonalOperator, bits: usize) -> Self {
        let diag = op.diag.iter().map(|&d| Ext::from_f64(d, bits)).collect();
        let off2 = op.offdiag.iter().map(|&e| Ext::from_f64(e, bits).mul(&Ext::from_f64(e, bits))).collect();
        Self { sturm: Sturm { diag, off2, pivmin: Ext::from_f64(-1e-300, bits) }, native: op.clone(), bits }
    }

    fn from_model(cost: &CostModel, point: &AdiabaticPoint, bits: usize) -> Self {
        let n = cost.n();
        let s = Ext::from_f64(point.s, bits);
        let t = Ext::from_f64(1.0, bits).sub(&s);
        let norm2 = s.mul(&s).add(&t.mul(&t));
        let norm = norm2.sqrt();
        let cos = s.div(&norm);
        let sin2 = t.mul(&t).div(&norm2);
        let driver = Ext::from_f64(cost.driver(), bits);
        let drive2 = sin2.mul(&driver).mul(&driver).mul(&Ext::from_f64(0.25, bits));
        let half_n = Ext::from_f64(n as f64 / 2.0, bits);
        let diag: Vec<Ext> = match cost {
            CostModel::Spike(p) => {
                let mut cc = consts();
                let height = Ext::from_u64(n as u64, bits).powf(p.alpha, &mut cc).mul(&Ext::from_f64(0.75, bits));
                (0..=n)
                    .map(|k| {
                        let mut h = Ext::from_u64(k as u64, bits);
                        if p.in_window(k) {
                            h = h.add(&height);
                        }
                        cos.mul(&h.sub(&half_n))
                    })
                    .collect()
            }
            CostModel::Cubic { table, .. } | CostModel::Custom { table, .. } => {
                table.iter().map(|&h| cos.mul(&Ext::from_f64(h, bits).sub(&half_n))).collect()
            }
        };
        let off2 = (1..=n).map(|k| drive2.mul(&Ext::from_u64((k * (n + 1 - k)) as u64, bits))).collect();
        Self {
            sturm: Sturm { diag, off2, pivmin: Ext::from_f64(-1e-300, bits) },
            native: build_hamiltonian(cost, point),
            bits,
        }
    }

    /// Brackets for eigenvalues `first..=last`, seeded from the double-precision solve.
    fn brackets(&self, first: usize, last: usize) -> Vec<(Ext, Ext)> {
        let r = self.native.radius();
        let width = Ext::from_f64(r, self.bits).mul(&Ext::from_f64(2f64.powi(-(self.bits as i32)), self.bits));
        let (glo, ghi) = self.native.gershgorin();
        let pad = 1e-12 * r;
        native_lowest(&self.native, first, last)
            .into_iter()
            .enumerate()
            .map(|(offset, (lo, hi))| {
                let index = first + offset;
                let slack = 1e-8 * r;
                let mut a = Ext::from_f64(lo - slack, self.bits);
                let mut b = Ext::from_f64(hi + slack, self.bits);
                if !(self.sturm.count(&a) <= index && self.sturm.count(&b) > index) {
                    a = Ext::from_f64(glo - pad, self.bits);
                    b = Ext::from_f64(ghi + pad, self.bits);
                }
                self.sturm.bisect(index, a, b, &width)
            })
            .collect()
    }
}

/// The `count` smallest eigenvalues in ascending order.
pub fn lowest_eigenvalues(op: &TridiagonalOperator, count: usize, precision_bits: usize) -> Result<Vec<f64>> {
    check_precision(precision_bits)?;
    if count == 0 || count > op.dim() {
        return Err(Error::InvalidParameter(format!("count = {count} outside 1..={}", op.dim())));
    }
    if precision_bits <= NATIVE_BITS {
        return Ok(native_lowest(op, 0, count - 1).into_iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect());
    }
    let ext = ExtOperator::from_native(op, precision_bits);
    Ok(ext.brackets(0, count - 1).into_iter().map(|(lo, hi)| lo.add(&hi).half().to_f64()).collect())
}

/// Eigenvector of `op` for an isolated eigenvalue, by twisted factorisation.
///
/// Forward and backward pivots of `op - lambda` meet at the index where the twist is smallest;
/// the vector is then propagated outwards as sums of logarithms, so tiny tails never underflow.
pub fn eigenvector(op: &TridiagonalOperator, eigenvalue: f64) -> Result<EigenPair> {
    let m = op.dim();
    let r = op.radius();
    let delta = 64.0 * f64::EPSILON * r;
    let below = sturm_count(op, eigenvalue - delta);
    let above = sturm_count(op, eigenvalue + delta);
    if above > below + 1 {
        return Err(Error::NearDegenerate { value: eigenvalue, width: 2.0 * delta });
    }
    if m == 1 {
        return Ok(EigenPair { value: eigenvalue, vector: vec![SignedLog::new(1, 0.0)], precision_bits: NATIVE_BITS });
    }
    let tiny = f64::MIN_POSITIVE / f64::EPSILON;
    let guard = |x: f64| if x.abs() < tiny { if x < 0.0 { -tiny } else { tiny } } else { x };
    let shifted: Vec<f64> = op.diag.iter().map(|d| d - eigenvalue).collect();
    let mut fwd = vec![0.0; m];
    fwd[0] = guard(shifted[0]);
    for i in 1..m {
        fwd[i] = guard(shifted[i] - op.offdiag[i - 1] * op.offdiag[i - 1] / fwd[i - 1]);
    }
    let mut bwd = vec![0.0; m];
    bwd[m - 1] = guard(shifted[m - 1]);
    for i in (0..m - 1).rev() {
        bwd[i] = guard(shifted[i] - op.offdiag[i] * op.offdiag[i] / bwd[i + 1]);
    }
    let twist = (0..m)
        .min_by(|&a, &b| {
            let ga = (fwd[a] + bwd[a] - shifted[a]).abs();
            let gb = (fwd[b] + bwd[b] - shifted[b]).abs();
            ga.total_cmp(&gb)
        })
        .expect("nonempty");
    let mut vector = vec![SignedLog::ZERO; m];
    vector[twist] = SignedLog::new(1, 0.0);
    for i in (0..twist).rev() {
        let ratio = -op.offdiag[i] / fwd[i];
        vector[i] = vector[i + 1].mul(SignedLog::from_f64(ratio));
    }
    for i in twist + 1..m {
        let ratio = -op.offdiag[i - 1] / bwd[i];
        vector[i] = vector[i - 1].mul(SignedLog::from_f64(ratio));
    }
    let doubled: Vec<f64> = vector.iter().map(|a| 2.0 * a.log_mag).collect();
    let shift = -0.5 * log_sum_exp(&doubled);
    let first_sign = vector.iter().find(|a| !a.is_zero()).map_or(1, |a| a.sign);
    let vector = vector.into_iter().map(|a| SignedLog::new(a.sign * first_sign, a.log_mag + shift)).collect();
    Ok(EigenPair { value: eigenvalue, vector, precision_bits: NATIVE_BITS })
}

/// `E_level - E_(level-1)` of `H(s)` and the precision that resolved it.
fn spacing_at(cost: &CostModel, point: &AdiabaticPoint, level: usize, bits: usize) -> (f64, f64) {
    if bits <= NATIVE_BITS {
        let op = build_hamiltonian(cost, point);
        let b = native_lowest(&op, level - 1, level);
        let lower = 0.5 * (b[0].0 + b[0].1);
        let upper = 0.5 * (b[1].0 + b[1].1);
        return (upper - lower, op.radius());
    }
    let ext = ExtOperator::from_model(cost, point, bits);
    let b = ext.brackets(level - 1, level);
    let lower = b[0].0.add(&b[0].1).half();
    let upper = b[1].0.add(&b[1].1).half();
    (upper.sub(&lower).to_f64(), ext.native.radius())
}

/// Spacing `E_level - E_(level-1)` of `H(s)`, doubling the precision until it is resolved.
pub fn level_gap(cost: &CostModel, s: f64, level: usize, precision_bits: usize) -> Result<GapEstimate> {
    check_precision(precision_bits)?;
    let n = cost.n();
    if level == 0 || level > n {
        return Err(Error::InvalidParameter(format!("level = {level} outside 1..={n}")));
    }
    let point = AdiabaticPoint::new(s)?;
    let mut bits = precision_bits;
    loop {
        let (g, radius) = spacing_at(cost, &point, level, bits);
        let resolution = radius * 2f64.powi(4 - bits as i32);
        let est = GapEstimate::new(g.max(0.0), Method::Exact, s, n, cost.spike_params().copied(), bits);
        if g >= resolution {
            return Ok(est);
        }
        let next = if bits <= NATIVE_BITS { 2 * NATIVE_BITS } else { 2 * bits };
        if next > ADAPTIVE_PRECISION_CAP.max(precision_bits) {
            return Ok(est.with_flag(Flag::Unresolved));
        }
        bits = next;
    }
}

/// Exact gap `E_1 - E_0` of `H(s)`.
pub fn gap(cost: &CostModel, s: f64, precision_bits: usize) -> Result<GapEstimate> {
    level_gap(cost, s, 1, precision_bits)
}

/// Coarse scan over `grid` followed by golden-section refinement to width `refine_tol`.
pub fn min_gap_scan(cost: &CostModel, grid: &[f64], refine_tol: f64) -> Result<(f64, GapEstimate)> {
    min_spacing_scan(cost, 1, grid, refine_tol)
}

/// Like [`min_gap_scan`] for the spacing `E_level - E_(level-1)`.
pub fn min_spacing_scan(cost: &CostModel, level: usize, grid: &[f64], refine_tol: f64) -> Result<(f64, GapEstimate)> {
    if grid.len() < 3 {
        return Err(Error::InsufficientPoints { needed: 3, got: grid.len() });
    }
    let eval = |s: f64| level_gap(cost, s, level, NATIVE_BITS).map(|g| g.value);
    let values = grid.iter().map(|&s| eval(s)).collect::<Result<Vec<f64>>>()?;
    let (best, &gmin) = values.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).expect("nonempty");
    let gmax = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if gmax - gmin <= 1e-9 * gmax.abs().max(1e-300) {
        return Ok((grid[best], level_gap(cost, grid[best], level, NATIVE_BITS)?.with_flag(Flag::Flat)));
    }
    let edge = best == 0 || best + 1 == grid.len();
    let a = grid[best.saturating_sub(1)];
    let b = grid[(best + 1).min(grid.len() - 1)];
    // Probe the bracket for a single dip before trusting golden section.
    let probes: Vec<f64> = (0..=10).map(|i| a + (b - a) * i as f64 / 10.0).collect();
    let pv = probes.iter().map(|&s| eval(s)).collect::<Result<Vec<f64>>>()?;
    let (pbest, _) = pv.iter().enumerate().min_by(|x, y| x.1.total_cmp(y.1)).expect("nonempty");
    let slack = 1e-12 * gmax;
    let unimodal = pv[..=pbest].windows(2).all(|w| w[1] <= w[0] + slack)
        && pv[pbest..].windows(2).all(|w| w[1] >= w[0] - slack);
    if !unimodal {
        let s = probes[pbest];
        return Ok((s, level_gap(cost, s, level, NATIVE_BITS)?.with_flag(Flag::Multimodal)));
    }
    let (s_min, _) = golden_section(|s| eval(s).unwrap_or(f64::INFINITY), a, b, refine_tol);
    let mut est = level_gap(cost, s_min, level, NATIVE_BITS)?;
    if edge {
        est = est.with_flag(Flag::BracketEdge);
    }
    Ok((s_min, est))
}
