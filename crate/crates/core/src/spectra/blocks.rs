//! Per-block eigenvalue families with tail and partition-function bounds.

use super::SpectralLine;
use crate::error::{Error, Result};
use crate::geometry::{dd, modulus_integers, Block};
use crate::numeric::Dd;
use std::f64::consts::PI;

/// Merge threshold for eigenvalues that are not carried as exact integer keys.
pub(crate) const MERGE_REL: f64 = 1e-29;

/// Closed-form eigenvalue family of one block in one grading.
#[derive(Clone, Debug)]
pub enum Family {
    /// `step·k² + shift`, `k ∈ ℤ`.
    Circle { step: Dd, shift: Dd },
    /// `l(l+1)·inv_r2` for `l ≥ l_min`, multiplicity `factor·(2l+1)`.
    Sphere { inv_r2: Dd, l_min: u64, factor: u64 },
    /// `step·k` for `k ≥ k_min`, multiplicity `mult`.
    Landau { step: Dd, k_min: u64, mult: u64 },
    Lattice(Lattice),
}

/// `scale·[(b·m₁ + σ₁)² + (c·m₂ − a·m₁ + σ₂)²] + delta` over `(m₁, m₂) ∈ ℤ²`.
///
/// With `σ = 0` the bracket is an exact integer key. The dual lattice of
/// `√(A/y)(ℤ + τℤ)`, `τ = (a + ib)/c`, maps onto this form with `scale = 4π²/(A·b·c)`.
#[derive(Clone, Debug)]
pub struct Lattice {
    pub mult: u64,
    pub delta: Dd,
    pub scale: Dd,
    pub a: i128,
    pub b: i128,
    pub c: i128,
    pub sigma: Option<(Dd, Dd)>,
    /// Reduced basis of the dual lattice in the Euclidean k-plane (eigenvalue `4π²|k+s|² + delta`).
    basis: [[f64; 2]; 2],
    covolume: f64,
}

fn binomial2(p: usize) -> u64 {
    [1, 2, 1][p]
}

impl Lattice {
    fn new(block: &Block, mult: u64, delta: Dd, novikov: bool) -> Result<Lattice> {
        let Block::ComplexTorus {
            area,
            modulus,
            novikov_c,
            ..
        } = block
        else {
            unreachable!("lattice families come from tori");
        };
        let (a, b, c) = modulus_integers(modulus)?;
        let area_dd = dd(area);
        let scale = Dd::PI.sqr().mul_f64(4.0) / (area_dd * Dd::from(b as f64) * Dd::from(c as f64));
        let y = Dd::from(b as f64) / Dd::from(c as f64);
        let x = Dd::from(a as f64) / Dd::from(c as f64);
        let s_len = (area_dd / y).sqrt();
        let sigma = if novikov && (!novikov_c.0.is_zero() || !novikov_c.1.is_zero()) {
            // ∂̄ + c̄ on the character of k = u + iv has symbol iπk + c̄ = iπ(k + s), s = (−Im c − i Re c)/π
            let su = -dd(&novikov_c.1) / Dd::PI;
            let sv = -dd(&novikov_c.0) / Dd::PI;
            let bd = Dd::from(b as f64);
            Some((su * s_len * bd, sv * s_len * bd))
        } else {
            None
        };
        let (sl, xf, yf) = (s_len.to_f64(), x.to_f64(), y.to_f64());
        let mut u = [1.0 / sl, -xf / (sl * yf)];
        let mut v = [0.0, 1.0 / (sl * yf)];
        // Lagrange reduction keeps the cell diameter small
        let n2 = |w: [f64; 2]| w[0] * w[0] + w[1] * w[1];
        for _ in 0..200 {
            if n2(u) > n2(v) {
                std::mem::swap(&mut u, &mut v);
            }
            let mu = ((u[0] * v[0] + u[1] * v[1]) / n2(u)).round();
            if mu == 0.0 {
                break;
            }
            v = [v[0] - mu * u[0], v[1] - mu * u[1]];
        }
        Ok(Lattice {
            mult,
            delta,
            scale,
            a,
            b,
            c,
            sigma,
            basis: [u, v],
            covolume: 1.0 / area_dd.to_f64(),
        })
    }

    fn lines(&self, cutoff: Dd) -> Vec<SpectralLine> {
        let budget = cutoff - self.delta;
        if budget.is_sign_negative() {
            return Vec::new();
        }
        let r2 = budget / self.scale;
        let r = r2.to_f64().sqrt() * (1.0 + 1e-12) + 1e-12;
        let (s1, s2) = self.sigma.map_or((0.0, 0.0), |(p, q)| (p.to_f64(), q.to_f64()));
        let (a, b, c) = (self.a as f64, self.b as f64, self.c as f64);
        let lo1 = ((-r - s1) / b).floor() as i64 - 1;
        let hi1 = ((r - s1) / b).ceil() as i64 + 1;
        let mut raw: Vec<(Dd, i128, u64)> = Vec::new();
        for m1 in lo1..=hi1 {
            let u = b * m1 as f64 + s1;
            let rem = r * r - u * u;
            if rem < -1e-9 * (1.0 + r * r) {
                continue;
            }
            let w = rem.max(0.0).sqrt() * (1.0 + 1e-12) + 1e-9;
            let lo2 = ((-w + a * m1 as f64 - s2) / c).floor() as i64 - 1;
            let hi2 = ((w + a * m1 as f64 - s2) / c).ceil() as i64 + 1;
            for m2 in lo2..=hi2 {
                match self.sigma {
                    None => {
                        let p = self.b * m1 as i128;
                        let q = self.c * m2 as i128 - self.a * m1 as i128;
                        let key = p * p + q * q;
                        let lam = self.scale * Dd::from(key) + self.delta;
                        if lam <= cutoff {
                            raw.push((lam, key, self.mult));
                        }
                    }
                    Some((sg1, sg2)) => {
                        let p = Dd::from((self.b * m1 as i128) as f64) + sg1;
                        let q = Dd::from((self.c * m2 as i128 - self.a * m1 as i128) as f64) + sg2;
                        let lam = self.scale * (p.sqr() + q.sqr()) + self.delta;
                        if lam <= cutoff {
                            raw.push((lam, -1, self.mult));
                        }
                    }
                }
            }
        }
        if self.sigma.is_none() {
            raw.sort_by_key(|r| r.1);
            let mut out: Vec<SpectralLine> = Vec::new();
            let mut last_key = -1;
            for (lam, key, m) in raw {
                if key == last_key {
                    out.last_mut().expect("nonempty").multiplicity += m;
                } else {
                    out.push(SpectralLine::new(lam, m));
                    last_key = key;
                }
            }
            out
        } else {
            merge_sorted(raw.into_iter().map(|(l, _, m)| SpectralLine::new(l, m)).collect())
        }
    }

    /// `Σ_{λ ≤ cutoff} mult·e^{−sλ}` in `f64`.
    fn partition_body(&self, s: f64, cutoff: f64) -> f64 {
        let delta = self.delta.to_f64();
        let scale = self.scale.to_f64();
        if cutoff < delta {
            return 0.0;
        }
        let r = ((cutoff - delta) / scale).sqrt() * (1.0 + 1e-12) + 1e-12;
        let (s1, s2) = self.sigma.map_or((0.0, 0.0), |(p, q)| (p.to_f64(), q.to_f64()));
        let (a, b, c) = (self.a as f64, self.b as f64, self.c as f64);
        let lo1 = ((-r - s1) / b).floor() as i64 - 1;
        let hi1 = ((r - s1) / b).ceil() as i64 + 1;
        let mut sum = 0.0;
        for m1 in lo1..=hi1 {
            let u = b * m1 as f64 + s1;
            let rem = r * r - u * u;
            if rem < 0.0 {
                continue;
            }
            let w = rem.sqrt() + 1e-9;
            let lo2 = ((-w + a * m1 as f64 - s2) / c).floor() as i64 - 1;
            let hi2 = ((w + a * m1 as f64 - s2) / c).ceil() as i64 + 1;
            for m2 in lo2..=hi2 {
                let q = c * m2 as f64 - a * m1 as f64 + s2;
                let lam = scale * (u * u + q * q) + delta;
                if lam <= cutoff {
                    sum += (-s * lam).exp();
                }
            }
        }
        sum * self.mult as f64
    }

    /// Largest distance from a lattice point to its centred fundamental cell.
    fn cell_radius(&self) -> f64 {
        let [u, v] = self.basis;
        let p = ((u[0] + v[0]).powi(2) + (u[1] + v[1]).powi(2)).sqrt();
        let q = ((u[0] - v[0]).powi(2) + (u[1] - v[1]).powi(2)).sqrt();
        0.5 * p.max(q) * (1.0 + 1e-9)
    }

    /// Cell-comparison bound on `Σ_{|k+s| > ρ} e^{−c|k+s|²}`, `c = 4π²t`.
    ///
    /// Each omitted point's cell lies outside radius `ρ − d` and `|p| ≥ |x| − d` on it,
    /// so the sum is at most `(1/V)∫_{|x|>ρ−d} e^{−c(|x|−d)²}dx`.
    fn tail(&self, t: f64, cutoff: f64) -> f64 {
        let delta = self.delta.to_f64();
        let c = 4.0 * PI * PI * t;
        let d = self.cell_radius();
        let pref = self.mult as f64 * (-t * delta).exp() * 2.0 * PI / self.covolume;
        let rho = if cutoff > delta {
            ((cutoff - delta) / (4.0 * PI * PI)).sqrt()
        } else {
            -1.0
        };
        let s0 = rho - 2.0 * d;
        let bound = if s0 > 0.0 {
            let g = (-c * s0 * s0).exp();
            let erfc_part = (PI.sqrt() / (2.0 * c.sqrt())).min(1.0 / (2.0 * c * s0));
            g / (2.0 * c) + d * g * erfc_part
        } else {
            d * d / 2.0 + 1.0 / (2.0 * c) + d * PI.sqrt() / (2.0 * c.sqrt())
        };
        pref * bound * (1.0 + 1e-9)
    }
}

/// Sorts by eigenvalue and merges lines closer than [`MERGE_REL`].
pub(crate) fn merge_sorted(mut lines: Vec<SpectralLine>) -> Vec<SpectralLine> {
    lines.sort_by(|x, y| x.eigenvalue.partial_cmp(&y.eigenvalue).unwrap_or(std::cmp::Ordering::Equal));
    let mut out: Vec<SpectralLine> = Vec::with_capacity(lines.len());
    for l in lines {
        if let Some(last) = out.last_mut() {
            let diff = (l.eigenvalue - last.eigenvalue).abs().to_f64();
            if diff <= MERGE_REL * l.eigenvalue.abs().to_f64() {
                last.multiplicity += l.multiplicity;
                continue;
            }
        }
        out.push(l);
    }
    out
}

impl Family {
    /// Family of `block` in de Rham degree `p`, or `None` if the grading is empty.
    pub fn de_rham(block: &Block, p: usize) -> Result<Option<Family>> {
        if p > block.real_dim() {
            return Ok(None);
        }
        Ok(Some(match block {
            Block::Circle {
                circumference,
                witten_a,
            } => {
                let w = Dd::PI.mul_f64(2.0) / dd(circumference);
                Family::Circle {
                    step: w.sqr(),
                    shift: dd(witten_a).sqr(),
                }
            }
            Block::Sphere { radius } => Family::Sphere {
                inv_r2: dd(radius).sqr().recip(),
                l_min: u64::from(p == 1),
                factor: if p == 1 { 2 } else { 1 },
            },
            Block::ComplexTorus { novikov_c, .. } => {
                // the real form Re(c dz) = Re c dx − Im c dy has |ω|² = |c|²
                let shift = dd(&novikov_c.0).sqr() + dd(&novikov_c.1).sqr();
                Family::Lattice(Lattice::new(block, binomial2(p), shift, false)?)
            }
        }))
    }

    /// Family of `block` in antiholomorphic degree `q`.
    pub fn dolbeault(block: &Block, q: usize) -> Result<Option<Family>> {
        if q > 1 {
            return Ok(None);
        }
        Ok(Some(match block {
            Block::Circle { .. } => {
                return Err(Error::Geometry("circle blocks have no Dolbeault complex".into()));
            }
            Block::Sphere { radius } => Family::Sphere {
                inv_r2: dd(radius).sqr().recip(),
                l_min: q as u64,
                factor: 1,
            },
            Block::ComplexTorus {
                area, bundle_degree, ..
            } => {
                let d = *bundle_degree;
                if d == 0 {
                    Family::Lattice(Lattice::new(block, 1, Dd::ZERO, true)?)
                } else {
                    // 2B = 4π|d|/A; negative degree swaps the two gradings (Serre duality)
                    let step = Dd::PI.mul_f64(4.0 * d.unsigned_abs() as f64) / dd(area);
                    let kernel_in_zero = d > 0;
                    let k_min = if (q == 0) == kernel_in_zero { 0 } else { 1 };
                    Family::Landau {
                        step,
                        k_min,
                        mult: d.unsigned_abs(),
                    }
                }
            }
        }))
    }

    /// Lower bound on the smallest eigenvalue.
    pub fn min_eigenvalue(&self) -> Dd {
        match self {
            Family::Circle { shift, .. } => *shift,
            Family::Sphere { inv_r2, l_min, .. } => inv_r2.mul_f64((l_min * (l_min + 1)) as f64),
            Family::Landau { step, k_min, .. } => step.mul_f64(*k_min as f64),
            Family::Lattice(l) => l.delta,
        }
    }

    /// All lines with eigenvalue `<= cutoff`, ascending and merged.
    pub fn lines(&self, cutoff: Dd) -> Vec<SpectralLine> {
        match self {
            Family::Circle { step, shift } => {
                let budget = cutoff - *shift;
                if budget.is_sign_negative() {
                    return Vec::new();
                }
                let mut out = Vec::new();
                let kmax = (budget / *step).to_f64().sqrt().floor() as u64 + 1;
                for k in 0..=kmax {
                    let lam = step.mul_f64((k * k) as f64) + *shift;
                    if lam > cutoff {
                        break;
                    }
                    out.push(SpectralLine::new(lam, if k == 0 { 1 } else { 2 }));
                }
                out
            }
            Family::Sphere { inv_r2, l_min, factor } => {
                let mut out = Vec::new();
                let mut l = *l_min;
                loop {
                    let lam = inv_r2.mul_f64((l * (l + 1)) as f64);
                    if lam > cutoff {
                        break;
                    }
                    out.push(SpectralLine::new(lam, factor * (2 * l + 1)));
                    l += 1;
                }
                out
            }
            Family::Landau { step, k_min, mult } => {
                let mut out = Vec::new();
                let mut k = *k_min;
                loop {
                    let lam = step.mul_f64(k as f64);
                    if lam > cutoff {
                        break;
                    }
                    out.push(SpectralLine::new(lam, *mult));
                    k += 1;
                }
                out
            }
            Family::Lattice(l) => l.lines(cutoff),
        }
    }

    /// Upper bound on `Σ_{λ > cutoff} mult·e^{−tλ}`.
    pub fn tail(&self, t: f64, cutoff: f64) -> f64 {
        match self {
            Family::Circle { step, shift } => {
                let (c, delta) = (step.to_f64(), shift.to_f64());
                let k0 = if cutoff >= delta {
                    ((cutoff - delta) / c).sqrt().floor() + 1.0
                } else {
                    0.0
                };
                let pref = (-t * delta).exp();
                if k0 == 0.0 {
                    return pref * (1.0 + (PI / (t * c)).sqrt()) * (1.0 + 1e-9);
                }
                let a = t * c;
                2.0 * pref * (-a * k0 * k0).exp() * (1.0 + 1.0 / (2.0 * a * k0)) * (1.0 + 1e-9)
            }
            Family::Sphere { inv_r2, l_min, factor } => {
                let s = t * inv_r2.to_f64();
                let inv = inv_r2.to_f64();
                let mut l0 = *l_min;
                if cutoff >= 0.0 {
                    let lmax = ((0.25 + cutoff / inv).sqrt() - 0.5).floor().max(0.0) as u64;
                    // re-check the boundary in case rounding put lmax one too high
                    let lmax = if (lmax * (lmax + 1)) as f64 * inv > cutoff {
                        lmax.saturating_sub(1)
                    } else {
                        lmax
                    };
                    l0 = l0.max(lmax + 1);
                }
                sphere_tail_from(l0, s, *factor as f64) * (1.0 + 1e-9)
            }
            Family::Landau { step, k_min, mult } => {
                let st = step.to_f64() * t;
                let k0 = if cutoff >= 0.0 {
                    (*k_min).max((cutoff / step.to_f64()).floor() as u64 + 1)
                } else {
                    *k_min
                };
                *mult as f64 * (-st * k0 as f64).exp() / (-(-st).exp_m1()) * (1.0 + 1e-9)
            }
            Family::Lattice(l) => l.tail(t, cutoff),
        }
    }

    /// Upper bound on the full partition function `Σ mult·e^{−sλ}`.
    pub fn partition_upper(&self, s: f64) -> f64 {
        match self {
            Family::Circle { step, shift } => {
                (-s * shift.to_f64()).exp() * (1.0 + (PI / (s * step.to_f64())).sqrt()) * (1.0 + 1e-9)
            }
            Family::Landau { .. } | Family::Sphere { .. } => self.tail(s, -1.0),
            Family::Lattice(l) => {
                // the analytic bound overshoots by a factor ≈ 1 + d√(πc); enumerate only
                // when that is not small
                let c = 4.0 * PI * PI * s;
                let d = l.cell_radius();
                if d * (PI * c).sqrt() + d * d * c < 0.05 {
                    return l.tail(s, -1.0);
                }
                let cut = l.delta.to_f64() + 60.0 / s;
                (l.partition_body(s, cut) + l.tail(s, cut)) * (1.0 + 1e-9)
            }
        }
    }
}

/// `Σ_{l ≥ l0} f(2l+1)e^{−s·l(l+1)}`: explicit terms until the term ratio drops below
/// one half, then a geometric bound (the ratio decreases with l).
fn sphere_tail_from(l0: u64, s: f64, f: f64) -> f64 {
    let term = |l: u64| f * (2 * l + 1) as f64 * (-s * (l * (l + 1)) as f64).exp();
    let mut sum = 0.0;
    let mut l = l0;
    loop {
        let tl = term(l);
        let q = (2 * l + 3) as f64 / (2 * l + 1) as f64 * (-2.0 * s * (l + 1) as f64).exp();
        if q < 0.5 || tl == 0.0 {
            return sum + tl / (1.0 - q);
        }
        sum += tl;
        l += 1;
    }
}
