//! Certified sums of a kernel over the atoms of a law.
//!
//! Finite supports are summed directly. Geometric tails are bounded by a
//! geometric series; Zipf tails use an Euler–Maclaurin closure whose kernel
//! integrals are available in closed form, with the remainder certified by
//! convexity of the summand.

use crate::dist::{Distribution, Group, Kind, HORIZON_CAP};
use crate::error::{Error, Result};
use crate::numerics::{
    beta_increment, ln_beta, ln_choose, ln_gamma, regularized_gamma_p, regularized_gamma_q,
    regularized_incomplete_beta, KahanSum,
};

/// Function of an atom mass `q` summed over the atoms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Kernel {
    /// `e^{ln_coef} q^j (1-q)^m`
    Binom { ln_coef: f64, j: f64, m: f64 },
    /// `e^{ln_coef} q^j e^{-λq}`
    Pois { ln_coef: f64, j: f64, lambda: f64 },
    /// `P(Bin(n, q) >= s)`
    BinomSurv { s: u64, n: u64 },
    /// `P(Poisson(λq) >= s)`
    PoisSurv { s: u64, lambda: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct TailSum {
    pub value: f64,
    pub certificate: f64,
}

impl TailSum {
    pub(crate) const ZERO: TailSum = TailSum { value: 0.0, certificate: 0.0 };
}

fn pow1m(q: f64, m: f64) -> f64 {
    if m == 0.0 {
        1.0
    } else {
        (m * (-q).ln_1p()).exp()
    }
}

impl Kernel {
    pub(crate) fn binom_point(n: u64, r: u64, j: u64) -> Self {
        Kernel::Binom { ln_coef: ln_choose(n as f64, r as f64), j: j as f64, m: (n - r) as f64 }
    }

    pub(crate) fn eval(&self, q: f64) -> f64 {
        if q <= 0.0 {
            return match *self {
                Kernel::Binom { ln_coef, j, .. } | Kernel::Pois { ln_coef, j, .. } if j == 0.0 => ln_coef.exp(),
                Kernel::BinomSurv { s: 0, .. } | Kernel::PoisSurv { s: 0, .. } => 1.0,
                _ => 0.0,
            };
        }
        match *self {
            Kernel::Binom { ln_coef, j, m } => {
                if q >= 1.0 {
                    return if m == 0.0 { ln_coef.exp() } else { 0.0 };
                }
                (ln_coef + j * q.ln()).exp() * pow1m(q, m)
            }
            Kernel::Pois { ln_coef, j, lambda } => (ln_coef + j * q.ln() - lambda * q).exp(),
            Kernel::BinomSurv { s, n } => {
                if s == 0 {
                    1.0
                } else if s > n {
                    0.0
                } else {
                    regularized_incomplete_beta(s as f64, (n - s + 1) as f64, q.min(1.0)).unwrap_or(0.0)
                }
            }
            Kernel::PoisSurv { s, lambda } => {
                if s == 0 {
                    1.0
                } else {
                    regularized_gamma_p(s as f64, lambda * q).unwrap_or(0.0)
                }
            }
        }
    }

    /// `(c, J)` with `kernel(q) <= c q^J` on `[0, 1]`.
    fn power_bound(&self) -> (f64, f64) {
        match *self {
            Kernel::Binom { ln_coef, j, .. } | Kernel::Pois { ln_coef, j, .. } => (ln_coef.exp(), j),
            Kernel::BinomSurv { s, n } => (ln_choose(n as f64, s as f64).exp(), s as f64),
            Kernel::PoisSurv { s, lambda } => ((s as f64 * lambda.ln() - ln_gamma(s as f64 + 1.0)).exp(), s as f64),
        }
    }

    // below this mass the summand is convex in the atom index
    fn convex_target(&self) -> f64 {
        match *self {
            Kernel::Binom { j, m, .. } => j / (4.0 * (m + j)),
            Kernel::Pois { j, lambda, .. } => j / (4.0 * lambda.max(j)),
            Kernel::BinomSurv { s, n } => s as f64 / (4.0 * n.max(1) as f64),
            Kernel::PoisSurv { s, lambda } => s as f64 / (4.0 * lambda.max(s as f64)),
        }
    }

    /// `q g'(q)`
    fn q_dg(&self, q: f64) -> f64 {
        match *self {
            Kernel::Binom { j, m, .. } => self.eval(q) * (j - m * q / (1.0 - q)),
            Kernel::Pois { j, lambda, .. } => self.eval(q) * (j - lambda * q),
            Kernel::BinomSurv { s, n } => {
                let (s, n) = (s as f64, n as f64);
                (s * q.ln() + (n - s) * (-q).ln_1p() - ln_beta(s, n - s + 1.0)).exp()
            }
            Kernel::PoisSurv { s, lambda } => {
                let s = s as f64;
                (s * (lambda * q).ln() - lambda * q - ln_gamma(s)).exp()
            }
        }
    }

    /// Whether `x ↦ g(x^{-σ}/z')` is convex on `[x_q, ∞)`, where `x_q` is the
    /// index at which the mass equals `q`.
    fn convex_from(&self, q: f64, sigma: f64) -> bool {
        match *self {
            Kernel::Binom { j, m, .. } => {
                let a = j - m * q / (1.0 - q);
                a > 0.0 && sigma * a * a + a >= sigma * m * q / ((1.0 - q) * (1.0 - q))
            }
            Kernel::Pois { j, lambda, .. } => {
                let a = j - lambda * q;
                a > 0.0 && sigma * a * a + a >= sigma * lambda * q
            }
            Kernel::BinomSurv { s, n } => {
                let a = s as f64 - (n - s) as f64 * q / (1.0 - q);
                1.0 + sigma * a >= 0.0 && q < 1.0
            }
            Kernel::PoisSurv { s, lambda } => 1.0 + sigma * (s as f64 - lambda * q) >= 0.0,
        }
    }

    /// `∫_0^Q g(q) q^{-α-1} dq`
    fn mellin(&self, big_q: f64, alpha: f64) -> Result<f64> {
        Ok(match *self {
            Kernel::Binom { ln_coef, j, m } => {
                let a = j - alpha;
                (ln_coef + ln_beta(a, m + 1.0)).exp() * regularized_incomplete_beta(a, m + 1.0, big_q)?
            }
            Kernel::Pois { ln_coef, j, lambda } => {
                let a = j - alpha;
                (ln_coef - a * lambda.ln() + ln_gamma(a)).exp() * regularized_gamma_p(a, lambda * big_q)?
            }
            Kernel::BinomSurv { s, n } => {
                let (sf, b) = (s as f64, (n - s + 1) as f64);
                let head = big_q.powf(-alpha) * regularized_incomplete_beta(sf, b, big_q)?;
                let ratio = (ln_beta(sf - alpha, b) - ln_beta(sf, b)).exp();
                (ratio * regularized_incomplete_beta(sf - alpha, b, big_q)? - head) / alpha
            }
            Kernel::PoisSurv { s, lambda } => {
                let sf = s as f64;
                let head = big_q.powf(-alpha) * regularized_gamma_p(sf, lambda * big_q)?;
                let ratio = (alpha * lambda.ln() + ln_gamma(sf - alpha) - ln_gamma(sf)).exp();
                (ratio * regularized_gamma_p(sf - alpha, lambda * big_q)? - head) / alpha
            }
        })
    }

    /// `kernel(x1) - kernel(x0)` for a survival kernel and `x0 <= x1`,
    /// computed on the side where both terms are small.
    pub(crate) fn increment(&self, x0: f64, x1: f64) -> f64 {
        match *self {
            Kernel::BinomSurv { s, n } if s >= 1 && s <= n => {
                beta_increment(s as f64, (n - s + 1) as f64, x0.clamp(0.0, 1.0), x1.clamp(0.0, 1.0)).unwrap_or(0.0)
            }
            Kernel::PoisSurv { s, lambda } if s >= 1 => {
                let (a, b, sf) = (lambda * x0, lambda * x1, s as f64);
                let diff = if a > sf {
                    regularized_gamma_q(sf, a).unwrap_or(0.0) - regularized_gamma_q(sf, b).unwrap_or(0.0)
                } else {
                    regularized_gamma_p(sf, b).unwrap_or(0.0) - regularized_gamma_p(sf, a).unwrap_or(0.0)
                };
                diff.max(0.0)
            }
            _ => (self.eval(x1) - self.eval(x0)).max(0.0),
        }
    }

    fn trivially_zero(&self) -> bool {
        matches!(*self, Kernel::BinomSurv { s, n } if s > n)
    }
}

/// `Σ_{k > from} kernel(scale · p_k)` with a certificate on the neglected part.
pub(crate) fn sum_atoms(d: &Distribution, kernel: &Kernel, scale: f64, from: u64) -> Result<TailSum> {
    if kernel.trivially_zero() {
        return Ok(TailSum::ZERO);
    }
    let tol = d.truncation_tol();
    match &d.kind {
        Kind::Finite { groups, cum } => {
            let mut acc = KahanSum::new();
            for (g, &c) in groups.iter().zip(cum) {
                if c <= from {
                    continue;
                }
                let before = c - g.count;
                let count = c - before.max(from);
                acc.add(count as f64 * kernel.eval(scale * g.mass));
            }
            Ok(TailSum { value: acc.value(), certificate: 0.0 })
        }
        Kind::Geometric { q } => {
            let (c, jj) = kernel.power_bound();
            let ratio = 1.0 / (1.0 - q.powf(jj));
            let mut acc = KahanSum::new();
            let mut k = from + 1;
            loop {
                let p = scale * d.mass(k);
                // remaining Σ_{i>=k} c p_i^J
                let bound = c * p.powf(jj) * ratio;
                if bound <= tol * acc.value() || bound < 1e-300 {
                    return Ok(TailSum { value: acc.value(), certificate: bound });
                }
                if k > HORIZON_CAP {
                    return Err(Error::PrecisionUnattainable { certificate: bound });
                }
                acc.add(kernel.eval(p));
                k += 1;
            }
        }
        Kind::Zipf { alpha, sigma, z } => zipf_tail(d, kernel, scale, from, *alpha, *sigma, *z, tol),
    }
}

#[allow(clippy::too_many_arguments)]
fn zipf_tail(
    d: &Distribution,
    kernel: &Kernel,
    scale: f64,
    from: u64,
    alpha: f64,
    sigma: f64,
    z: f64,
    tol: f64,
) -> Result<TailSum> {
    let zp = z / scale;
    let mass_at = |x: f64| x.powf(-sigma) / zp;
    let target = kernel.convex_target();
    let x_target = (target * zp).powf(-alpha).ceil();
    let mut big_k = (from + 1).max(32).max(if x_target.is_finite() { x_target.min(HORIZON_CAP as f64) as u64 } else { HORIZON_CAP });
    let mut acc = KahanSum::new();
    let mut k = from + 1;
    let mut last_cert = f64::INFINITY;
    loop {
        while k < big_k {
            acc.add(kernel.eval(scale * d.mass(k)));
            k += 1;
        }
        let kf = big_k as f64;
        let q = mass_at(kf);
        if kernel.convex_from(q, sigma) {
            let f = kernel.eval(q);
            let df = -sigma * kernel.q_dg(q) / kf;
            let integral = alpha * zp.powf(-alpha) * kernel.mellin(q, alpha)?;
            let tail = integral + f / 2.0 - df / 12.0;
            let cert = df.abs() / 12.0;
            let value = acc.value() + tail;
            last_cert = cert;
            if cert <= tol * value.abs() || cert < 1e-300 {
                return Ok(TailSum { value, certificate: cert });
            }
            if big_k >= HORIZON_CAP {
                if cert <= (1e-12 * value.abs()).max(1e-15) {
                    return Ok(TailSum { value, certificate: cert });
                }
                return Err(Error::PrecisionUnattainable { certificate: cert });
            }
        } else if big_k >= HORIZON_CAP {
            return Err(Error::PrecisionUnattainable { certificate: last_cert });
        }
        big_k = (big_k * 2).min(HORIZON_CAP);
    }
}

/// Kernel values on the leading atoms together with suffix sums, so that
/// `Σ_{k > K} kernel(scale p_k)` is available for every `K` up to the
/// tabulated horizon.
#[derive(Debug, Clone)]
pub(crate) struct KernelTable {
    pub groups: Vec<Group>,
    pub cum: Vec<u64>,
    suffix: Vec<f64>,
    pub tail: TailSum,
}

impl KernelTable {
    /// Tabulate the first `horizon` atoms (all atoms for finite laws).
    pub(crate) fn new(d: &Distribution, kernel: &Kernel, scale: f64, horizon: u64) -> Result<Self> {
        let (groups, cum): (Vec<Group>, Vec<u64>) = match d.groups() {
            Some((g, c)) => (g.to_vec(), c.to_vec()),
            None => {
                let g: Vec<Group> = (1..=horizon).map(|k| Group { mass: d.mass(k), count: 1 }).collect();
                let c = (1..=horizon).collect();
                (g, c)
            }
        };
        let tail = if d.is_finite() { TailSum::ZERO } else { sum_atoms(d, kernel, scale, horizon)? };
        let mut suffix = vec![0.0; groups.len() + 1];
        suffix[groups.len()] = tail.value;
        for i in (0..groups.len()).rev() {
            suffix[i] = suffix[i + 1] + groups[i].count as f64 * kernel.eval(scale * groups[i].mass);
        }
        Ok(Self { groups, cum, suffix, tail })
    }

    /// Number of tabulated atoms.
    pub(crate) fn len_atoms(&self) -> u64 {
        self.cum.last().copied().unwrap_or(0)
    }

    /// `Σ_{k > count} kernel(scale p_k)`; `count` must fall on a group boundary
    /// or inside the table.
    pub(crate) fn sum_after(&self, count: u64) -> f64 {
        let i = self.cum.partition_point(|&c| c <= count);
        if i == self.groups.len() {
            return self.tail.value;
        }
        let before = if i == 0 { 0 } else { self.cum[i - 1] };
        // partial group: only part of group i lies beyond `count`
        let inside = (count - before) as f64;
        let per_atom = (self.suffix[i] - self.suffix[i + 1]) / self.groups[i].count as f64;
        self.suffix[i] - inside * per_atom
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(d: &Distribution, kernel: &Kernel, scale: f64, from: u64, upto: u64) -> f64 {
        let mut acc = KahanSum::new();
        for k in from + 1..=upto {
            acc.add(kernel.eval(scale * d.mass(k)));
        }
        acc.value()
    }

    #[test]
    fn zipf_point_tail_matches_long_direct_sum() {
        // with σJ = 4 the direct sum to 10^6 leaves a remainder below 1e-19
        let d = Distribution::zipf(0.5).unwrap();
        let k = Kernel::binom_point(50, 1, 2);
        let s = sum_atoms(&d, &k, 1.0, 0).unwrap();
        let b = brute(&d, &k, 1.0, 0, 1_000_000);
        assert!((s.value - b).abs() <= 1e-13 * b, "{} vs {}", s.value, b);
    }

    #[test]
    fn zipf_slow_tail_matches_hurwitz_zeta() {
        // q^1 (1-q)^0 summed from k > 10 is the tail mass
        let d = Distribution::zipf(0.7).unwrap();
        let k = Kernel::Binom { ln_coef: 0.0, j: 1.0, m: 0.0 };
        let s = sum_atoms(&d, &k, 1.0, 10).unwrap();
        let exact = d.tail_mass(10);
        assert!((s.value - exact).abs() <= 1e-11 * exact, "{} vs {}", s.value, exact);
        assert!(s.certificate <= 1e-12 * s.value);
    }

    #[test]
    fn zipf_survival_tails_match_expanded_series() {
        // P(Bin(n,q) >= s) = Σ_{j>=s} C(n,j) q^j (1-q)^{n-j}
        let d = Distribution::zipf(0.3).unwrap();
        let (n, s) = (40u64, 2u64);
        let surv = sum_atoms(&d, &Kernel::BinomSurv { s, n }, 0.5, 3).unwrap();
        let mut total = 0.0;
        for j in s..=n {
            let k = Kernel::Binom { ln_coef: ln_choose(n as f64, j as f64), j: j as f64, m: (n - j) as f64 };
            total += sum_atoms(&d, &k, 0.5, 3).unwrap().value;
        }
        assert!((surv.value - total).abs() <= 1e-11 * total, "{} vs {}", surv.value, total);
        let ps = sum_atoms(&d, &Kernel::PoisSurv { s: 1, lambda: 30.0 }, 1.0, 0).unwrap();
        let mut direct = 0.0;
        for k in 1..=200_000u64 {
            direct += -(-30.0 * d.mass(k)).exp_m1();
        }
        // σ = 10/3 so the neglected direct remainder is tiny
        assert!((ps.value - direct).abs() <= 1e-10 * direct, "{} vs {}", ps.value, direct);
    }

    #[test]
    fn geometric_tail_matches_closed_form() {
        let d = Distribution::geometric(0.9).unwrap();
        let k = Kernel::Binom { ln_coef: 0.0, j: 2.0, m: 0.0 };
        let s = sum_atoms(&d, &k, 1.0, 0).unwrap();
        // Σ (0.1 · 0.9^{k-1})² = 0.01 / (1 - 0.81)
        let exact = 0.01 / 0.19;
        assert!((s.value - exact).abs() <= 1e-12 * exact);
    }

    #[test]
    fn table_suffix_sums() {
        let d = Distribution::explicit(&[0.4, 0.2, 0.2, 0.1, 0.1]).unwrap();
        let k = Kernel::Binom { ln_coef: 0.0, j: 1.0, m: 0.0 };
        let t = KernelTable::new(&d, &k, 1.0, 0).unwrap();
        assert!((t.sum_after(0) - 1.0).abs() < 1e-15);
        assert!((t.sum_after(1) - 0.6).abs() < 1e-15);
        assert!((t.sum_after(2) - 0.4).abs() < 1e-15);
        assert!((t.sum_after(4) - 0.1).abs() < 1e-15);
        assert_eq!(t.sum_after(5), 0.0);
        let z = Distribution::zipf(0.5).unwrap();
        let t = KernelTable::new(&z, &k, 1.0, 100).unwrap();
        assert!((t.sum_after(7) - z.tail_mass(7)).abs() < 1e-13);
        assert!((t.sum_after(100) - z.tail_mass(100)).abs() < 1e-13);
    }
}
