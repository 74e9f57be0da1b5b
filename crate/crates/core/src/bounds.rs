//! Finite-sample upper and lower bounds on `E M_{n,r}`.
//!
//! Bounds whose free parameter `ε` is optimized are evaluated on the finite
//! set of breakpoints of the counting function, where the optimum is
//! attained, so the reported value is exact rather than a grid estimate.

use crate::dist::{Distribution, EnvelopeSide, KappaSign, RatioProfile, RvEnvelope};
use crate::error::{Error, Result};
use crate::exact::exact_em_certified;
use crate::numerics::{
    c_r, choose, ell_circ_beta, ln_beta, ln_choose, ln_gamma, lower_incomplete_gamma,
    regularized_incomplete_beta, SlowlyVarying,
};
use crate::report::{BoundReport, BoundResult, Condition, Side};
use crate::sums::{sum_atoms, Kernel, KernelTable};
use serde::{Deserialize, Serialize};

pub const DEFAULT_B: f64 = 2.0;
/// Search cap for the threshold of `clow`.
pub const CLOW_N0_CAP: u64 = 10_000_000;

fn bad(name: &str, detail: impl Into<String>) -> Condition {
    Condition::new(name, false, detail)
}

fn ok(name: &str, detail: impl Into<String>) -> Condition {
    Condition::new(name, true, detail)
}

fn check_nr(n: u64, r: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::Domain("n must be at least 1".into()));
    }
    if r > n {
        return Err(Error::Domain(format!("r = {r} exceeds n = {n}")));
    }
    Ok(())
}

fn ln_factorial(r: u64) -> f64 {
    ln_gamma(r as f64 + 1.0)
}

// γ(t, x), infinite for t <= 0
fn gamma_lower(t: f64, x: f64) -> Result<f64> {
    if t <= 0.0 {
        Ok(f64::INFINITY)
    } else {
        lower_incomplete_gamma(t, x)
    }
}

/// Horizon used to tabulate atoms and ratio profiles for infinite laws.
pub(crate) fn atom_horizon(d: &Distribution, n: f64) -> u64 {
    if d.is_finite() {
        return 0;
    }
    d.nu_count(1.0 / n).saturating_mul(4).max(4096).min(d.max_index())
}

/// `φ(ε) + ψ(ε)` with `φ = phi_coef·ν(ε)` and
/// `ψ(ε) = psi_coef · Σ_a S(min(ε/b, p_a))` for a survival kernel `S`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct TgProblem {
    pub phi_coef: f64,
    pub psi_coef: f64,
    pub b: f64,
    pub kernel: Kernel,
}

impl TgProblem {
    fn binomial(n: u64, r: u64, b: f64) -> Self {
        let rf = r as f64;
        Self {
            phi_coef: c_r(r) / n as f64,
            psi_coef: b.powf(2.0 * (rf + 1.0)) / ((b - 1.0) * (n + 1) as f64),
            b,
            kernel: Kernel::BinomSurv { s: r + 1, n: n + 1 },
        }
    }

    /// Objective at each `ε ∈ [0, 1]` of `eps`.
    pub(crate) fn objective_many(&self, d: &Distribution, eps: &[f64]) -> Result<Vec<f64>> {
        let smallest = eps.iter().copied().filter(|&e| e > 0.0).fold(1.0, f64::min);
        let horizon = if d.is_finite() { 0 } else { d.nu_count(smallest / self.b).saturating_add(1).clamp(2, d.max_index()) };
        let table = KernelTable::new(d, &self.kernel, 1.0, horizon)?;
        eps.iter()
            .map(|&e| {
                if e <= 0.0 {
                    return Ok(d.support_size().map_or(f64::INFINITY, |s| self.phi_coef * s as f64));
                }
                let x = e / self.b;
                let cnt = d.nu_count(x);
                let rest = if d.is_finite() || cnt <= table.len_atoms() {
                    table.sum_after(cnt)
                } else {
                    sum_atoms(d, &self.kernel, 1.0, cnt)?.value
                };
                Ok(self.phi_coef * d.nu_count(e) as f64 + self.psi_coef * (cnt as f64 * self.kernel.eval(x) + rest))
            })
            .collect()
    }

    pub(crate) fn objective(&self, d: &Distribution, eps: f64) -> Result<f64> {
        Ok(self.objective_many(d, &[eps])?[0])
    }

    /// Exact infimum over `ε ∈ [0, 1]`, returned with its location.
    pub(crate) fn optimize(&self, d: &Distribution) -> Result<(f64, f64)> {
        let mut best = (self.objective(d, 1.0)?, 1.0);
        let consider = |v: f64, e: f64, best: &mut (f64, f64)| {
            if v < best.0 {
                *best = (v, e);
            }
        };
        if let Some(s) = d.support_size() {
            consider(self.phi_coef * s as f64, 0.0, &mut best);
            let table = KernelTable::new(d, &self.kernel, 1.0, 0)?;
            for g in &table.groups {
                let p = g.mass;
                if p >= 1.0 {
                    continue;
                }
                let x = p / self.b;
                let cnt = d.nu_count(x);
                let psi = self.psi_coef * (cnt as f64 * self.kernel.eval(x) + table.sum_after(cnt));
                consider(self.phi_coef * d.count_above(p) as f64 + psi, p, &mut best);
            }
            return Ok(best);
        }
        // infinite support: φ(p_k⁺) = phi_coef (k-1) grows without bound, so
        // the scan stops once it alone exceeds the incumbent
        let cap = d.max_index();
        let mut horizon = 4096.min(cap);
        let mut table = KernelTable::new(d, &self.kernel, 1.0, horizon)?;
        let mut k = 1u64;
        while k <= cap {
            let phi = self.phi_coef * (k - 1) as f64;
            if phi >= best.0 {
                break;
            }
            let p = d.mass(k);
            let x = p / self.b;
            let cnt = d.nu_count(x);
            if cnt > table.len_atoms() && horizon < cap {
                horizon = cnt.saturating_mul(2).max(2 * horizon).min(cap);
                table = KernelTable::new(d, &self.kernel, 1.0, horizon)?;
            }
            let psi = self.psi_coef * (cnt as f64 * self.kernel.eval(x) + table.sum_after(cnt));
            consider(phi + psi, p, &mut best);
            k += 1;
        }
        Ok(best)
    }
}

/// Breakpoint-optimized upper bound; `b > 1` is the free scale (2 by
/// default). For `r = n` the bound is `inf_ε p★^{n+1} ν(ε) + ε^n`.
pub fn upper_tg(d: &Distribution, n: u64, r: u64, b: f64) -> Result<BoundResult> {
    check_nr(n, r)?;
    if !(b > 1.0) {
        return Err(Error::Domain(format!("b must exceed 1, got {b}")));
    }
    if r == n {
        let (v, e) = tg_r_equals_n(d, n);
        return Ok(BoundResult::new("tg", Side::Upper, v, Some(e)));
    }
    let (v, e) = TgProblem::binomial(n, r, b).optimize(d)?;
    Ok(BoundResult::new("tg", Side::Upper, v, Some(e)))
}

/// `φ⁺(ε) + ψ⁺(ε)` at each `ε ∈ [0, 1]` of `eps` (`r < n`).
pub fn tg_objective(d: &Distribution, n: u64, r: u64, b: f64, eps: &[f64]) -> Result<Vec<f64>> {
    check_nr(n, r)?;
    if r == n {
        return Err(Error::Domain("the tg objective is defined for r < n".into()));
    }
    TgProblem::binomial(n, r, b).objective_many(d, eps)
}

fn tg_r_equals_n(d: &Distribution, n: u64) -> (f64, f64) {
    let nf = n as f64;
    let a = d.p_star().powf(nf + 1.0);
    let nu1 = d.nu_count(1.0) as f64;
    let mut best = (a * nu1 + 1.0, 1.0);
    if let Some((groups, _)) = d.groups() {
        best = best.min_by_total(((groups.iter().map(|g| g.count).sum::<u64>()) as f64 * a, 0.0));
        for g in groups {
            if g.mass < 1.0 {
                best = best.min_by_total((a * d.count_above(g.mass) as f64 + g.mass.powf(nf), g.mass));
            }
        }
        return best;
    }
    let cap = d.max_index();
    for k in 1..=cap {
        let p = d.mass(k);
        let head = a * (k - 1) as f64;
        if head >= best.0 {
            break;
        }
        let tail = p.powf(nf);
        best = best.min_by_total((head + tail, p));
        // further candidates improve on the incumbent by at most p^n
        if tail <= 1e-17 * best.0 || k > 1_000_000 {
            break;
        }
    }
    best
}

trait MinPair {
    fn min_by_total(self, other: Self) -> Self;
}

impl MinPair for (f64, f64) {
    fn min_by_total(self, other: Self) -> Self {
        if other.0 < self.0 {
            other
        } else {
            self
        }
    }
}

/// `c(r)|S|/n` (`r < n`) or `p★^{n+1}|S|` (`r = n`) for a finite support.
pub fn upper_finite(d: &Distribution, n: u64, r: u64) -> Result<BoundResult> {
    check_nr(n, r)?;
    let Some(s) = d.support_size() else {
        return Ok(BoundResult::inapplicable("ctgfinite", Side::Upper, bad("finite_support", "support is infinite")));
    };
    let v = if r < n {
        c_r(r) * s as f64 / n as f64
    } else {
        d.p_star().powf(n as f64 + 1.0) * s as f64
    };
    Ok(BoundResult::new("ctgfinite", Side::Upper, v, Some(0.0)).with_condition(ok("finite_support", format!("|S| = {s}"))))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RvVariant {
    Ctg,
    Ctg2,
    Ctg3,
}

impl RvVariant {
    pub fn tag(&self) -> &'static str {
        match self {
            RvVariant::Ctg => "ctg",
            RvVariant::Ctg2 => "ctg2",
            RvVariant::Ctg3 => "ctg3",
        }
    }
}

/// `c₁(α, r) = c(r) + 4^{1+r}/r! (1+r)^{1+r-α} γ(1+r-α, 1/2)`
pub fn c1(alpha: f64, r: u64) -> Result<f64> {
    let rf = r as f64;
    let t = 1.0 + rf - alpha;
    let g = gamma_lower(t, 0.5)?;
    Ok(c_r(r) + ((1.0 + rf) * 4f64.ln() - ln_factorial(r) + t * (1.0 + rf).ln()).exp() * g)
}

/// `c₂(α, β, r) = 4^{1+r}/r! ((1+r)/2)^{(1+β)/2+r-α} sqrt(γ(1+β+2(r-α), 1))`
pub fn c2(alpha: f64, beta: f64, r: u64) -> Result<f64> {
    let rf = r as f64;
    let g = gamma_lower(1.0 + beta + 2.0 * (rf - alpha), 1.0)?;
    let ln = (1.0 + rf) * 4f64.ln() - ln_factorial(r) + ((1.0 + beta) / 2.0 + rf - alpha) * ((1.0 + rf) / 2.0).ln();
    Ok(ln.exp() * g.sqrt())
}

/// Midpoint of the admissible `β` range `(max(0, 2(α-r)-1), 1)`.
pub fn default_beta(alpha: f64, r: u64) -> f64 {
    ((2.0 * (alpha - r as f64) - 1.0).max(0.0) + 1.0) / 2.0
}

/// Closed-form bounds under an upper regular-variation envelope
/// `ν(ε) <= ε^{-α} ℓ(1/ε)` on `(0, 1]`.
pub fn upper_rv(d: &Distribution, n: u64, r: u64, variant: RvVariant, beta: Option<f64>) -> Result<BoundResult> {
    check_nr(n, r)?;
    let tag = variant.tag();
    let inapp = |c: Condition| Ok(BoundResult::inapplicable(tag, Side::Upper, c));
    if d.is_finite() {
        return inapp(bad("infinite_support", "support is finite"));
    }
    if n < 2 {
        return inapp(bad("n_at_least_2", format!("n = {n}")));
    }
    if r >= n {
        return inapp(bad("r_below_n", format!("r = {r}, n = {n}")));
    }
    let env = match d.envelope(EnvelopeSide::Upper) {
        Ok(e) => e,
        Err(e) => return inapp(bad("upper_envelope", e.to_string())),
    };
    let mut conds = vec![ok("infinite_support", "support is infinite"), ok("n_at_least_2", format!("n = {n}"))];
    if env.valid_up_to < 1.0 {
        return inapp(bad("envelope_on_unit_interval", format!("envelope valid only up to {}", env.valid_up_to)));
    }
    conds.push(ok("envelope_on_unit_interval", format!("alpha = {}, {}", env.alpha, describe_ell(&env.ell))));
    let (alpha, nf) = (env.alpha, n as f64);
    let ell_n = env.ell.eval(nf);
    let lead = c_r(r) * nf.powf(alpha - 1.0) * ell_n;
    let (value, extra) = match variant {
        RvVariant::Ctg => {
            let holds = env.ell.is_non_increasing();
            conds.push(Condition::new("ell_non_increasing", holds, describe_ell(&env.ell)));
            (c1(alpha, r)? * nf.powf(alpha - 1.0) * ell_n, None)
        }
        RvVariant::Ctg2 | RvVariant::Ctg3 => {
            let beta = beta.unwrap_or_else(|| default_beta(alpha, r));
            let floor = 2.0 * (alpha - r as f64) - 1.0;
            let holds = beta > 0.0 && beta < 1.0 && beta > floor;
            conds.push(Condition::new("beta_range", holds, format!("beta = {beta}, need beta in (0,1) and beta > {floor}")));
            if !holds {
                return Ok(BoundResult { conditions: conds, ..BoundResult::new(tag, Side::Upper, 0.0, None) }.settle());
            }
            let k2 = c2(alpha, beta, r)?;
            let expo = alpha - (1.0 + beta) / 2.0;
            if variant == RvVariant::Ctg2 {
                (lead + k2 * nf.powf(expo) * ell_circ_beta(&env.ell, beta, nf)?, Some(beta))
            } else {
                let k0 = d.kappa_limit(KappaSign::Plus)?;
                let in_range = k0 > 1.0 && k0 <= 2.0;
                conds.push(Condition::new("kappa_plus_limit_in_(1,2]", in_range, format!("kappa_plus^0 = {k0}")));
                let kp = d.kappa(KappaSign::Plus, 2.0 / nf)?;
                conds.push(Condition::new(
                    "kappa_plus_at_2_over_n",
                    kp <= 2.0 * k0 - 1.0,
                    format!("kappa_plus(2/n) <= {kp} against 2 kappa_plus^0 - 1 = {}", 2.0 * k0 - 1.0),
                ));
                let half = nf / 2.0;
                (lead + (k0 - 1.0) * k2 * half.powf(expo) * ell_circ_beta(&env.ell, beta, half)?, Some(beta))
            }
        }
    };
    let mut res = BoundResult::new(tag, Side::Upper, value, Some(1.0 / nf));
    res.conditions = conds;
    if let Some(b) = extra {
        res = res.with_note(format!("beta = {b}"));
    }
    Ok(res.settle())
}

fn describe_ell(ell: &SlowlyVarying) -> String {
    match ell {
        SlowlyVarying::Constant { c } => format!("ell = {c}"),
        SlowlyVarying::LogPower { c, gamma } => format!("ell(x) = {c} ln(e + x)^{gamma}"),
    }
}

/// Breakpoints `{p, p/2}` of the atoms that fall in `(lo, hi)`, plus `hi`.
fn half_breakpoints(d: &Distribution, horizon: u64, lo: f64, hi: f64) -> Vec<f64> {
    let mut pts = vec![hi];
    let mut push = |p: f64| {
        for x in [p, p / 2.0] {
            if x > lo && x < hi {
                pts.push(x);
            }
        }
    };
    match d.groups() {
        Some((groups, _)) => groups.iter().for_each(|g| push(g.mass)),
        None => (1..=horizon).for_each(|k| push(d.mass(k))),
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// Upper bound with the ratio profile `κ₊`, optimized over `ε ∈ (0, 1/2]`.
pub fn upper_tgplus(d: &Distribution, n: u64, r: u64) -> Result<BoundResult> {
    check_nr(n, r)?;
    if r >= n {
        return Ok(BoundResult::inapplicable("tgplus", Side::Upper, bad("r_below_n", format!("r = {r}, n = {n}"))));
    }
    let kernel = Kernel::BinomSurv { s: r + 1, n: n + 1 };
    let coef = 4f64.powf(r as f64 + 1.0) / (n + 1) as f64;
    let phi_coef = c_r(r) / n as f64;
    // κ₊(2u) is infinite once 2u > p★
    let eps_max = (d.p_star() / 2.0).min(0.5);
    let horizon = atom_horizon(d, n as f64);
    let profile = RatioProfile::build(d, KappaSign::Plus, horizon)?;

    let (lo, mut theta) = if d.is_finite() {
        (0.0, 0.0)
    } else {
        // below U the ratio is at most the profile base
        let u = (profile.floor() / 2.0).min(eps_max);
        let cnt = d.nu_count(u);
        let tail = sum_atoms(d, &kernel, 0.5, cnt)?;
        let head = cnt as f64 * kernel.eval(u / 2.0) + tail.value + tail.certificate;
        (u, (profile.base() - 1.0).max(0.0) * coef * head)
    };
    let mut best = (f64::INFINITY, eps_max);
    if let Some(s) = d.support_size() {
        best = (phi_coef * s as f64, 0.0);
    }
    let mut prev = lo;
    for c in half_breakpoints(d, horizon, lo, eps_max) {
        let mid = 0.5 * (prev + c);
        let level = (profile.kappa(d, 2.0 * mid) - 1.0) * d.nu_count(mid) as f64;
        if level > 0.0 {
            theta += coef * level * kernel.increment(prev / 2.0, c / 2.0);
        }
        let phi = if c < eps_max { d.count_above(c) } else { d.nu_count(c) } as f64 * phi_coef;
        best = best.min_by_total((phi + theta, c));
        prev = c;
    }
    Ok(BoundResult::new("tgplus", Side::Upper, best.0, Some(best.1)))
}

/// Lower bound with the ratio profile `κ₋`, optimized over `ε ∈ (0, 1/2]`.
pub fn lower_low(d: &Distribution, n: u64, r: u64) -> Result<BoundResult> {
    check_nr(n, r)?;
    if r >= n {
        return Ok(BoundResult::inapplicable("low", Side::Lower, bad("r_below_n", format!("r = {r}, n = {n}"))));
    }
    let kernel = Kernel::BinomSurv { s: r + 1, n: n + 1 };
    let coef = 2f64.powf(-(2.0 * r as f64 + 1.0)) / (n + 1) as f64;
    let ln_head = ln_choose(n as f64, r as f64) + (n - r) as f64 * (-d.p_star()).ln_1p();
    let phi = |eps: f64| -> f64 {
        let nu = d.nu_count(eps);
        if nu == 0 || ln_head == f64::NEG_INFINITY {
            0.0
        } else {
            (ln_head + (nu as f64).ln() + (r as f64 + 1.0) * eps.ln()).exp()
        }
    };
    let horizon = atom_horizon(d, n as f64);
    let profile = RatioProfile::build(d, KappaSign::Minus, horizon)?;
    let (lo, mut theta) = if d.is_finite() {
        (0.0, 0.0)
    } else {
        let u = (profile.floor() / 2.0).min(0.5);
        let cnt = d.nu_count(u);
        let tail = sum_atoms(d, &kernel, 2.0, cnt)?;
        let head = (cnt as f64 * kernel.eval(2.0 * u) + tail.value - tail.certificate).max(0.0);
        (u, (1.0 - profile.base()).max(0.0) * coef * head)
    };
    let mut best = (0.0, 0.5);
    let mut prev = lo;
    for c in half_breakpoints(d, horizon, lo, 0.5) {
        let mid = 0.5 * (prev + c);
        let level = (1.0 - profile.kappa(d, 2.0 * mid).min(1.0)) * d.nu_count(mid) as f64;
        if level > 0.0 {
            theta += coef * level * kernel.increment(2.0 * prev, 2.0 * c);
        }
        let v = phi(c) + theta;
        if v > best.0 {
            best = (v, c);
        }
        prev = c;
    }
    Ok(BoundResult::new("low", Side::Lower, best.0, Some(best.1)))
}

/// Conditions of the regular-variation lower bound at a given `n`.
fn clow_conditions(d: &Distribution, env: &RvEnvelope, k0: f64, n: u64, r: u64) -> Result<Vec<Condition>> {
    let (nf, rf, alpha) = (n as f64, r as f64, env.alpha);
    let n_min = 2.max(1 + r);
    let mut out = vec![Condition::new("n_at_least_max(2,1+r)", n >= n_min, format!("n = {n}, need >= {n_min}"))];
    out.push(Condition::new(
        "envelope_covers_(0,1/n]",
        1.0 / nf <= env.valid_up_to,
        format!("lower envelope valid up to {}", env.valid_up_to),
    ));
    let km = d.kappa(KappaSign::Minus, 2.0 / nf)?;
    let target = (1.0 + k0) / 2.0;
    out.push(Condition::new("a", km <= target, format!("kappa_minus(2/n) <= {km} against {target}")));
    let lhs_b = if r == 0 { 1.0 } else { (nf * (-rf / nf).ln_1p()).exp() };
    out.push(Condition::new("b", lhs_b >= (-rf).exp() / 2.0, format!("(1-r/n)^n = {lhs_b}")));
    let (lhs_c, rhs_c) = integral_condition(1.0 + rf - alpha, n)?;
    out.push(Condition::new("c", lhs_c >= rhs_c, format!("integral = {lhs_c} against {rhs_c}")));
    Ok(out)
}

/// `(∫₀² u^{t-1}(1-u/n)^n du, γ(t, 2)/2)`, the integral in closed form
/// `n^t B(t, n+1) I_{2/n}(t, n+1)`.
pub(crate) fn integral_condition(t: f64, n: u64) -> Result<(f64, f64)> {
    let nf = n as f64;
    let lhs = if nf >= 2.0 {
        (t * nf.ln() + ln_beta(t, nf + 1.0)).exp() * regularized_incomplete_beta(t, nf + 1.0, 2.0 / nf)?
    } else {
        0.0
    };
    Ok((lhs, gamma_lower(t, 2.0)? / 2.0))
}

fn clow_setup(d: &Distribution) -> std::result::Result<(RvEnvelope, f64), Condition> {
    let env = d.envelope(EnvelopeSide::Lower).map_err(|e| bad("lower_envelope", e.to_string()))?;
    let nondecr = match env.ell {
        SlowlyVarying::Constant { .. } => true,
        SlowlyVarying::LogPower { c, gamma } => c == 0.0 || gamma >= 0.0,
    };
    if !nondecr {
        return Err(bad("ell_non_decreasing", describe_ell(&env.ell)));
    }
    let k0 = d.kappa_limit(KappaSign::Minus).map_err(|e| bad("kappa_minus_limit", e.to_string()))?;
    if !(k0 < 1.0) {
        return Err(bad("kappa_minus_limit_below_1", format!("kappa_minus^0 = {k0}")));
    }
    Ok((env, k0))
}

/// Closed-form lower bound under a lower envelope `ν(ε) >= ε^{-α} ℓ(1/ε)`.
pub fn lower_clow(d: &Distribution, n: u64, r: u64) -> Result<BoundResult> {
    check_nr(n, r)?;
    let (env, k0) = match clow_setup(d) {
        Ok(x) => x,
        Err(c) => return Ok(BoundResult::inapplicable("clow", Side::Lower, c)),
    };
    let conds = clow_conditions(d, &env, k0, n, r)?;
    let (nf, rf, alpha) = (n as f64, r as f64, env.alpha);
    let t = 1.0 + rf - alpha;
    let bracket = (nf * (-d.p_star()).ln_1p()).exp()
        + (1.0 - k0) * gamma_lower(t, 2.0)? / (2f64.powf(1.0 - alpha) * 4f64.powf(1.0 + rf));
    let v = (-rf - ln_factorial(r)).exp() / 2.0 * bracket * env.ell.eval(nf) / nf.powf(1.0 - alpha);
    let mut res = BoundResult::new("clow", Side::Lower, v, Some(1.0 / nf));
    res.conditions = conds;
    Ok(res.settle())
}

/// Smallest `n >= max(2, 1+r)` at which every condition of `clow`
/// holds, or `None` below [`CLOW_N0_CAP`].
pub fn clow_n0(d: &Distribution, r: u64) -> Result<Option<u64>> {
    let Ok((env, k0)) = clow_setup(d) else {
        return Ok(None);
    };
    let holds = |n: u64| -> Result<bool> { Ok(clow_conditions(d, &env, k0, n, r)?.iter().all(|c| c.holds)) };
    let start = 2.max(1 + r);
    if holds(start)? {
        return Ok(Some(start));
    }
    let mut hi = start;
    let mut lo;
    loop {
        if hi >= CLOW_N0_CAP {
            return Ok(None);
        }
        lo = hi;
        hi = (hi * 2).min(CLOW_N0_CAP);
        if holds(hi)? {
            break;
        }
    }
    // every condition is monotone in n
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if holds(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}

/// Accrual-function sandwich for the missing mass:
/// `sup_ε (1-ε)^n F(ε) <= E M_{n,0} <= inf_ε (1-ε)^n + F(ε)`.
pub fn od10_bounds(d: &Distribution, n: u64) -> Result<(BoundResult, BoundResult)> {
    check_nr(n, 0)?;
    let nf = n as f64;
    let pow = |p: f64| (nf * (-p).ln_1p()).exp();
    let mut lower = (0.0, 0.0);
    // ε = 0 and ε = 1 both give 1
    let mut upper = (1.0, 1.0);
    let mut visit = |p: f64, f_at: f64, f_below: f64| {
        let lv = pow(p) * f_at;
        if lv > lower.0 {
            lower = (lv, p);
        }
        let uv = pow(p) + f_below;
        if uv < upper.0 {
            upper = (uv, p);
        }
    };
    match d.groups() {
        Some((groups, _)) => {
            // F(p) includes the atoms of mass p; F(p⁻) does not
            let mut below = 0.0;
            for g in groups.iter().rev() {
                let at = below + g.mass * g.count as f64;
                visit(g.mass, at, below);
                below = at;
            }
        }
        None => {
            let h = atom_horizon(d, nf);
            let mut tails = vec![0.0; h as usize + 1];
            tails[h as usize] = d.tail_mass(h);
            for k in (1..=h as usize).rev() {
                tails[k - 1] = tails[k] + d.mass(k as u64);
            }
            for k in 1..=h {
                visit(d.mass(k), tails[k as usize - 1], tails[k as usize]);
            }
        }
    }
    let lo = BoundResult::new("od10_lower", Side::Lower, lower.0, Some(lower.1));
    let up = BoundResult::new("od10_upper", Side::Upper, upper.0, Some(upper.1));
    Ok((lo, up))
}

/// Missing-mass bound depending on `|S|` (finite) or `L(P)/(c n)`.
pub fn bk12_upper(d: &Distribution, n: u64, c: f64) -> Result<BoundResult> {
    check_nr(n, 0)?;
    let nf = n as f64;
    if let Some(s) = d.support_size() {
        let sf = s as f64;
        let v = if nf <= sf { (-nf / sf).exp() } else { sf / (nf * std::f64::consts::E) };
        return Ok(BoundResult::new("bk12", Side::Upper, v, None).with_condition(ok("finite_support", format!("|S| = {s}"))));
    }
    let lp = d.l_p();
    if !lp.is_finite() {
        return Ok(BoundResult::inapplicable("bk12", Side::Upper, bad("finite_L_P", "L(P) = +inf")));
    }
    if !(c > 0.0) {
        return Err(Error::Domain(format!("the constant c must be positive, got {c}")));
    }
    let mut res = BoundResult::new("bk12", Side::Upper, lp / (c * nf), None)
        .with_condition(ok("finite_L_P", format!("L(P) = {lp}")))
        .with_note(format!("c = {c} is a placeholder: the universal constant has no published numeric value"));
    res.in_sandwich = false;
    Ok(res)
}

/// Log-spaced validation grid on `(0, upto]`.
fn validation_grid(upto: f64) -> impl Iterator<Item = f64> {
    (0..200).map(move |i| upto * 10f64.powf(-12.0 * (1.0 - i as f64 / 199.0)))
}

/// Power-law sandwich for the missing mass under
/// `C₋ ε^{-α} <= ν(ε) <= C₊ ε^{-α}`, the hypothesis being checked on a
/// 200-point log grid over `(0, 1)`.
pub fn accrual_powerlaw_bounds(
    c_minus: f64,
    c_plus: f64,
    alpha: f64,
    n: u64,
    d: &Distribution,
) -> Result<(BoundResult, BoundResult)> {
    accrual_powerlaw_bounds_on(c_minus, c_plus, alpha, n, d, 1.0 - 1e-9)
}

/// As [`accrual_powerlaw_bounds`], validating the hypothesis on `(0, upto]`
/// only. The argument uses the envelope on `(0, max(1/n, (1-α) ln n / n)]`,
/// so `upto` must cover that range.
pub fn accrual_powerlaw_bounds_on(
    c_minus: f64,
    c_plus: f64,
    alpha: f64,
    n: u64,
    d: &Distribution,
    upto: f64,
) -> Result<(BoundResult, BoundResult)> {
    check_nr(n, 0)?;
    if !(c_minus > 0.0 && c_plus > 0.0) {
        return Err(Error::Domain("C_minus and C_plus must be positive".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let nf = n as f64;
    let need = (1.0 / nf).max((1.0 - alpha) * nf.ln() / nf);
    let mut conds = vec![Condition::new(
        "validated_range_covers_need",
        upto >= need,
        format!("validated up to {upto}, need {need}"),
    )];
    let violation = validation_grid(upto.min(1.0)).find(|&e| {
        let nu = d.nu_count(e) as f64;
        let env = e.powf(-alpha);
        nu < c_minus * env * (1.0 - 1e-12) || nu > c_plus * env * (1.0 + 1e-12)
    });
    conds.push(match violation {
        None => ok("power_law_envelope", format!("holds on 200 log-spaced points in (0, {upto}]")),
        Some(e) => bad("power_law_envelope", format!("violated at eps = {e}")),
    });
    let k = 1.0 - alpha;
    let c_lo = (c_minus / k - c_plus).max(0.0);
    let c_hi = k.powf(k) * (c_plus / k - c_minus);
    let rate = nf.powf(-k);
    let lower_v = (nf * (-1.0 / nf).ln_1p()).exp() * c_lo * rate;
    let upper_v = (1.0 + c_hi * nf.ln().powf(k)) * rate;
    let mut lo = BoundResult::new("accrual_lower", Side::Lower, lower_v, Some(1.0 / nf));
    lo.conditions = conds.clone();
    let mut up = BoundResult::new("accrual_upper", Side::Upper, upper_v, Some(k * nf.ln() / nf));
    up.conditions = conds;
    Ok((lo.settle(), up.settle()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LiminfChain {
    /// Index of the selected atom.
    pub a_n: u64,
    pub k_n: u64,
    /// `k^{r+1}/C(n,r) E M_{n,r}`
    pub scaled_em: f64,
    /// `(1-p_a)(1-1/k)^k`
    pub certified_lower: f64,
    pub holds: bool,
}

/// Per-`n` inequality `k^{r+1}/C(n,r) E M_{n,r} >= (1-p_a)(1-1/k)^k` with
/// `a` the first atom of mass at most `1/n` and `k = ⌊1/p_a⌋`.
pub fn liminf_chain(d: &Distribution, n: u64, r: u64) -> Result<LiminfChain> {
    check_nr(n, r)?;
    if d.is_finite() {
        return Err(Error::Inapplicable("the chain needs an infinite support".into()));
    }
    if r >= n {
        return Err(Error::Inapplicable(format!("the chain needs n > r (n = {n}, r = {r})")));
    }
    let a = d.count_above(1.0 / n as f64) + 1;
    let p = d.mass(a);
    let k = (1.0 / p).floor() as u64;
    let kf = k as f64;
    let certified = (1.0 - p) * (kf * (-1.0 / kf).ln_1p()).exp();
    let em = exact_em_certified(d, n, r)?;
    let scale = ((r as f64 + 1.0) * kf.ln() - ln_choose(n as f64, r as f64)).exp();
    let scaled = scale * (em.value - em.certificate);
    Ok(LiminfChain { a_n: a, k_n: k, scaled_em: scale * em.value, certified_lower: certified, holds: scaled >= certified })
}

fn liminf_lower(d: &Distribution, n: u64, r: u64) -> Result<BoundResult> {
    if d.is_finite() || r >= n {
        let why = if d.is_finite() { "support is finite".to_string() } else { format!("r = {r}, n = {n}") };
        return Ok(BoundResult::inapplicable("liminf", Side::Lower, bad("infinite_support_and_n_above_r", why)));
    }
    let a = d.count_above(1.0 / n as f64) + 1;
    let p = d.mass(a);
    let kf = (1.0 / p).floor();
    let certified = (1.0 - p) * (kf * (-1.0 / kf).ln_1p()).exp();
    let v = choose(n, r) * certified / kf.powf(r as f64 + 1.0);
    Ok(BoundResult::new("liminf", Side::Lower, v, Some(p)).with_condition(ok("infinite_support_and_n_above_r", format!("a_n = {a}, k_n = {kf}"))))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SuiteOptions {
    pub b: f64,
    pub beta: Option<f64>,
    pub bk12_c: f64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self { b: DEFAULT_B, beta: None, bk12_c: 1.0 }
    }
}

/// Every bound of this module next to `E M_{n,r}`.
pub fn bound_suite(d: &Distribution, n: u64, r: u64) -> Result<BoundReport> {
    bound_suite_with(d, n, r, &SuiteOptions::default())
}

pub fn bound_suite_with(d: &Distribution, n: u64, r: u64, opts: &SuiteOptions) -> Result<BoundReport> {
    check_nr(n, r)?;
    let exact = exact_em_certified(d, n, r)?;
    let mut bounds = vec![upper_tg(d, n, r, opts.b)?, upper_finite(d, n, r)?];
    for v in [RvVariant::Ctg, RvVariant::Ctg2, RvVariant::Ctg3] {
        bounds.push(upper_rv(d, n, r, v, opts.beta)?);
    }
    bounds.push(upper_tgplus(d, n, r)?);
    bounds.push(lower_low(d, n, r)?);
    bounds.push(lower_clow(d, n, r)?);
    bounds.push(liminf_lower(d, n, r)?);
    let r0 = |tag: &str, side: Side| BoundResult::inapplicable(tag, side, bad("r_is_0", format!("r = {r}")));
    if r == 0 {
        let (lo, up) = od10_bounds(d, n)?;
        bounds.push(lo);
        bounds.push(up);
        bounds.push(bk12_upper(d, n, opts.bk12_c)?);
        let (lo, up) = suite_accrual(d, n)?;
        bounds.push(lo);
        bounds.push(up);
    } else {
        for (tag, side) in [
            ("od10_lower", Side::Lower),
            ("od10_upper", Side::Upper),
            ("bk12", Side::Upper),
            ("accrual_lower", Side::Lower),
            ("accrual_upper", Side::Upper),
        ] {
            bounds.push(r0(tag, side));
        }
    }
    Ok(BoundReport::assemble(d.label(), d.family_params(), n, r, exact.value, exact.certificate, bounds))
}

// power-law sandwich from the two envelopes when both are pure powers
fn suite_accrual(d: &Distribution, n: u64) -> Result<(BoundResult, BoundResult)> {
    let envs = (d.envelope(EnvelopeSide::Lower), d.envelope(EnvelopeSide::Upper));
    if let (Ok(lo), Ok(up)) = envs {
        if let (SlowlyVarying::Constant { c: cm }, SlowlyVarying::Constant { c: cp }) = (lo.ell, up.ell) {
            if lo.alpha == up.alpha && lo.alpha > 0.0 && lo.alpha < 1.0 {
                let upto = lo.valid_up_to.min(up.valid_up_to);
                return accrual_powerlaw_bounds_on(cm, cp, lo.alpha, n, d, upto);
            }
        }
    }
    let c = bad("power_law_envelopes", "needs constant-ell envelopes on both sides with alpha in (0,1)");
    Ok((BoundResult::inapplicable("accrual_lower", Side::Lower, c.clone()), BoundResult::inapplicable("accrual_upper", Side::Upper, c)))
}

#[cfg(test)]
mod tests;
