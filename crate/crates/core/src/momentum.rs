//! Momenta `p_1..p_N`, the Planck constant `h`, and the discrete shifts
//! `p_k → p_k + h` through which conjugation by the coordinate exponentials
//! acts. The coordinates themselves are never materialised: every twisted
//! identity is checked in its shift form.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coefficients::CoefficientScheme;
use crate::error::{Error, Result};

pub const TRACELESS_TOL: f64 = 1e-12;

/// Full restarts before [`random_generic`] gives up.
pub const MAX_SAMPLING_ATTEMPTS: usize = 1_000;

const ATTEMPTS_PER_COORDINATE: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Momentum {
    p: Vec<f64>,
    h: f64,
    traceless: bool,
}

impl Momentum {
    pub fn new(p: Vec<f64>, h: f64) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidParameter(format!("h must be positive and finite, got {h}")));
        }
        if p.is_empty() {
            return Err(Error::InvalidParameter("momentum needs at least one component".into()));
        }
        if p.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("momenta must be finite".into()));
        }
        Ok(Self { p, h, traceless: false })
    }

    /// Momentum constrained to `Σ p_i = 0`.
    pub fn traceless(p: Vec<f64>, h: f64) -> Result<Self> {
        let sum: f64 = p.iter().sum();
        if sum.abs() >= TRACELESS_TOL {
            return Err(Error::InvalidParameter(format!(
                "traceless momentum has Σp = {sum:e}"
            )));
        }
        let mut m = Self::new(p, h)?;
        m.traceless = true;
        Ok(m)
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn is_traceless(&self) -> bool {
        self.traceless
    }

    /// `p_k → p_k + steps·h` (0-based `k`). The sum rule is lost, so the
    /// traceless flag is dropped.
    pub fn shift(&self, k: usize, steps: i32) -> Result<Self> {
        if k >= self.p.len() {
            return Err(Error::IndexOutOfRange { index: k, len: self.p.len() });
        }
        let mut p = self.p.clone();
        p[k] += f64::from(steps) * self.h;
        Ok(Self { p, h: self.h, traceless: false })
    }

    /// All momenta and `h` multiplied by `factor`; ratios `p/h` are preserved.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let mut m = Self::new(self.p.iter().map(|x| x * factor).collect(), self.h * factor)?;
        m.traceless = self.traceless;
        Ok(m)
    }

    /// Every point reachable by shifting at most two coordinates by up to
    /// `±max_steps` each (the base point included).
    pub fn shift_neighbourhood(&self, max_steps: i32) -> Result<Vec<Self>> {
        let n = self.p.len();
        let steps: Vec<i32> = (-max_steps..=max_steps).collect();
        let mut out = vec![self.clone()];
        for a in 0..n {
            for &sa in steps.iter().filter(|&&s| s != 0) {
                let once = self.shift(a, sa)?;
                for b in (a + 1)..n {
                    for &sb in steps.iter().filter(|&&s| s != 0) {
                        out.push(once.shift(b, sb)?);
                    }
                }
                out.push(once);
            }
        }
        Ok(out)
    }
}

pub fn shift(m: &Momentum, k: usize, steps: i32) -> Result<Momentum> {
    m.shift(k, steps)
}

/// Separation from `hℤ` that [`random_generic`] guarantees: `h/10` up to
/// `N = 4`, `h/(4N)` beyond. The `2N` residues `±p_i mod h` cannot all stay
/// `h/10` apart once `N > 5`.
pub fn generic_margin(n: usize, h: f64) -> f64 {
    if n <= 4 {
        h / 10.0
    } else {
        h / (4 * n) as f64
    }
}

fn distance_to_lattice(x: f64, h: f64) -> f64 {
    let t = x / h;
    (t - t.round()).abs() * h
}

/// Seeded momenta whose pairwise differences and sums all stay at least
/// [`generic_margin`] (`h/10` for `N ≤ 4`) away from `hℤ`. Integer shifts preserve that distance, so every
/// shifted neighbour of the output is generic as well.
///
/// Coordinates are drawn one at a time from `[-scale, scale]`, each
/// re-drawn until it is compatible with the ones already accepted.
pub fn random_generic(n: usize, h: f64, seed: u64, scale: f64) -> Result<Momentum> {
    if n == 0 {
        return Err(Error::InvalidParameter("N must be at least 1".into()));
    }
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::InvalidParameter(format!("h must be positive, got {h}")));
    }
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::InvalidParameter(format!("scale must be positive, got {scale}")));
    }
    let margin = generic_margin(n, h);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let compatible = |x: f64, accepted: &[f64]| {
        accepted.iter().all(|&y| {
            distance_to_lattice(x - y, h) >= margin && distance_to_lattice(x + y, h) >= margin
        })
    };
    // Earlier coordinates can exclude every residue class mod h for a later
    // one, so a stuck draw restarts the whole vector.
    for _ in 0..MAX_SAMPLING_ATTEMPTS {
        let mut p: Vec<f64> = Vec::with_capacity(n);
        while p.len() < n {
            let next = (0..ATTEMPTS_PER_COORDINATE)
                .map(|_| rng.gen_range(-scale..=scale))
                .find(|&x| compatible(x, &p));
            match next {
                Some(x) => p.push(x),
                None => break,
            }
        }
        if p.len() == n {
            return Momentum::new(p, h);
        }
    }
    Err(Error::SamplingFailed(MAX_SAMPLING_ATTEMPTS))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OffendingPair {
    pub i: usize,
    pub j: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonanceReport {
    pub ok: bool,
    pub offending_pairs: Vec<OffendingPair>,
}

/// Flags every pair `(i, j)` whose coefficient argument (`(p_i − p_j)/h` for
/// equal grading, `(p_i + p_j)/h` for opposite grading) lies within
/// `margin/h` of a pole of `b_ij` for the scheme's `b⁰`.
pub fn resonance_check(m: &Momentum, scheme: &CoefficientScheme, margin: f64) -> ResonanceReport {
    let n = m.len().min(scheme.sig().n());
    let mut offending_pairs = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let x = scheme.pair_argument(m, i, j);
            let tol = margin / m.h();
            if let Some(dist) = scheme.pole_distance(m, i, j) {
                if dist < tol {
                    let combo = if scheme.sig().grading(i) == scheme.sig().grading(j) {
                        "(p_i - p_j)/h"
                    } else {
                        "(p_i + p_j)/h"
                    };
                    offending_pairs.push(OffendingPair {
                        i,
                        j,
                        reason: format!(
                            "{combo} = {x:.6} is {dist:.3e} from a pole (margin {tol:.3e})"
                        ),
                    });
                }
            }
        }
    }
    ResonanceReport { ok: offending_pairs.is_empty(), offending_pairs }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{BZero, CoefficientScheme, Gauge, GradingSignature};
    use crate::tensor::re;

    fn canonical(n: usize, k: usize, q: f64, h: f64) -> CoefficientScheme {
        let sig = GradingSignature::new(n, k, re(q)).unwrap();
        CoefficientScheme::new(sig, BZero::Canonical, Gauge::Unitary, h).unwrap()
    }

    #[test]
    fn shift_examples() {
        let m = Momentum::new(vec![0.4, -0.4], 0.1).unwrap();
        let s = m.shift(0, 1).unwrap();
        assert!((s.p()[0] - 0.5).abs() < 1e-15);
        assert_eq!(s.p()[1].to_bits(), (-0.4f64).to_bits());
        assert!(matches!(m.shift(2, 1), Err(Error::IndexOutOfRange { index: 2, len: 2 })));
    }

    #[test]
    fn inverse_and_commuting_shifts() {
        let m = Momentum::new(vec![0.25, -0.5, 0.125], 0.25).unwrap();
        assert_eq!(m.shift(1, 1).unwrap().shift(1, -1).unwrap(), m);
        let a = m.shift(0, 3).unwrap().shift(1, -2).unwrap();
        let b = m.shift(1, -2).unwrap().shift(0, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn shift_drops_traceless_flag() {
        let m = Momentum::traceless(vec![0.3, -0.3], 0.1).unwrap();
        assert!(m.is_traceless());
        assert!(!m.shift(0, 1).unwrap().is_traceless());
        assert!(Momentum::traceless(vec![0.3, -0.2], 0.1).is_err());
    }

    #[test]
    fn rejects_bad_h() {
        assert!(Momentum::new(vec![0.0], 0.0).is_err());
        assert!(Momentum::new(vec![0.0], -1.0).is_err());
        assert!(random_generic(2, 0.0, 1, 1.0).is_err());
        assert!(random_generic(2, 0.1, 1, 0.0).is_err());
    }

    #[test]
    fn random_generic_is_deterministic() {
        let a = random_generic(4, 0.1, 42, 1.0).unwrap();
        let b = random_generic(4, 0.1, 42, 1.0).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, random_generic(4, 0.1, 43, 1.0).unwrap());
    }

    #[test]
    fn random_generic_single_component() {
        let m = random_generic(1, 0.1, 5, 1.0).unwrap();
        assert_eq!(m.len(), 1);
        assert!(resonance_check(&m, &canonical(1, 1, 2.0, 0.1), 0.01).ok);
    }

    #[test]
    fn random_generic_passes_resonance_check() {
        for seed in 0..20 {
            let m = random_generic(4, 0.1, seed, 1.0).unwrap();
            for (n, k) in [(4, 4), (4, 2)] {
                let report = resonance_check(&m, &canonical(n, k, 2.0, 0.1), 0.1 / 10.0);
                assert!(report.ok, "seed {seed}: {:?}", report.offending_pairs);
            }
        }
    }

    #[test]
    fn random_generic_plus_single_shift_stays_generic() {
        for seed in 0..20 {
            let m = random_generic(3, 0.1, seed, 1.0).unwrap();
            for k in 0..3 {
                for s in [-1, 1] {
                    let shifted = m.shift(k, s).unwrap();
                    for kk in [3, 1] {
                        assert!(resonance_check(&shifted, &canonical(3, kk, 2.0, 0.1), 0.1 / 20.0).ok);
                    }
                }
            }
        }
    }

    #[test]
    fn pathological_scale_fails() {
        assert!(matches!(random_generic(3, 1.0, 1, 1e-9), Err(Error::SamplingFailed(_))));
    }

    #[test]
    fn resonance_examples() {
        let scheme = canonical(2, 2, 2.0, 1.0);
        let m = Momentum::new(vec![0.5, -0.5], 1.0).unwrap();
        assert!(resonance_check(&m, &scheme, 0.1).ok);

        let m = Momentum::new(vec![0.3, 0.3], 1.0).unwrap();
        let r = resonance_check(&m, &scheme, 0.1);
        assert!(!r.ok);
        assert_eq!((r.offending_pairs[0].i, r.offending_pairs[0].j), (0, 1));

        let mixed = canonical(2, 1, 2.0, 1.0);
        let m = Momentum::new(vec![0.2, -0.2], 1.0).unwrap();
        let r = resonance_check(&m, &mixed, 0.1);
        assert!(!r.ok);
        assert!(r.offending_pairs[0].reason.contains("p_i + p_j"));
        // The same point is harmless when both indices share a grading.
        assert!(resonance_check(&m, &scheme, 0.1).ok);
    }

    #[test]
    fn random_generic_survives_dead_ends() {
        for seed in 0..500 {
            random_generic(4, 0.1, seed, 1.0).unwrap();
        }
        for n in 5..=8 {
            random_generic(n, 0.1, 1, 1.0).unwrap();
        }
    }

    #[test]
    fn neighbourhood_size() {
        let m = Momentum::new(vec![0.1, 0.2, 0.3], 0.1).unwrap();
        // base + 3·4 single shifts + 3 pairs · 16 double shifts
        assert_eq!(m.shift_neighbourhood(2).unwrap().len(), 1 + 12 + 48);
    }
}
