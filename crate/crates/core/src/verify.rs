//! Residual checkers for the braid, Hecke, spectral and hermiticity
//! identities.
//!
//! Twisted equations are checked in shift form: for a momentum-dependent
//! builder `F`,
//!
//! ```text
//! S(p) = Σ_c F(p + h e_c) ⊗ E_cc,   T(p) = 1 ⊗ F(p),   S T S = T S T.
//! ```
//!
//! Checkers report mathematical failure in the returned [`CheckReport`];
//! they only return `Err` for malformed input or a resonant momentum.

use crate::coefficients::{fmt_momentum, CoefficientScheme, Gauge};
use crate::error::{Error, Result};
use crate::momentum::Momentum;
use crate::report::{aggregate, fmt_f64, fmt_scalar, CheckReport, SubResidual};
use crate::rmatrix::{
    baxterize_unchecked, build_dynamical_r, build_yangian_base, build_yangian_r,
    multiplicative_from_additive,
};
use crate::tensor::{embed, kron, permutation, re, residual, residual_with_reference, Operator, Residual, Scalar, Slot};

pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// Names accepted by the suite, in report order.
pub const CHECK_NAMES: [&str; 10] = [
    "additive_dybe",
    "constant_ybe",
    "constraints",
    "dynamical_ybe",
    "hecke",
    "hermiticity",
    "recursions",
    "reflection",
    "spectral_dybe",
    "unitarity",
];

fn momentum_digest(m: &Momentum) -> String {
    format!("N={} p={}", m.len(), fmt_momentum(m))
}

fn require_arity2(op: &Operator, n: usize, what: &str) -> Result<()> {
    if op.arity() != 2 || op.local_dim() != n {
        return Err(Error::DimensionMismatch(format!(
            "{what}: expected an arity-2 operator on C^{n}, got arity {} on C^{}",
            op.arity(),
            op.local_dim()
        )));
    }
    Ok(())
}

fn nonzero(y: Scalar, name: &str) -> Result<()> {
    if y.norm() == 0.0 || !y.re.is_finite() || !y.im.is_finite() {
        return Err(Error::InvalidParameter(format!("spectral parameter {name} must be finite and nonzero")));
    }
    Ok(())
}

/// `Σ_c blocks[c] ⊗ E_cc`.
fn assemble_shifted(blocks: &[Operator]) -> Result<Operator> {
    let n = blocks.len();
    let mut total = Operator::zeros(n, 3)?;
    for (c, block) in blocks.iter().enumerate() {
        require_arity2(block, n, "shifted_embed")?;
        total = total.try_add(&kron(block, &Operator::matrix_unit(n, c, c)?)?)?;
    }
    Ok(total)
}

/// `F(p + h e_c)` for every `c`.
fn shifted_blocks<F>(builder: &F, m: &Momentum) -> Result<Vec<Operator>>
where
    F: Fn(&Momentum) -> Result<Operator>,
{
    (0..m.len()).map(|c| builder(&m.shift(c, 1)?)).collect()
}

/// `S(p) = Σ_c F(p + h e_c)_{12} ⊗ E_cc`.
pub fn shifted_embed<F>(builder: F, m: &Momentum) -> Result<Operator>
where
    F: Fn(&Momentum) -> Result<Operator>,
{
    assemble_shifted(&shifted_blocks(&builder, m)?)
}

/// `T(p) = 1 ⊗ F(p)`.
fn plain_embed<F>(builder: &F, m: &Momentum) -> Result<Operator>
where
    F: Fn(&Momentum) -> Result<Operator>,
{
    let f = builder(m)?;
    require_arity2(&f, m.len(), "builder")?;
    embed(&f, Slot::S23, m.len())
}

fn hecke_sub(a: &Operator, lambda: Scalar) -> Result<Residual> {
    let lhs = a.try_mul(a)?;
    let rhs = a.scale(lambda).add_identity(re(1.0));
    residual(&lhs, &rhs)
}

/// `A² = λA + 1`.
pub fn check_hecke(a: &Operator, lambda: Scalar, tol: f64) -> Result<CheckReport> {
    let digest = format!("N={} lambda={}", a.local_dim(), fmt_scalar(lambda));
    Ok(CheckReport::new("hecke", hecke_sub(a, lambda)?, tol, digest))
}

/// `A² = f λ A + f²`, the Hecke relation of `A = f R̂`.
pub fn check_hecke_normalized(a: &Operator, lambda: Scalar, factor: Scalar, tol: f64) -> Result<CheckReport> {
    if factor.norm() == 0.0 {
        return Err(Error::InvalidParameter("normalization factor must be nonzero".into()));
    }
    let digest = format!("N={} lambda={} factor={}", a.local_dim(), fmt_scalar(lambda), fmt_scalar(factor));
    Ok(CheckReport::new("hecke", hecke_sub(&a.scale(factor.inv()), lambda)?, tol, digest))
}

/// `R̂ R̂′ R̂ = R̂′ R̂ R̂′` with `R̂ = R̂_12`, `R̂′ = R̂_23`.
pub fn check_constant_ybe(r: &Operator, tol: f64) -> Result<CheckReport> {
    let n = r.local_dim();
    require_arity2(r, n, "check_constant_ybe")?;
    let r12 = embed(r, Slot::S12, n)?;
    let r23 = embed(r, Slot::S23, n)?;
    let lhs = r12.try_mul(&r23)?.try_mul(&r12)?;
    let rhs = r23.try_mul(&r12)?.try_mul(&r23)?;
    Ok(CheckReport::new("constant_ybe", residual(&lhs, &rhs)?, tol, format!("N={n}")))
}

/// `S T S = T S T`.
pub fn check_dynamical_ybe<F>(builder: F, m: &Momentum, tol: f64) -> Result<CheckReport>
where
    F: Fn(&Momentum) -> Result<Operator>,
{
    let s = shifted_embed(&builder, m)?;
    let t = plain_embed(&builder, m)?;
    let lhs = s.try_mul(&t)?.try_mul(&s)?;
    let rhs = t.try_mul(&s)?.try_mul(&t)?;
    Ok(CheckReport::new("dynamical_ybe", residual(&lhs, &rhs)?, tol, momentum_digest(m)))
}

/// Shared core of the spectral and additive equations:
/// `S(x) T(x∘x′) S(x′) = T(x′) S(x∘x′) T(x)`.
fn spectral_equation<F>(family: F, m: &Momentum, x: Scalar, x2: Scalar, combined: Scalar) -> Result<Residual>
where
    F: Fn(&Momentum, Scalar) -> Result<Operator>,
{
    let s = |w: Scalar| shifted_embed(|p: &Momentum| family(p, w), m);
    let t = |w: Scalar| plain_embed(&|p: &Momentum| family(p, w), m);
    let (s_x, s_x2, s_c) = (s(x)?, s(x2)?, s(combined)?);
    let (t_x, t_x2, t_c) = (t(x)?, t(x2)?, t(combined)?);
    let lhs = s_x.try_mul(&t_c)?.try_mul(&s_x2)?;
    let rhs = t_x2.try_mul(&s_c)?.try_mul(&t_x)?;
    let reference = (s_x.frobenius_norm() * t_c.frobenius_norm() * s_x2.frobenius_norm())
        .max(t_x2.frobenius_norm() * s_c.frobenius_norm() * t_x.frobenius_norm());
    residual_with_reference(&lhs, &rhs, reference)
}

/// Spectral twisted YBE for the baxterization `y⁻¹ F − y (F − λ)` of a Hecke
/// builder `F`. The Hecke residual of `F(p)` is reported alongside, since the
/// baxterization relies on it.
pub fn check_spectral_dybe<F>(
    builder: F,
    m: &Momentum,
    y: Scalar,
    z: Scalar,
    lambda: Scalar,
    tol: f64,
) -> Result<CheckReport>
where
    F: Fn(&Momentum) -> Result<Operator>,
{
    nonzero(y, "y")?;
    nonzero(z, "z")?;
    let family = |p: &Momentum, w: Scalar| Ok(baxterize_unchecked(&builder(p)?, w, lambda));
    let equation = spectral_equation(family, m, y, z, y * z)?;
    let hecke = hecke_sub(&builder(m)?, lambda)?;
    let parts = vec![
        SubResidual { label: "equation".into(), residual: equation },
        SubResidual { label: "hecke".into(), residual: hecke },
    ];
    let digest = format!("{} y={} z={}", momentum_digest(m), fmt_scalar(y), fmt_scalar(z));
    Ok(aggregate("spectral_dybe", parts, tol, digest))
}

/// Additive twisted YBE for `θ R̂⁰(p) − 1`.
pub fn check_additive_dybe(m: &Momentum, theta: Scalar, theta2: Scalar, h: f64, tol: f64) -> Result<CheckReport> {
    if (m.h() - h).abs() > 1e-12 * h {
        return Err(Error::InvalidParameter(format!(
            "momentum h = {} differs from h = {h}",
            m.h()
        )));
    }
    check_additive_dybe_with(build_yangian_r, m, theta, theta2, tol)
}

/// Additive twisted YBE for an arbitrary family `θ ↦ F(p, θ)`.
pub fn check_additive_dybe_with<F>(family: F, m: &Momentum, theta: Scalar, theta2: Scalar, tol: f64) -> Result<CheckReport>
where
    F: Fn(&Momentum, Scalar) -> Result<Operator>,
{
    let res = spectral_equation(family, m, theta, theta2, theta + theta2)?;
    let digest = format!("{} theta={} theta2={}", momentum_digest(m), fmt_scalar(theta), fmt_scalar(theta2));
    Ok(CheckReport::new("additive_dybe", res, tol, digest))
}

/// `S² T S² T = T S² T S²` and `T² S T² S = S T² S T²`.
pub fn check_reflection<F>(builder: F, m: &Momentum, tol: f64) -> Result<CheckReport>
where
    F: Fn(&Momentum) -> Result<Operator>,
{
    let s = shifted_embed(&builder, m)?;
    let t = plain_embed(&builder, m)?;
    let s2 = s.try_mul(&s)?;
    let t2 = t.try_mul(&t)?;
    let chain = |ops: [&Operator; 4]| -> Result<Operator> {
        ops[0].try_mul(ops[1])?.try_mul(ops[2])?.try_mul(ops[3])
    };
    let a = residual(&chain([&s2, &t, &s2, &t])?, &chain([&t, &s2, &t, &s2])?)?;
    let b = residual(&chain([&t2, &s, &t2, &s])?, &chain([&s, &t2, &s, &t2])?)?;
    let parts = vec![
        SubResidual { label: "shifted_squared".into(), residual: a },
        SubResidual { label: "plain_squared".into(), residual: b },
    ];
    Ok(aggregate("reflection", parts, tol, momentum_digest(m)))
}

/// `λ² − (y − y⁻¹)²`.
pub fn unitarity_scalar(y: Scalar, lambda: Scalar) -> Scalar {
    lambda * lambda - (y - y.inv()).powi(2)
}

/// `R̂(y) R̂(y⁻¹) = (λ² − (y − y⁻¹)²) · 1` for the baxterization of `base`.
pub fn check_unitarity(base: &Operator, y: Scalar, lambda: Scalar, tol: f64) -> Result<CheckReport> {
    nonzero(y, "y")?;
    let (forward, backward) = (baxterize_unchecked(base, y, lambda), baxterize_unchecked(base, y.inv(), lambda));
    let lhs = forward.try_mul(&backward)?;
    let rhs = Operator::identity(base.local_dim(), base.arity())?.scale(unitarity_scalar(y, lambda));
    // At y = ±q^{±1} the scalar vanishes and both sides are pure roundoff.
    let reference = forward.frobenius_norm() * backward.frobenius_norm();
    let digest = format!("N={} y={} lambda={}", base.local_dim(), fmt_scalar(y), fmt_scalar(lambda));
    Ok(CheckReport::new("unitarity", residual_with_reference(&lhs, &rhs, reference)?, tol, digest))
}

/// `R† = P R P` for `R = P R̂`.
pub fn hermiticity_residual(rhat: &Operator) -> Result<Residual> {
    let p = permutation(rhat.local_dim())?;
    let r = p.try_mul(rhat)?;
    let swapped = p.try_mul(&r)?.try_mul(&p)?;
    residual(&r.adjoint(), &swapped)
}

/// Why `check_hermiticity` does not apply, if it does not.
fn hermiticity_domain(scheme: &CoefficientScheme, m: &Momentum) -> Option<String> {
    let q = scheme.sig().q();
    if q.im != 0.0 {
        return Some(format!("requires real q, got {}", fmt_scalar(q)));
    }
    if q.re <= 1.0 {
        return Some(format!("requires q > 1, got {}", fmt_f64(q.re)));
    }
    if scheme.gauge() != Gauge::Unitary {
        return Some("requires the unitary gauge".into());
    }
    let sig = scheme.sig();
    for i in 0..sig.n() {
        for j in (i + 1)..sig.n() {
            if sig.grading(i) == sig.grading(j) {
                let d = scheme.pair_argument(m, i, j);
                if d.abs() <= 1.0 {
                    return Some(format!(
                        "|d| = {} <= 1 for pair ({i},{j}), a_ij is not real",
                        fmt_f64(d.abs())
                    ));
                }
            }
        }
    }
    None
}

/// Hermiticity of `R(p) = P R̂(p)`; outside its domain the report is a skip
/// with the reason.
pub fn check_hermiticity(scheme: &CoefficientScheme, m: &Momentum, tol: f64) -> Result<CheckReport> {
    let digest = format!("{} {}", scheme.digest(), fmt_momentum(m));
    if let Some(reason) = hermiticity_domain(scheme, m) {
        return Ok(CheckReport::skipped("hermiticity", reason, tol, digest));
    }
    let rhat = build_dynamical_r(scheme, m)?;
    Ok(CheckReport::new("hermiticity", hermiticity_residual(&rhat)?, tol, digest))
}

/// `R̂(p, y)` for the canonical unitary `GL_q(N)` scheme at `q = exp(γh)`,
/// `y = −exp(λθ/2)`, divided by `λ`.
fn scaled_trig(m: &Momentum, theta: Scalar, gamma: f64) -> Result<Operator> {
    use crate::coefficients::{BZero, GradingSignature};
    let q = re((gamma * m.h()).exp());
    let scheme = CoefficientScheme::new(GradingSignature::gl(m.len(), q)?, BZero::Canonical, Gauge::Unitary, m.h())?;
    let lambda = scheme.lambda();
    let y = multiplicative_from_additive(theta, lambda);
    Ok(baxterize_unchecked(&build_dynamical_r(&scheme, m)?, y, lambda).scale(lambda.inv()))
}

fn absolute_report(name: &str, a: &Operator, b: &Operator, tol: f64, digest: String) -> Result<CheckReport> {
    let absolute = residual(a, b)?.absolute;
    Ok(CheckReport::new(name, Residual { absolute, relative: absolute }, tol, digest))
}

/// `‖R̂(p, y)/λ − (θ R̂⁰(p) − 1)‖_F` as `γ → 0` at fixed `h`. The report
/// carries the absolute norm in both residual fields.
pub fn check_rational_limit(m: &Momentum, theta: Scalar, gamma: f64, tol: f64) -> Result<CheckReport> {
    let lhs = scaled_trig(m, theta, gamma)?;
    let target = build_yangian_r(m, theta)?;
    let digest = format!("{} theta={} gamma={}", momentum_digest(m), fmt_scalar(theta), fmt_f64(gamma));
    absolute_report("rational_limit", &lhs, &target, tol, digest)
}

/// `‖R̂(p, y)/λ − (θ P − 1)‖_F` as `h → 0` at fixed `γ`. The report carries
/// the absolute norm in both residual fields.
pub fn check_classical_limit(m: &Momentum, theta: Scalar, gamma: f64, tol: f64) -> Result<CheckReport> {
    let lhs = scaled_trig(m, theta, gamma)?;
    let target = permutation(m.len())?.scale(theta).add_identity(re(-1.0));
    let digest = format!("{} theta={} gamma={}", momentum_digest(m), fmt_scalar(theta), fmt_f64(gamma));
    absolute_report("classical_limit", &lhs, &target, tol, digest)
}

/// `R̂⁰(p)² = 1`, the involution property of the rational base matrix.
pub fn check_rational_involution(m: &Momentum, tol: f64) -> Result<CheckReport> {
    let r0 = build_yangian_base(m)?;
    let sq = r0.try_mul(&r0)?;
    let id = Operator::identity(m.len(), 2)?;
    Ok(CheckReport::new("rational_involution", residual(&sq, &id)?, tol, momentum_digest(m)))
}
