//! Dense complex operators on tensor powers `(C^N)^{⊗k}`, `k ≤ 3`.
//!
//! Composite basis indices are big-endian: `(i_1, ..., i_k) ↦ Σ i_m N^{k-m}`,
//! so the first tensor factor is the most significant digit.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Scalar = Complex64;

pub const MAX_ARITY: usize = 3;

/// Largest local dimension the crate is sized for (arity-3 operators of 512×512).
pub const MAX_LOCAL_DIM: usize = 8;

pub fn c(re: f64, im: f64) -> Scalar {
    Scalar::new(re, im)
}

pub fn re(x: f64) -> Scalar {
    Scalar::new(x, 0.0)
}

/// Flattens a multi-index into the composite big-endian index.
pub fn flat_index(indices: &[usize], local_dim: usize) -> usize {
    indices.iter().fold(0, |acc, &i| acc * local_dim + i)
}

/// Inverse of [`flat_index`] for a fixed arity.
pub fn split_index(mut flat: usize, local_dim: usize, arity: usize) -> Vec<usize> {
    let mut out = vec![0; arity];
    for slot in out.iter_mut().rev() {
        *slot = flat % local_dim;
        flat /= local_dim;
    }
    out
}

#[derive(Clone, PartialEq)]
pub struct Operator {
    local_dim: usize,
    arity: usize,
    matrix: DMatrix<Scalar>,
}

impl fmt::Debug for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Operator")
            .field("local_dim", &self.local_dim)
            .field("arity", &self.arity)
            .field("matrix", &self.matrix)
            .finish()
    }
}

fn check_shape(local_dim: usize, arity: usize) -> Result<usize> {
    if local_dim == 0 {
        return Err(Error::InvalidParameter("local dimension must be positive".into()));
    }
    if arity == 0 || arity > MAX_ARITY {
        return Err(Error::InvalidParameter(format!(
            "arity {arity} outside 1..={MAX_ARITY}"
        )));
    }
    Ok(local_dim.pow(arity as u32))
}

impl Operator {
    pub fn from_matrix(local_dim: usize, arity: usize, matrix: DMatrix<Scalar>) -> Result<Self> {
        let dim = check_shape(local_dim, arity)?;
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch(format!(
                "expected {dim}×{dim} for N={local_dim}, k={arity}, got {}×{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidParameter("operator entries must be finite".into()));
        }
        Ok(Self { local_dim, arity, matrix })
    }

    /// Builds an operator from a function of the composite (row, column) indices.
    pub fn from_fn(
        local_dim: usize,
        arity: usize,
        f: impl FnMut(usize, usize) -> Scalar,
    ) -> Result<Self> {
        let dim = check_shape(local_dim, arity)?;
        Self::from_matrix(local_dim, arity, DMatrix::from_fn(dim, dim, f))
    }

    pub fn zeros(local_dim: usize, arity: usize) -> Result<Self> {
        let dim = check_shape(local_dim, arity)?;
        Ok(Self { local_dim, arity, matrix: DMatrix::zeros(dim, dim) })
    }

    pub fn identity(local_dim: usize, arity: usize) -> Result<Self> {
        let dim = check_shape(local_dim, arity)?;
        Ok(Self { local_dim, arity, matrix: DMatrix::identity(dim, dim) })
    }

    /// The matrix unit `E_ij` on `C^N` (`E_ij e_k = δ_jk e_i`).
    pub fn matrix_unit(local_dim: usize, i: usize, j: usize) -> Result<Self> {
        for idx in [i, j] {
            if idx >= local_dim {
                return Err(Error::IndexOutOfRange { index: idx, len: local_dim });
            }
        }
        let mut op = Self::zeros(local_dim, 1)?;
        op.matrix[(i, j)] = Scalar::new(1.0, 0.0);
        Ok(op)
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Scalar> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<Scalar> {
        self.matrix
    }

    pub fn entry(&self, row: usize, col: usize) -> Scalar {
        self.matrix[(row, col)]
    }

    /// Entry addressed by multi-indices `(i_1..i_k)` and `(j_1..j_k)`.
    pub fn get(&self, row: &[usize], col: &[usize]) -> Scalar {
        debug_assert_eq!(row.len(), self.arity);
        debug_assert_eq!(col.len(), self.arity);
        self.matrix[(flat_index(row, self.local_dim), flat_index(col, self.local_dim))]
    }

    pub fn set(&mut self, row: usize, col: usize, value: Scalar) {
        self.matrix[(row, col)] = value;
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.local_dim == other.local_dim && self.arity == other.arity
    }

    fn require_same_shape(&self, other: &Self, what: &str) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::DimensionMismatch(format!(
                "{what}: (N={}, k={}) vs (N={}, k={})",
                self.local_dim, self.arity, other.local_dim, other.arity
            )))
        }
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.require_same_shape(other, "product")?;
        Ok(self.with_matrix(complex_product(&self.matrix, &other.matrix)))
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.require_same_shape(other, "sum")?;
        Ok(self.with_matrix(&self.matrix + &other.matrix))
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.require_same_shape(other, "difference")?;
        Ok(self.with_matrix(&self.matrix - &other.matrix))
    }

    fn with_matrix(&self, matrix: DMatrix<Scalar>) -> Self {
        Self { local_dim: self.local_dim, arity: self.arity, matrix }
    }

    pub fn scale(&self, factor: Scalar) -> Self {
        self.with_matrix(&self.matrix * factor)
    }

    /// `self + shift·I`.
    pub fn add_identity(&self, shift: Scalar) -> Self {
        let mut out = self.clone();
        for d in 0..out.dim() {
            out.matrix[(d, d)] += shift;
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        self.with_matrix(self.matrix.adjoint())
    }

    pub fn trace(&self) -> Scalar {
        self.matrix.trace()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.matrix.norm()
    }

    pub fn is_block_diagonal_in_last_factor(&self, tol: f64) -> bool {
        let n = self.local_dim;
        let dim = self.dim();
        (0..dim).all(|r| (0..dim).all(|c| r % n == c % n || self.matrix[(r, c)].norm() <= tol))
    }

    /// Copy with a single entry shifted by `delta`; used for negative controls.
    pub fn perturbed(&self, row: usize, col: usize, delta: Scalar) -> Self {
        let mut out = self.clone();
        out.matrix[(row, col)] += delta;
        out
    }
}

impl Mul for &Operator {
    type Output = Operator;

    fn mul(self, rhs: &Operator) -> Operator {
        self.try_mul(rhs).expect("operator product shape mismatch")
    }
}

impl Add for &Operator {
    type Output = Operator;

    fn add(self, rhs: &Operator) -> Operator {
        self.try_add(rhs).expect("operator sum shape mismatch")
    }
}

impl Sub for &Operator {
    type Output = Operator;

    fn sub(self, rhs: &Operator) -> Operator {
        self.try_sub(rhs).expect("operator difference shape mismatch")
    }
}

impl Mul<Scalar> for &Operator {
    type Output = Operator;

    fn mul(self, rhs: Scalar) -> Operator {
        self.scale(rhs)
    }
}

/// From this size on, a complex product is done as four real ones, which
/// go through nalgebra's blocked `f64` kernel.
const SPLIT_PRODUCT_DIM: usize = 16;

fn complex_product(a: &DMatrix<Scalar>, b: &DMatrix<Scalar>) -> DMatrix<Scalar> {
    if a.nrows() < SPLIT_PRODUCT_DIM {
        return a * b;
    }
    let (ar, ai) = (a.map(|z| z.re), a.map(|z| z.im));
    let (br, bi) = (b.map(|z| z.re), b.map(|z| z.im));
    let real = &ar * &br - &ai * &bi;
    let imag = &ar * &bi + &ai * &br;
    real.zip_map(&imag, Scalar::new)
}

/// Tensor product `A ⊗ B`.
pub fn kron(a: &Operator, b: &Operator) -> Result<Operator> {
    if a.local_dim != b.local_dim {
        return Err(Error::DimensionMismatch(format!(
            "kron of local dimensions {} and {}",
            a.local_dim, b.local_dim
        )));
    }
    if a.arity + b.arity > MAX_ARITY {
        return Err(Error::ArityOverflow { left: a.arity, right: b.arity });
    }
    Ok(Operator {
        local_dim: a.local_dim,
        arity: a.arity + b.arity,
        matrix: a.matrix.kronecker(&b.matrix),
    })
}

/// The flip `P` on `C^N ⊗ C^N`: `P[(i,j),(k,l)] = δ_il δ_jk`.
pub fn permutation(local_dim: usize) -> Result<Operator> {
    let n = local_dim;
    Operator::from_fn(n, 2, |r, col| {
        let (i, j) = (r / n, r % n);
        let (k, l) = (col / n, col % n);
        if i == l && j == k {
            Scalar::new(1.0, 0.0)
        } else {
            Scalar::new(0.0, 0.0)
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Slot {
    S12,
    S23,
}

/// Places an arity-2 operator on spaces (1,2) or (2,3) of `(C^N)^{⊗3}`.
pub fn embed(a: &Operator, slot: Slot, local_dim: usize) -> Result<Operator> {
    if a.arity != 2 {
        return Err(Error::DimensionMismatch(format!(
            "embed expects an arity-2 operator, got arity {}",
            a.arity
        )));
    }
    if a.local_dim != local_dim {
        return Err(Error::DimensionMismatch(format!(
            "embed: operator has N={}, requested N={local_dim}",
            a.local_dim
        )));
    }
    let id = Operator::identity(local_dim, 1)?;
    match slot {
        Slot::S12 => kron(a, &id),
        Slot::S23 => kron(&id, a),
    }
}

/// Size of a discrepancy between two operators (or two scalar lists).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub absolute: f64,
    pub relative: f64,
}

impl Residual {
    pub const ZERO: Residual = Residual { absolute: 0.0, relative: 0.0 };

    /// `relative = absolute / max(‖a‖, ‖b‖)`, or `absolute` when that max is
    /// below machine epsilon.
    pub fn from_norms(absolute: f64, norm_a: f64, norm_b: f64) -> Self {
        let denom = norm_a.max(norm_b);
        let relative = if denom < f64::EPSILON { absolute } else { absolute / denom };
        Self { absolute, relative }
    }

    /// Like [`Residual::from_norms`], but when both sides have cancelled to
    /// below `1e-8 · reference` the relative value is taken against
    /// `reference` (the natural size of the computation, e.g. the product of
    /// factor norms). This keeps identities whose two sides vanish exactly
    /// from reporting pure roundoff as an O(1) relative error.
    pub fn from_norms_with_reference(
        absolute: f64,
        norm_a: f64,
        norm_b: f64,
        reference: f64,
    ) -> Self {
        let denom = norm_a.max(norm_b);
        if reference.is_finite() && denom < 1e-8 * reference {
            Self { absolute, relative: absolute / reference }
        } else {
            Self::from_norms(absolute, norm_a, norm_b)
        }
    }

    pub fn between_scalars(a: &[Scalar], b: &[Scalar]) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::DimensionMismatch(format!(
                "residual of {} vs {} scalars",
                a.len(),
                b.len()
            )));
        }
        let sq = |v: &[Scalar]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
        Ok(Self::from_norms(diff, sq(a), sq(b)))
    }

    /// Largest of several residuals, compared by relative size.
    pub fn worst(items: impl IntoIterator<Item = Residual>) -> Residual {
        items
            .into_iter()
            .fold(Residual::ZERO, |acc, r| if r.relative > acc.relative || r.relative.is_nan() { r } else { acc })
    }
}

/// Frobenius-norm residual `‖A − B‖` with the relative value defined in
/// [`Residual::from_norms`].
pub fn residual(a: &Operator, b: &Operator) -> Result<Residual> {
    a.require_same_shape(b, "residual")?;
    let absolute = (&a.matrix - &b.matrix).norm();
    Ok(Residual::from_norms(absolute, a.frobenius_norm(), b.frobenius_norm()))
}

/// Residual of a product identity, normalised against `reference` when both
/// sides cancel (see [`Residual::from_norms_with_reference`]).
pub fn residual_with_reference(a: &Operator, b: &Operator, reference: f64) -> Result<Residual> {
    a.require_same_shape(b, "residual")?;
    let absolute = (&a.matrix - &b.matrix).norm();
    Ok(Residual::from_norms_with_reference(
        absolute,
        a.frobenius_norm(),
        b.frobenius_norm(),
        reference,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_op(n: usize, arity: usize, seed: u64) -> Operator {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Operator::from_fn(n, arity, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .unwrap()
    }

    #[test]
    fn split_product_matches_complex_product() {
        for (n, arity) in [(2, 2), (4, 2), (3, 3), (4, 3)] {
            let a = random_op(n, arity, 1);
            let b = random_op(n, arity, 2);
            let direct = a.matrix() * b.matrix();
            let fast = a.try_mul(&b).unwrap();
            assert!((fast.matrix() - &direct).norm() <= 1e-13 * direct.norm());
        }
    }

    /// Transposition of tensor slots 1 and 2 on `(C^N)^{⊗3}`, built index by index.
    fn swap12_arity3(n: usize) -> Operator {
        Operator::from_fn(n, 3, |r, col| {
            let ri = split_index(r, n, 3);
            let ci = split_index(col, n, 3);
            if ri[0] == ci[1] && ri[1] == ci[0] && ri[2] == ci[2] {
                re(1.0)
            } else {
                re(0.0)
            }
        })
        .unwrap()
    }

    #[test]
    fn kron_of_identities_is_identity() {
        let i = Operator::identity(3, 1).unwrap();
        let ii = kron(&i, &i).unwrap();
        assert_eq!(ii, Operator::identity(3, 2).unwrap());
    }

    #[test]
    fn kron_of_matrix_units_places_single_one() {
        let e11 = Operator::matrix_unit(2, 0, 0).unwrap();
        let e22 = Operator::matrix_unit(2, 1, 1).unwrap();
        let k = kron(&e11, &e22).unwrap();
        assert_eq!(k.entry(1, 1), re(1.0));
        let total: f64 = k.matrix().iter().map(|z| z.norm()).sum();
        assert_eq!(total, 1.0);
    }

    #[test]
    fn kron_p_identity_matches_index_level_swap() {
        let p = permutation(2).unwrap();
        let lifted = kron(&p, &Operator::identity(2, 1).unwrap()).unwrap();
        assert_eq!(lifted, swap12_arity3(2));
    }

    #[test]
    fn kron_rejects_mismatch_and_overflow() {
        let a = Operator::identity(2, 2).unwrap();
        let b = Operator::identity(3, 1).unwrap();
        assert!(matches!(kron(&a, &b), Err(Error::DimensionMismatch(_))));
        let c2 = Operator::identity(2, 2).unwrap();
        assert!(matches!(kron(&a, &c2), Err(Error::ArityOverflow { left: 2, right: 2 })));
    }

    #[test]
    fn permutation_small_cases() {
        assert_eq!(permutation(1).unwrap().entry(0, 0), re(1.0));
        let p = permutation(2).unwrap();
        assert_eq!(&p * &p, Operator::identity(2, 2).unwrap());
    }

    #[test]
    fn permutation_conjugation_swaps_kron_factors() {
        let a = random_op(3, 1, 1);
        let b = random_op(3, 1, 2);
        let p = permutation(3).unwrap();
        let lhs = &(&p * &kron(&a, &b).unwrap()) * &p;
        let rhs = kron(&b, &a).unwrap();
        assert!(residual(&lhs, &rhs).unwrap().absolute < 1e-14);
    }

    #[test]
    fn embed_identity_and_braid_of_transpositions() {
        let i2 = Operator::identity(2, 2).unwrap();
        assert_eq!(embed(&i2, Slot::S12, 2).unwrap(), Operator::identity(2, 3).unwrap());

        let p = permutation(2).unwrap();
        let p12 = embed(&p, Slot::S12, 2).unwrap();
        let p23 = embed(&p, Slot::S23, 2).unwrap();
        assert_eq!(&(&p12 * &p23) * &p12, &(&p23 * &p12) * &p23);
    }

    #[test]
    fn embed_matrix_units_bookkeeping() {
        let e12 = Operator::matrix_unit(2, 0, 1).unwrap();
        let e21 = Operator::matrix_unit(2, 1, 0).unwrap();
        let op = embed(&kron(&e12, &e21).unwrap(), Slot::S23, 2).unwrap();
        assert_eq!(op.get(&[0, 0, 1], &[0, 1, 0]), re(1.0));
        assert!(matches!(embed(&op, Slot::S12, 2), Err(Error::DimensionMismatch(_))));
        assert!(matches!(embed(&kron(&e12, &e21).unwrap(), Slot::S12, 3), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn residual_examples() {
        let i = Operator::identity(2, 2).unwrap();
        assert_eq!(residual(&i, &i).unwrap(), Residual::ZERO);

        let two_i = Operator::identity(2, 1).unwrap().scale(re(2.0));
        let r = residual(&two_i, &Operator::identity(2, 1).unwrap()).unwrap();
        assert!((r.absolute - 2f64.sqrt()).abs() < 1e-15);

        let a = random_op(2, 2, 9);
        let e = random_op(2, 2, 10);
        let b = &a + &e.scale(re(1e-12));
        let bound = 1e-12 * (e.dim() as f64) * 2f64.sqrt();
        assert!(residual(&a, &b).unwrap().absolute <= bound);

        assert!(residual(&a, &Operator::identity(2, 3).unwrap()).is_err());
    }

    #[test]
    fn integer_products_are_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut draw = || Operator::from_fn(2, 3, |_, _| re(rng.gen_range(-1000..1000) as f64)).unwrap();
        let a = draw();
        let b = draw();
        let prod = &a * &b;
        for r in 0..8 {
            for col in 0..8 {
                let exact: f64 = (0..8).map(|k| a.entry(r, k).re * b.entry(k, col).re).sum();
                assert_eq!(prod.entry(r, col).re, exact);
            }
        }
    }

    #[test]
    fn from_matrix_rejects_non_finite() {
        let mut m = DMatrix::<Scalar>::zeros(4, 4);
        m[(0, 0)] = c(f64::NAN, 0.0);
        assert!(Operator::from_matrix(2, 2, m).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn kron_is_associative(n in 1usize..=3, s1 in any::<u64>(), s2 in any::<u64>(), s3 in any::<u64>()) {
                let (a, b, cc) = (random_op(n, 1, s1), random_op(n, 1, s2), random_op(n, 1, s3));
                let left = kron(&kron(&a, &b).unwrap(), &cc).unwrap();
                let right = kron(&a, &kron(&b, &cc).unwrap()).unwrap();
                prop_assert!(residual(&left, &right).unwrap().relative < 1e-15);
            }

            #[test]
            fn permutation_is_symmetric_involution(n in 1usize..=5) {
                let p = permutation(n).unwrap();
                prop_assert_eq!(&p * &p, Operator::identity(n, 2).unwrap());
                prop_assert_eq!(p.matrix().transpose(), p.matrix().clone());
            }

            #[test]
            fn disjoint_slot_actions_commute(n in 1usize..=3, seed in any::<u64>(), s in -3.0f64..3.0) {
                let a = embed(&random_op(n, 2, seed), Slot::S12, n).unwrap();
                let id = Operator::identity(n, 1).unwrap();
                let third = kron(&id, &kron(&id, &id.scale(re(s))).unwrap()).unwrap();
                let r = residual(&(&a * &third), &(&third * &a)).unwrap();
                prop_assert!(r.absolute < 1e-12);
            }
        }
    }
}
