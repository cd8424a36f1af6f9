//! Operator algebra over finite dimensional complex Hilbert spaces.
//!
//! Everything downstream works with three validated wrappers: Hermitian
//! operators, observables (a Hermitian operator bundled with its spectral
//! decomposition into distinct eigenvalues and orthogonal projectors), and
//! density matrices. The module also owns the symmetrized operator product,
//! the Jordan split into positive and negative parts, and the eigenbasis
//! overlap table with its row sum bound.

use nalgebra::linalg::SymmetricEigen;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::error::CoreError;
use crate::tol;
use crate::Result;

pub type Complex64 = Complex<f64>;
pub type ComplexMatrix = DMatrix<Complex64>;
pub type ComplexVector = DVector<Complex64>;

/// Largest entry magnitude, used as the scale for relative tolerances.
pub fn max_abs(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn identity(dim: usize) -> ComplexMatrix {
    ComplexMatrix::identity(dim, dim)
}

/// Kronecker product, left factor on the slow index.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// tr(A B) in O(dim^2), without forming the product.
pub fn trace_product(a: &ComplexMatrix, b: &ComplexMatrix) -> Complex64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    let mut t = Complex64::new(0.0, 0.0);
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            t += a[(i, j)] * b[(j, i)];
        }
    }
    t
}

fn check_finite(m: &ComplexMatrix) -> Result<()> {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let z = m[(i, j)];
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(CoreError::NonFinite { row: i, col: j });
            }
        }
    }
    Ok(())
}

/// A validated Hermitian operator. The stored matrix is exactly equal to its
/// own adjoint because construction averages the matrix with its adjoint
/// after the tolerance check passes.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator {
    mat: ComplexMatrix,
}

impl HermitianOperator {
    pub fn new(mat: ComplexMatrix) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(CoreError::NotSquare {
                rows: mat.nrows(),
                cols: mat.ncols(),
            });
        }
        check_finite(&mat)?;
        let scale = max_abs(&mat);
        let deviation = max_abs(&(&mat - mat.adjoint()));
        let tolerance = tol::HERMITICITY_REL * scale;
        if deviation > tolerance {
            return Err(CoreError::NotHermitian {
                deviation,
                tolerance,
            });
        }
        Ok(Self::wrap(mat))
    }

    /// Internal constructor for results that are Hermitian by construction,
    /// up to rounding. Symmetrizes unconditionally.
    pub(crate) fn wrap(mat: ComplexMatrix) -> Self {
        let sym = (&mat + mat.adjoint()).scale(0.5);
        Self { mat: sym }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.mat
    }

    pub fn trace(&self) -> f64 {
        self.mat.trace().re
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            mat: ComplexMatrix::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            mat: identity(dim),
        }
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            mat: self.mat.scale(factor),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            mat: &self.mat + &other.mat,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            mat: &self.mat - &other.mat,
        }
    }

    /// Raw eigenvalues, ascending, with multiplicity.
    fn raw_eigen(&self) -> (Vec<f64>, Vec<DVector<Complex64>>) {
        let eig = SymmetricEigen::new(self.mat.clone());
        let mut order: Vec<usize> = (0..self.dim()).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[a]
                .partial_cmp(&eig.eigenvalues[b])
                .unwrap()
                .then(a.cmp(&b))
        });
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = order
            .iter()
            .map(|&k| eig.eigenvectors.column(k).into_owned())
            .collect();
        (values, vectors)
    }
}

/// Spectral decomposition into distinct eigenvalues (ascending) with their
/// orthogonal eigenprojectors.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub projectors: Vec<HermitianOperator>,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.projectors[0].dim()
    }

    pub fn n_points(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Rank of the k-th eigenprojector.
    pub fn multiplicity(&self, k: usize) -> usize {
        self.projectors[k].trace().round() as usize
    }

    pub fn is_nondegenerate(&self) -> bool {
        self.eigenvalues.len() == self.dim()
    }

    /// Sum of eigenvalue * projector.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let dim = self.dim();
        let mut m = ComplexMatrix::zeros(dim, dim);
        for (v, p) in self.eigenvalues.iter().zip(&self.projectors) {
            m += p.matrix().scale(*v);
        }
        m
    }
}

/// Eigendecomposition with eigenvalue grouping: raw eigenvalues are sorted
/// ascending and neighbours closer than `grouping_rel * max |eigenvalue|`
/// fall into the same spectral point, whose reported value is their mean.
pub fn spectral_decompose(
    h: &HermitianOperator,
    grouping_rel: f64,
) -> Result<SpectralDecomposition> {
    let (values, vectors) = h.raw_eigen();
    let dim = h.dim();
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let gap = grouping_rel * scale;

    let mut eigenvalues = Vec::new();
    let mut projectors = Vec::new();
    let mut start = 0;
    while start < dim {
        let mut end = start + 1;
        while end < dim && values[end] - values[end - 1] <= gap {
            end += 1;
        }
        let mean = values[start..end].iter().sum::<f64>() / (end - start) as f64;
        let mut proj = ComplexMatrix::zeros(dim, dim);
        for v in &vectors[start..end] {
            proj += v * v.adjoint();
        }
        eigenvalues.push(mean);
        projectors.push(HermitianOperator::wrap(proj));
        start = end;
    }

    let dec = SpectralDecomposition {
        eigenvalues,
        projectors,
    };
    // Guard against eigensolver breakdown: resolution of identity and
    // reconstruction must hold to solver precision.
    let mut completeness = ComplexMatrix::zeros(dim, dim);
    for p in &dec.projectors {
        completeness += p.matrix();
    }
    let comp_dev = max_abs(&(completeness - identity(dim)));
    let rec_dev = max_abs(&(dec.reconstruct() - h.matrix()));
    // a failed solve or a wrong grouping leaves residuals at the eigenvalue
    // gap scale; healthy solves stay below ~1e-9
    let guard = 1e-8 * dim as f64 * scale.max(1.0);
    if comp_dev > guard || rec_dev > guard {
        return Err(CoreError::NumericalCheck(format!(
            "spectral decomposition residuals {comp_dev:.3e}/{rec_dev:.3e} exceed {guard:.3e}"
        )));
    }
    Ok(dec)
}

/// A Hermitian operator together with its spectral decomposition. Outcomes of
/// a von Neumann measurement of the observable are exactly its distinct
/// eigenvalues.
#[derive(Clone, Debug)]
pub struct Observable {
    operator: HermitianOperator,
    spectrum: SpectralDecomposition,
}

impl Observable {
    pub fn new(mat: ComplexMatrix) -> Result<Self> {
        Self::with_grouping(mat, tol::GROUPING_REL)
    }

    pub fn with_grouping(mat: ComplexMatrix, grouping_rel: f64) -> Result<Self> {
        let operator = HermitianOperator::new(mat)?;
        let spectrum = spectral_decompose(&operator, grouping_rel)?;
        Ok(Self { operator, spectrum })
    }

    pub fn from_hermitian(operator: HermitianOperator) -> Result<Self> {
        let spectrum = spectral_decompose(&operator, tol::GROUPING_REL)?;
        Ok(Self { operator, spectrum })
    }

    /// Assemble from parts that are already diagonalized, e.g. tensor
    /// embeddings or relabelings of an existing observable. Validates order,
    /// completeness and reconstruction instead of re-running the eigensolver.
    pub fn from_parts(spectrum: SpectralDecomposition) -> Result<Self> {
        let dim = spectrum.dim();
        for w in spectrum.eigenvalues.windows(2) {
            if w[1] <= w[0] {
                return Err(CoreError::InvalidArgument(format!(
                    "eigenvalues not strictly ascending: {} then {}",
                    w[0], w[1]
                )));
            }
        }
        let mut completeness = ComplexMatrix::zeros(dim, dim);
        for p in &spectrum.projectors {
            completeness += p.matrix();
        }
        let scale = spectrum
            .eigenvalues
            .iter()
            .fold(1.0f64, |m, v| m.max(v.abs()));
        let guard = 1e-9 * dim as f64 * scale;
        if max_abs(&(completeness - identity(dim))) > guard {
            return Err(CoreError::NumericalCheck(
                "projectors do not resolve the identity".into(),
            ));
        }
        let operator = HermitianOperator::wrap(spectrum.reconstruct());
        Ok(Self { operator, spectrum })
    }

    pub fn dim(&self) -> usize {
        self.operator.dim()
    }

    pub fn operator(&self) -> &HermitianOperator {
        &self.operator
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        self.operator.matrix()
    }

    pub fn spectrum(&self) -> &SpectralDecomposition {
        &self.spectrum
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.spectrum.eigenvalues
    }

    pub fn projector(&self, k: usize) -> &HermitianOperator {
        &self.spectrum.projectors[k]
    }

    pub fn n_outcomes(&self) -> usize {
        self.spectrum.n_points()
    }

    pub fn is_nondegenerate(&self) -> bool {
        self.spectrum.is_nondegenerate()
    }

    /// Index of the spectral point matching `value` within the grouping
    /// tolerance, or None.
    pub fn outcome_index(&self, value: f64) -> Option<usize> {
        let scale = self
            .spectrum
            .eigenvalues
            .iter()
            .fold(1.0f64, |m, v| m.max(v.abs()));
        let atol = tol::GROUPING_REL * scale;
        self.spectrum
            .eigenvalues
            .iter()
            .position(|&ev| (ev - value).abs() <= atol)
    }

    /// Spectral projector of the outcome subset `values` (each must be in the
    /// spectrum).
    pub fn subset_projector(&self, values: &[f64]) -> Result<HermitianOperator> {
        let dim = self.dim();
        let mut m = ComplexMatrix::zeros(dim, dim);
        for &v in values {
            let k = self
                .outcome_index(v)
                .ok_or(CoreError::OutcomeNotInSpectrum { index: 0, value: v })?;
            m += self.spectrum.projectors[k].matrix();
        }
        Ok(HermitianOperator::wrap(m))
    }
}

/// Jordan split Z = positive_part - negative_part with both parts positive
/// semidefinite and mutually orthogonal.
#[derive(Clone, Debug)]
pub struct JordanPair {
    pub positive_part: HermitianOperator,
    pub negative_part: HermitianOperator,
}

impl JordanPair {
    pub fn difference(&self) -> HermitianOperator {
        self.positive_part.sub(&self.negative_part)
    }

    /// |Z| = positive_part + negative_part.
    pub fn absolute(&self) -> HermitianOperator {
        self.positive_part.add(&self.negative_part)
    }
}

/// Splits a Hermitian operator into its positive and negative spectral parts.
/// Eigenvalues inside the band `|x| <= zero_band_rel * ||Z||_op` go to
/// neither part.
pub fn jordan_decompose(z: &HermitianOperator, zero_band_rel: f64) -> JordanPair {
    let (values, vectors) = z.raw_eigen();
    let dim = z.dim();
    let norm = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let band = zero_band_rel * norm;
    let mut pos = ComplexMatrix::zeros(dim, dim);
    let mut neg = ComplexMatrix::zeros(dim, dim);
    for (v, vec) in values.iter().zip(&vectors) {
        if *v > band {
            pos += (vec * vec.adjoint()).scale(*v);
        } else if *v < -band {
            neg += (vec * vec.adjoint()).scale(-*v);
        }
    }
    JordanPair {
        positive_part: HermitianOperator::wrap(pos),
        negative_part: HermitianOperator::wrap(neg),
    }
}

/// |Z| via the Jordan split with the default zero band.
pub fn absolute_value(z: &HermitianOperator) -> HermitianOperator {
    jordan_decompose(z, tol::JORDAN_ZERO_REL).absolute()
}

/// Largest eigenvalue magnitude.
pub fn operator_norm(h: &HermitianOperator) -> f64 {
    let (values, _) = h.raw_eigen();
    values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Sum of the operator products over all orderings of the factors:
/// {A_1 ... A_n}_sym = sum over permutations p of A_p(1) ... A_p(n).
/// The result is Hermitian whenever every factor is. Factor counts above
/// `tol::SYM_FACTOR_CAP` are rejected, the enumeration is factorial.
pub fn symmetrized_product(factors: &[&HermitianOperator]) -> Result<HermitianOperator> {
    use itertools::Itertools;

    let n = factors.len();
    if n == 0 {
        return Err(CoreError::InvalidArgument(
            "symmetrized product of zero factors".into(),
        ));
    }
    if n > tol::SYM_FACTOR_CAP {
        return Err(CoreError::FactorCapExceeded {
            count: n,
            cap: tol::SYM_FACTOR_CAP,
        });
    }
    let dim = factors[0].dim();
    for f in factors {
        if f.dim() != dim {
            return Err(CoreError::DimensionMismatch {
                expected: dim,
                found: f.dim(),
            });
        }
    }
    if n == 1 {
        return Ok(factors[0].clone());
    }
    let mut acc = ComplexMatrix::zeros(dim, dim);
    for perm in (0..n).permutations(n) {
        let mut prod = factors[perm[0]].matrix().clone();
        for &k in &perm[1..] {
            prod *= factors[k].matrix();
        }
        acc += prod;
    }
    Ok(HermitianOperator::wrap(acc))
}

/// Embeds a qudit observable as I x ... x X x ... x I acting on `n_sites`
/// qudits of the same dimension, with X at the given zero-based site. The
/// spectrum is carried over unchanged, projectors are embedded likewise.
pub fn tensor_embed(x: &Observable, site: usize, n_sites: usize) -> Result<Observable> {
    if site >= n_sites {
        return Err(CoreError::SiteOutOfRange { site, n_sites });
    }
    let d = x.dim();
    let left = identity(d.pow(site as u32));
    let right = identity(d.pow((n_sites - 1 - site) as u32));
    let projectors = x
        .spectrum()
        .projectors
        .iter()
        .map(|p| HermitianOperator::wrap(kron(&kron(&left, p.matrix()), &right)))
        .collect();
    Observable::from_parts(SpectralDecomposition {
        eigenvalues: x.eigenvalues().to_vec(),
        projectors,
    })
}

/// Table of eigenbasis overlap magnitudes |<e_k1 | f_k2>| between two
/// nondegenerate observables, together with its row and column sums. Every
/// line sum is bounded by sqrt(dim).
#[derive(Clone, Debug)]
pub struct OverlapMatrix {
    pub abs: DMatrix<f64>,
}

impl OverlapMatrix {
    pub fn dim(&self) -> usize {
        self.abs.nrows()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.abs.nrows())
            .map(|i| self.abs.row(i).iter().sum())
            .collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        (0..self.abs.ncols())
            .map(|j| self.abs.column(j).iter().sum())
            .collect()
    }

    pub fn max_line_sum(&self) -> f64 {
        self.row_sums()
            .into_iter()
            .chain(self.col_sums())
            .fold(0.0, f64::max)
    }
}

/// Overlap magnitudes between the eigenbases of two nondegenerate
/// observables, computed phase-free as sqrt(tr(P_k1 Q_k2)).
pub fn overlap_row_sums(y1: &Observable, y2: &Observable) -> Result<OverlapMatrix> {
    if y1.dim() != y2.dim() {
        return Err(CoreError::DimensionMismatch {
            expected: y1.dim(),
            found: y2.dim(),
        });
    }
    for y in [y1, y2] {
        if !y.is_nondegenerate() {
            let k = (0..y.n_outcomes())
                .find(|&k| y.spectrum().multiplicity(k) > 1)
                .unwrap();
            return Err(CoreError::Degenerate {
                eigenvalue: y.eigenvalues()[k],
                multiplicity: y.spectrum().multiplicity(k),
            });
        }
    }
    let d = y1.dim();
    let mut abs = DMatrix::zeros(d, d);
    for k1 in 0..d {
        for k2 in 0..d {
            let t = trace_product(y1.projector(k1).matrix(), y2.projector(k2).matrix());
            abs[(k1, k2)] = t.re.max(0.0).sqrt();
        }
    }
    Ok(OverlapMatrix { abs })
}

/// Sum over both spectra of |{P_y1 P_y2}_sym|, computed numerically through
/// the Jordan split of each symmetrized product.
pub fn sum_abs_symmetrized(y1: &Observable, y2: &Observable) -> Result<HermitianOperator> {
    if y1.dim() != y2.dim() {
        return Err(CoreError::DimensionMismatch {
            expected: y1.dim(),
            found: y2.dim(),
        });
    }
    let mut acc = HermitianOperator::zero(y1.dim());
    for k1 in 0..y1.n_outcomes() {
        for k2 in 0..y2.n_outcomes() {
            let s = symmetrized_product(&[y1.projector(k1), y2.projector(k2)])?;
            acc = acc.add(&absolute_value(&s));
        }
    }
    Ok(acc)
}

/// Closed form for the same sum, valid for nondegenerate observables: with
/// overlap magnitudes a_{k1,k2} between the two eigenbases,
/// sum |{P_k1 Q_k2}_sym| = sum a_{k1,k2} (P_k1 + Q_k2).
pub fn sum_abs_symmetrized_closed_form(
    y1: &Observable,
    y2: &Observable,
) -> Result<HermitianOperator> {
    let overlaps = overlap_row_sums(y1, y2)?;
    let d = y1.dim();
    let mut acc = ComplexMatrix::zeros(d, d);
    for k1 in 0..d {
        for k2 in 0..d {
            let a = overlaps.abs[(k1, k2)];
            acc += (y1.projector(k1).matrix() + y2.projector(k2).matrix()).scale(a);
        }
    }
    Ok(HermitianOperator::wrap(acc))
}

/// A validated density matrix: Hermitian, positive semidefinite within
/// tolerance, unit trace.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    op: HermitianOperator,
}

impl DensityMatrix {
    pub fn new(mat: ComplexMatrix) -> Result<Self> {
        let op = HermitianOperator::new(mat)?;
        let (values, _) = op.raw_eigen();
        if values[0] < -tol::PSD_ABS {
            return Err(CoreError::NotDensityMatrix {
                reason: format!("smallest eigenvalue {:.3e}", values[0]),
            });
        }
        let trace = op.trace();
        if (trace - 1.0).abs() > tol::TRACE_ONE_ABS {
            return Err(CoreError::NotDensityMatrix {
                reason: format!("trace {trace}"),
            });
        }
        Ok(Self { op })
    }

    /// Projector onto the given state vector, normalized first.
    pub fn pure(state: &DVector<Complex64>) -> Result<Self> {
        let norm = state.norm();
        if norm == 0.0 {
            return Err(CoreError::InvalidArgument("zero state vector".into()));
        }
        let v = state.unscale(norm);
        Ok(Self {
            op: HermitianOperator::wrap(&v * v.adjoint()),
        })
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            op: HermitianOperator::wrap(identity(dim).scale(1.0 / dim as f64)),
        }
    }

    /// Convex mixture of states. Weights must be nonnegative and sum to one.
    pub fn mix(states: &[DensityMatrix], weights: &[f64]) -> Result<Self> {
        if states.is_empty() || states.len() != weights.len() {
            return Err(CoreError::InvalidArgument(
                "mixture needs one weight per state".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if weights.iter().any(|&w| w < -tol::PSD_ABS) || (total - 1.0).abs() > tol::EQUALITY_ABS {
            return Err(CoreError::InvalidArgument(format!(
                "mixture weights must be nonnegative and sum to 1, got sum {total}"
            )));
        }
        let dim = states[0].dim();
        let mut acc = ComplexMatrix::zeros(dim, dim);
        for (s, &w) in states.iter().zip(weights) {
            if s.dim() != dim {
                return Err(CoreError::DimensionMismatch {
                    expected: dim,
                    found: s.dim(),
                });
            }
            acc += s.matrix().scale(w);
        }
        Self::new(acc)
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        self.op.matrix()
    }

    pub fn operator(&self) -> &HermitianOperator {
        &self.op
    }
}

/// Re tr(rho A). The imaginary part is a rounding artifact for Hermitian
/// inputs; it is discarded below `tol::TRACE_IMAG_ABS` and rejected above.
pub fn trace_pairing(rho: &DensityMatrix, a: &HermitianOperator) -> Result<f64> {
    if rho.dim() != a.dim() {
        return Err(CoreError::DimensionMismatch {
            expected: rho.dim(),
            found: a.dim(),
        });
    }
    let t = trace_product(rho.matrix(), a.matrix());
    if t.im.abs() > tol::TRACE_IMAG_ABS {
        return Err(CoreError::ComplexTrace {
            imag: t.im,
            tolerance: tol::TRACE_IMAG_ABS,
        });
    }
    Ok(t.re)
}

/// Rank one projectors onto an eigenbasis of the observable, ascending by
/// eigenvalue, paired with the index of the spectral point each basis vector
/// belongs to. Degenerate eigenspaces are split along the eigensolver basis.
pub fn eigenbasis_projectors(x: &Observable) -> (Vec<HermitianOperator>, Vec<usize>) {
    let (values, vectors) = x.operator().raw_eigen();
    let mut projectors = Vec::with_capacity(values.len());
    let mut groups = Vec::with_capacity(values.len());
    for (v, vec) in values.iter().zip(&vectors) {
        projectors.push(HermitianOperator::wrap(vec * vec.adjoint()));
        let nearest = x
            .eigenvalues()
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| (*a - v).abs().partial_cmp(&(*b - v).abs()).unwrap())
            .map(|(k, _)| k)
            .expect("observable has at least one spectral point");
        groups.push(nearest);
    }
    (projectors, groups)
}

/// Operator norm of the commutator i[X, Y], which is Hermitian for Hermitian
/// X and Y. Used by joint measurability checks.
pub fn commutator_norm(x: &HermitianOperator, y: &HermitianOperator) -> f64 {
    let c = x.matrix() * y.matrix() - y.matrix() * x.matrix();
    let i_c = c.map(|z| Complex64::new(-z.im, z.re));
    operator_norm(&HermitianOperator::wrap(i_c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn cm(rows: usize, data: &[(f64, f64)]) -> ComplexMatrix {
        ComplexMatrix::from_row_slice(
            rows,
            data.len() / rows,
            &data
                .iter()
                .map(|&(re, im)| Complex64::new(re, im))
                .collect::<Vec<_>>(),
        )
    }

    fn pauli_z() -> ComplexMatrix {
        cm(2, &[(1.0, 0.0), (0.0, 0.0), (0.0, 0.0), (-1.0, 0.0)])
    }

    fn pauli_x() -> ComplexMatrix {
        cm(2, &[(0.0, 0.0), (1.0, 0.0), (1.0, 0.0), (0.0, 0.0)])
    }

    fn pauli_y() -> ComplexMatrix {
        cm(2, &[(0.0, 0.0), (0.0, -1.0), (0.0, 1.0), (0.0, 0.0)])
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = cm(2, &[(0.0, 0.0), (1.0, 0.0), (0.5, 0.0), (0.0, 0.0)]);
        assert!(matches!(
            HermitianOperator::new(m),
            Err(CoreError::NotHermitian { .. })
        ));
    }

    #[test]
    fn rejects_non_square_and_non_finite() {
        let m = ComplexMatrix::zeros(2, 3);
        assert!(matches!(
            HermitianOperator::new(m),
            Err(CoreError::NotSquare { .. })
        ));
        let mut bad = identity(2);
        bad[(0, 0)] = Complex64::new(f64::NAN, 0.0);
        assert!(matches!(
            HermitianOperator::new(bad),
            Err(CoreError::NonFinite { .. })
        ));
    }

    #[test]
    fn pauli_spectra() {
        for m in [pauli_x(), pauli_y(), pauli_z()] {
            let obs = Observable::new(m).unwrap();
            assert_eq!(obs.eigenvalues().len(), 2);
            assert_abs_diff_eq!(obs.eigenvalues()[0], -1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(obs.eigenvalues()[1], 1.0, epsilon = 1e-12);
        }
        // Eigenvalue ordering is ascending, so the first projector of
        // sigma_z is onto the second basis vector.
        let z = Observable::new(pauli_z()).unwrap();
        assert_abs_diff_eq!(z.projector(0).matrix()[(1, 1)].re, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(z.projector(1).matrix()[(0, 0)].re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_identity_groups_to_one_point() {
        let obs = Observable::new(identity(3)).unwrap();
        assert_eq!(obs.n_outcomes(), 1);
        assert_abs_diff_eq!(obs.eigenvalues()[0], 1.0, epsilon = 1e-12);
        assert_eq!(obs.spectrum().multiplicity(0), 3);
    }

    #[test]
    fn projector_properties_on_random_hermitian() {
        let mut rng = crate::presets::seeded_rng(5);
        for _ in 0..20 {
            let h = crate::presets::random_hermitian(4, &mut rng);
            let obs = Observable::from_hermitian(h).unwrap();
            let s = obs.spectrum();
            for i in 0..s.n_points() {
                let pi = s.projectors[i].matrix();
                // idempotent
                assert!(max_abs(&(pi * pi - pi)) < 1e-10);
                for j in 0..s.n_points() {
                    if i != j {
                        let pj = s.projectors[j].matrix();
                        assert!(max_abs(&(pi * pj)) < 1e-10);
                    }
                }
            }
            assert!(max_abs(&(s.reconstruct() - obs.matrix())) < 1e-10);
        }
    }

    #[test]
    fn jordan_split_of_diagonal() {
        let z = HermitianOperator::new(cm(
            2,
            &[(2.0, 0.0), (0.0, 0.0), (0.0, 0.0), (-3.0, 0.0)],
        ))
        .unwrap();
        let pair = jordan_decompose(&z, tol::JORDAN_ZERO_REL);
        assert_abs_diff_eq!(pair.positive_part.matrix()[(0, 0)].re, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(pair.negative_part.matrix()[(1, 1)].re, 3.0, epsilon = 1e-12);
        // orthogonality of the parts
        let cross = pair.positive_part.matrix() * pair.negative_part.matrix();
        assert!(max_abs(&cross) < 1e-12);
        // |Z|
        let abs = absolute_value(&z);
        assert_abs_diff_eq!(abs.matrix()[(1, 1)].re, 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(operator_norm(&z), 3.0, epsilon = 1e-12);
    }

    #[test]
    fn jordan_of_psd_has_no_negative_part() {
        let p = Observable::new(pauli_x()).unwrap().projector(1).clone();
        let pair = jordan_decompose(&p, tol::JORDAN_ZERO_REL);
        assert!(max_abs(pair.negative_part.matrix()) < 1e-12);
        assert!(max_abs(&(pair.positive_part.matrix() - p.matrix())) < 1e-12);
    }

    // {P_x(+1) P_z(+1)}_sym for the Pauli pair has the closed form
    // [[1, 1/2], [1/2, 0]] with eigenvalues (1 +- sqrt(2))/2.
    #[test]
    fn symmetrized_projector_pair_oracle() {
        let x = Observable::new(pauli_x()).unwrap();
        let z = Observable::new(pauli_z()).unwrap();
        let s = symmetrized_product(&[x.projector(1), z.projector(1)]).unwrap();
        let expected = cm(2, &[(1.0, 0.0), (0.5, 0.0), (0.5, 0.0), (0.0, 0.0)]);
        assert!(max_abs(&(s.matrix() - expected)) < 1e-12);

        let pair = jordan_decompose(&s, tol::JORDAN_ZERO_REL);
        let pos_eig = operator_norm(&pair.positive_part);
        let neg_eig = operator_norm(&pair.negative_part);
        assert_abs_diff_eq!(pos_eig, (1.0 + 2.0_f64.sqrt()) / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(neg_eig, (2.0_f64.sqrt() - 1.0) / 2.0, epsilon = 1e-12);
        assert!(max_abs(&(pair.difference().matrix() - s.matrix())) < 1e-12);
        // trace of |Z| for this pair is sqrt(2)
        assert_abs_diff_eq!(absolute_value(&s).trace(), 2.0_f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn symmetrized_product_of_commuting_factors() {
        let z = Observable::new(pauli_z()).unwrap();
        let p0 = z.projector(0);
        let p1 = z.projector(1);
        let s = symmetrized_product(&[p0, p1]).unwrap();
        // commuting: {A B}_sym = 2 A B = 0 for orthogonal projectors
        assert!(max_abs(s.matrix()) < 1e-12);
        let s2 = symmetrized_product(&[p1, p1]).unwrap();
        assert!(max_abs(&(s2.matrix() - p1.matrix().scale(2.0))) < 1e-12);
    }

    #[test]
    fn symmetrized_product_single_factor_and_caps() {
        let z = HermitianOperator::new(pauli_z()).unwrap();
        let s = symmetrized_product(&[&z]).unwrap();
        assert!(max_abs(&(s.matrix() - z.matrix())) < 1e-15);
        let nine = vec![&z; 9];
        assert!(matches!(
            symmetrized_product(&nine),
            Err(CoreError::FactorCapExceeded { count: 9, cap: 8 })
        ));
        assert!(symmetrized_product(&[]).is_err());
    }

    #[test]
    fn symmetrized_product_is_permutation_invariant() {
        let mut rng = crate::presets::seeded_rng(11);
        let a = crate::presets::random_hermitian(3, &mut rng);
        let b = crate::presets::random_hermitian(3, &mut rng);
        let c = crate::presets::random_hermitian(3, &mut rng);
        let s1 = symmetrized_product(&[&a, &b, &c]).unwrap();
        let s2 = symmetrized_product(&[&c, &a, &b]).unwrap();
        assert!(max_abs(&(s1.matrix() - s2.matrix())) < 1e-12);
    }

    #[test]
    fn tensor_embed_spectrum_matches_direct_eigensolve() {
        let z = Observable::new(pauli_z()).unwrap();
        let embedded = tensor_embed(&z, 1, 2).unwrap();
        assert_eq!(embedded.dim(), 4);
        assert_eq!(embedded.eigenvalues(), &[-1.0, 1.0]);
        assert_eq!(embedded.spectrum().multiplicity(0), 2);
        let direct = Observable::new(kron(&identity(2), &pauli_z())).unwrap();
        assert!(max_abs(&(embedded.matrix() - direct.matrix())) < 1e-12);
        for k in 0..2 {
            assert!(max_abs(&(embedded.projector(k).matrix() - direct.projector(k).matrix())) < 1e-9);
        }
        assert!(matches!(
            tensor_embed(&z, 2, 2),
            Err(CoreError::SiteOutOfRange { .. })
        ));
    }

    #[test]
    fn overlap_table_mub_and_identical() {
        let z = Observable::new(pauli_z()).unwrap();
        let x = Observable::new(pauli_x()).unwrap();
        let ov = overlap_row_sums(&z, &x).unwrap();
        let r = 1.0 / 2.0_f64.sqrt();
        for k1 in 0..2 {
            for k2 in 0..2 {
                assert_abs_diff_eq!(ov.abs[(k1, k2)], r, epsilon = 1e-12);
            }
        }
        assert_abs_diff_eq!(ov.max_line_sum(), 2.0_f64.sqrt(), epsilon = 1e-12);

        let same = overlap_row_sums(&z, &z).unwrap();
        assert_abs_diff_eq!(same.abs[(0, 0)], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(same.abs[(0, 1)], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(same.max_line_sum(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn overlap_rejects_degenerate() {
        let z = Observable::new(pauli_z()).unwrap();
        let id = Observable::new(identity(2)).unwrap();
        assert!(matches!(
            overlap_row_sums(&id, &z),
            Err(CoreError::Degenerate { .. })
        ));
    }

    #[test]
    fn overlap_line_sums_bounded_by_sqrt_d() {
        let mut rng = crate::presets::seeded_rng(23);
        for d in [2usize, 3, 4] {
            for _ in 0..10 {
                let y1 = crate::presets::random_nondegenerate_observable(d, &mut rng);
                let y2 = crate::presets::random_nondegenerate_observable(d, &mut rng);
                let ov = overlap_row_sums(&y1, &y2).unwrap();
                assert!(ov.max_line_sum() <= (d as f64).sqrt() + 1e-9);
            }
        }
    }

    #[test]
    fn abs_sum_closed_form_matches_numeric() {
        let mut rng = crate::presets::seeded_rng(31);
        for d in [2usize, 3] {
            for _ in 0..5 {
                let y1 = crate::presets::random_nondegenerate_observable(d, &mut rng);
                let y2 = crate::presets::random_nondegenerate_observable(d, &mut rng);
                let numeric = sum_abs_symmetrized(&y1, &y2).unwrap();
                let closed = sum_abs_symmetrized_closed_form(&y1, &y2).unwrap();
                assert!(max_abs(&(numeric.matrix() - closed.matrix())) < 1e-9);
            }
        }
    }

    #[test]
    fn density_matrix_validation() {
        assert!(DensityMatrix::new(identity(2).scale(0.5)).is_ok());
        assert!(matches!(
            DensityMatrix::new(identity(2)),
            Err(CoreError::NotDensityMatrix { .. })
        ));
        assert!(matches!(
            DensityMatrix::new(pauli_z()),
            Err(CoreError::NotDensityMatrix { .. })
        ));
        let v = DVector::from_vec(vec![Complex64::new(3.0, 0.0), Complex64::new(4.0, 0.0)]);
        let p = DensityMatrix::pure(&v).unwrap();
        assert_abs_diff_eq!(p.matrix()[(0, 0)].re, 0.36, epsilon = 1e-12);
    }

    #[test]
    fn trace_pairing_basics() {
        let rho = DensityMatrix::maximally_mixed(2);
        let z = HermitianOperator::new(pauli_z()).unwrap();
        assert_abs_diff_eq!(trace_pairing(&rho, &z).unwrap(), 0.0, epsilon = 1e-15);
        let v = DVector::from_vec(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]);
        let excited = DensityMatrix::pure(&v).unwrap();
        assert_abs_diff_eq!(trace_pairing(&excited, &z).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn commutator_norm_detects_noncommuting() {
        let x = HermitianOperator::new(pauli_x()).unwrap();
        let z = HermitianOperator::new(pauli_z()).unwrap();
        // [x, z] = -2i y, so |i[x,z]| = 2
        assert_abs_diff_eq!(commutator_norm(&x, &z), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(commutator_norm(&z, &z), 0.0, epsilon = 1e-12);
    }
}
