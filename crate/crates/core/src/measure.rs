//! The context-invariant signed measure of joint von Neumann measurements.
//!
//! For observables X_1 ... X_n on one d-dimensional system and a state rho,
//! the value attached to an outcome tuple (x_1, ..., x_n) is
//!
//!   (1/n!) tr[ rho {P_{X_1}(x_1) ... P_{X_n}(x_n)}_sym ]
//!
//! summed over the tuples of an event. Restricted to a single observable this
//! is the Born rule; restricted to commuting observables it is the ordinary
//! joint distribution; in general it is signed. Values do not depend on which
//! random variable representation (base observable plus relabeling) is used
//! for each measured quantity, which is what `mu_value_via_reps` exposes.

use std::collections::BTreeSet;

use crate::error::CoreError;
use crate::operator::{
    eigenbasis_projectors, symmetrized_product, trace_pairing, trace_product, commutator_norm,
    operator_norm, ComplexMatrix, DensityMatrix, HermitianOperator, Observable,
    SpectralDecomposition,
};
use crate::report::Check;
use crate::tol;
use crate::Result;

/// A finite cylindrical event: a list of jointly measured observables and a
/// set of outcome tuples, stored as spectral point indices.
#[derive(Clone, Debug)]
pub struct CylindricalEvent {
    observables: Vec<Observable>,
    outcomes: BTreeSet<Vec<usize>>,
}

impl CylindricalEvent {
    /// Event from explicit outcome tuples. Components must match eigenvalues
    /// of the corresponding observable within the grouping tolerance;
    /// duplicate tuples collapse, as events are sets.
    pub fn new(observables: Vec<Observable>, tuples: &[Vec<f64>]) -> Result<Self> {
        validate_observable_list(&observables)?;
        let mut outcomes = BTreeSet::new();
        for tuple in tuples {
            if tuple.len() != observables.len() {
                return Err(CoreError::DimensionMismatch {
                    expected: observables.len(),
                    found: tuple.len(),
                });
            }
            let mut idx = Vec::with_capacity(tuple.len());
            for (i, (&v, obs)) in tuple.iter().zip(&observables).enumerate() {
                idx.push(
                    obs.outcome_index(v)
                        .ok_or(CoreError::OutcomeNotInSpectrum { index: i, value: v })?,
                );
            }
            outcomes.insert(idx);
        }
        Ok(Self {
            observables,
            outcomes,
        })
    }

    /// Product event: one outcome subset per coordinate, expanded to the
    /// cartesian product of the subsets.
    pub fn product(observables: Vec<Observable>, subsets: &[Vec<f64>]) -> Result<Self> {
        if subsets.len() != observables.len() {
            return Err(CoreError::DimensionMismatch {
                expected: observables.len(),
                found: subsets.len(),
            });
        }
        validate_observable_list(&observables)?;
        let mut per_coord: Vec<Vec<usize>> = Vec::new();
        for (i, (subset, obs)) in subsets.iter().zip(&observables).enumerate() {
            let mut ids = BTreeSet::new();
            for &v in subset {
                ids.insert(
                    obs.outcome_index(v)
                        .ok_or(CoreError::OutcomeNotInSpectrum { index: i, value: v })?,
                );
            }
            per_coord.push(ids.into_iter().collect());
        }
        let mut outcomes = BTreeSet::new();
        let mut stack = vec![0usize; per_coord.len()];
        expand_product(&per_coord, 0, &mut stack, &mut outcomes);
        Ok(Self {
            observables,
            outcomes,
        })
    }

    /// The full grid over all spectra.
    pub fn full(observables: Vec<Observable>) -> Result<Self> {
        let subsets: Vec<Vec<f64>> = observables
            .iter()
            .map(|o| o.eigenvalues().to_vec())
            .collect();
        Self::product(observables, &subsets)
    }

    pub fn n_coords(&self) -> usize {
        self.observables.len()
    }

    pub fn observables(&self) -> &[Observable] {
        &self.observables
    }

    pub fn n_tuples(&self) -> usize {
        self.outcomes.len()
    }

    /// Outcome tuples as eigenvalues, in deterministic index order.
    pub fn tuples(&self) -> Vec<Vec<f64>> {
        self.outcomes
            .iter()
            .map(|idx| {
                idx.iter()
                    .zip(&self.observables)
                    .map(|(&k, o)| o.eigenvalues()[k])
                    .collect()
            })
            .collect()
    }
}

fn expand_product(
    per_coord: &[Vec<usize>],
    depth: usize,
    stack: &mut Vec<usize>,
    out: &mut BTreeSet<Vec<usize>>,
) {
    if depth == per_coord.len() {
        out.insert(stack.clone());
        return;
    }
    for &k in &per_coord[depth] {
        stack[depth] = k;
        expand_product(per_coord, depth + 1, stack, out);
    }
}

fn validate_observable_list(observables: &[Observable]) -> Result<()> {
    if observables.is_empty() {
        return Err(CoreError::InvalidArgument(
            "at least one observable required".into(),
        ));
    }
    if observables.len() > tol::SYM_FACTOR_CAP {
        return Err(CoreError::FactorCapExceeded {
            count: observables.len(),
            cap: tol::SYM_FACTOR_CAP,
        });
    }
    let dim = observables[0].dim();
    for o in observables {
        if o.dim() != dim {
            return Err(CoreError::DimensionMismatch {
                expected: dim,
                found: o.dim(),
            });
        }
    }
    Ok(())
}

fn factorial(n: usize) -> f64 {
    (1..=n).product::<usize>() as f64
}

/// Measure of a cylindrical event.
pub fn mu_value(rho: &DensityMatrix, event: &CylindricalEvent) -> Result<f64> {
    let obs = event.observables();
    if rho.dim() != obs[0].dim() {
        return Err(CoreError::DimensionMismatch {
            expected: obs[0].dim(),
            found: rho.dim(),
        });
    }
    let n = event.n_coords();
    let mut total = 0.0;
    for idx in &event.outcomes {
        let projectors: Vec<&HermitianOperator> = idx
            .iter()
            .zip(obs)
            .map(|(&k, o)| o.projector(k))
            .collect();
        let sym = symmetrized_product(&projectors)?;
        total += trace_pairing(rho, &sym)?;
    }
    Ok(total / factorial(n))
}

/// A signed distribution over a rectangular outcome grid. Axes hold the
/// outcome values per coordinate; values are stored row major with the last
/// axis fastest.
#[derive(Clone, Debug)]
pub struct SignedDistribution {
    axes: Vec<Vec<f64>>,
    values: Vec<f64>,
}

impl SignedDistribution {
    pub fn zeros(axes: Vec<Vec<f64>>, max_cells: usize) -> Result<Self> {
        let mut cells = 1usize;
        for axis in &axes {
            if axis.is_empty() {
                return Err(CoreError::InvalidArgument("empty axis".into()));
            }
            cells = cells.checked_mul(axis.len()).ok_or(CoreError::GridTooLarge {
                cells: usize::MAX,
                limit: max_cells,
            })?;
        }
        if cells > max_cells {
            return Err(CoreError::GridTooLarge {
                cells,
                limit: max_cells,
            });
        }
        Ok(Self {
            axes,
            values: vec![0.0; cells],
        })
    }

    pub fn n_axes(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Vec<f64>] {
        &self.axes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n_cells(&self) -> usize {
        self.values.len()
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.axes.len());
        let mut flat = 0;
        for (k, axis) in idx.iter().zip(&self.axes) {
            debug_assert!(*k < axis.len());
            flat = flat * axis.len() + k;
        }
        flat
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.values[self.flat_index(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: f64) {
        let flat = self.flat_index(idx);
        self.values[flat] = v;
    }

    pub fn add_at(&mut self, idx: &[usize], v: f64) {
        let flat = self.flat_index(idx);
        self.values[flat] += v;
    }

    /// Multi-index of a flat position.
    pub fn unflatten(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0usize; self.axes.len()];
        for (slot, axis) in idx.iter_mut().zip(&self.axes).rev() {
            *slot = flat % axis.len();
            flat /= axis.len();
        }
        idx
    }

    /// Outcome tuple at a flat position.
    pub fn tuple_at(&self, flat: usize) -> Vec<f64> {
        self.unflatten(flat)
            .iter()
            .zip(&self.axes)
            .map(|(&k, axis)| axis[k])
            .collect()
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Total variation norm: sum of absolute values over the grid.
    pub fn total_variation(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum()
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |m, &v| m.min(v))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.values.len(), other.values.len());
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Tabulates the measure over the full outcome grid of the given observables.
/// The result sums to one within `tol::NORMALIZATION_ABS` (verified).
pub fn full_distribution(
    rho: &DensityMatrix,
    observables: &[Observable],
) -> Result<SignedDistribution> {
    full_distribution_capped(rho, observables, tol::MAX_GRID_CELLS)
}

pub fn full_distribution_capped(
    rho: &DensityMatrix,
    observables: &[Observable],
    max_cells: usize,
) -> Result<SignedDistribution> {
    validate_observable_list(observables)?;
    if rho.dim() != observables[0].dim() {
        return Err(CoreError::DimensionMismatch {
            expected: observables[0].dim(),
            found: rho.dim(),
        });
    }
    let axes: Vec<Vec<f64>> = observables
        .iter()
        .map(|o| o.eigenvalues().to_vec())
        .collect();
    let mut dist = SignedDistribution::zeros(axes, max_cells)?;
    let n = observables.len();
    let norm = factorial(n);
    for flat in 0..dist.n_cells() {
        let idx = dist.unflatten(flat);
        let projectors: Vec<&HermitianOperator> = idx
            .iter()
            .zip(observables)
            .map(|(&k, o)| o.projector(k))
            .collect();
        let sym = symmetrized_product(&projectors)?;
        dist.values[flat] = trace_pairing(rho, &sym)? / norm;
    }
    let total = dist.sum();
    if (total - 1.0).abs() > tol::NORMALIZATION_ABS {
        return Err(CoreError::NumericalCheck(format!(
            "grid sum {total} deviates from 1 beyond {}",
            tol::NORMALIZATION_ABS
        )));
    }
    Ok(dist)
}

/// Ordinary joint probability of pairwise commuting observables:
/// tr[rho P_1(B_1) ... P_n(B_n)]. Rejects pairs whose commutator norm
/// exceeds `tol::COMMUTE_REL` times the product of operator norms.
pub fn commuting_joint_probability(
    rho: &DensityMatrix,
    pairs: &[(Observable, Vec<f64>)],
) -> Result<f64> {
    let observables: Vec<Observable> = pairs.iter().map(|(o, _)| o.clone()).collect();
    validate_observable_list(&observables)?;
    for i in 0..observables.len() {
        for j in (i + 1)..observables.len() {
            let norm = commutator_norm(observables[i].operator(), observables[j].operator());
            let scale = operator_norm(observables[i].operator())
                * operator_norm(observables[j].operator());
            if norm > tol::COMMUTE_REL * scale.max(f64::MIN_POSITIVE) {
                return Err(CoreError::NonCommuting { i, j, norm });
            }
        }
    }
    let dim = observables[0].dim();
    if rho.dim() != dim {
        return Err(CoreError::DimensionMismatch {
            expected: dim,
            found: rho.dim(),
        });
    }
    let mut prod: Option<ComplexMatrix> = None;
    for (obs, subset) in pairs {
        let p = obs.subset_projector(subset)?;
        prod = Some(match prod {
            None => p.matrix().clone(),
            Some(m) => m * p.matrix(),
        });
    }
    let t = trace_product(rho.matrix(), &prod.unwrap());
    if t.im.abs() > tol::TRACE_IMAG_ABS {
        return Err(CoreError::ComplexTrace {
            imag: t.im,
            tolerance: tol::TRACE_IMAG_ABS,
        });
    }
    Ok(t.re)
}

/// A random variable representation of an observable: a base observable
/// measured by the apparatus and a total relabeling of its spectrum. The
/// represented observable is the image sum(labels_k P_k).
#[derive(Clone, Debug)]
pub struct RandomVariableRep {
    base: Observable,
    labels: Vec<f64>,
}

impl RandomVariableRep {
    pub fn new(base: Observable, labels: Vec<f64>) -> Result<Self> {
        if labels.len() != base.n_outcomes() {
            return Err(CoreError::DimensionMismatch {
                expected: base.n_outcomes(),
                found: labels.len(),
            });
        }
        if labels.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::InvalidArgument(
                "relabeling contains a non-finite value".into(),
            ));
        }
        Ok(Self { base, labels })
    }

    pub fn from_fn(base: Observable, f: impl Fn(f64) -> f64) -> Result<Self> {
        let labels = base.eigenvalues().iter().map(|&v| f(v)).collect();
        Self::new(base, labels)
    }

    pub fn identity(base: Observable) -> Self {
        let labels = base.eigenvalues().to_vec();
        Self { base, labels }
    }

    pub fn base(&self) -> &Observable {
        &self.base
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    /// Base eigenvalues whose label falls in the given subset of the induced
    /// spectrum (matched within the grouping tolerance).
    pub fn pullback(&self, subset: &[f64]) -> Vec<f64> {
        let scale = self.labels.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let atol = tol::GROUPING_REL * scale;
        self.base
            .eigenvalues()
            .iter()
            .zip(&self.labels)
            .filter(|(_, &label)| subset.iter().any(|&s| (s - label).abs() <= atol))
            .map(|(&ev, _)| ev)
            .collect()
    }
}

/// The observable represented by a base observable plus relabeling: spectral
/// points with equal labels merge, projectors add, and the spectrum is the
/// sorted set of distinct labels.
pub fn induced_observable(rep: &RandomVariableRep) -> Result<Observable> {
    let scale = rep.labels.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let atol = tol::GROUPING_REL * scale;
    let mut order: Vec<usize> = (0..rep.labels.len()).collect();
    order.sort_by(|&a, &b| {
        rep.labels[a]
            .partial_cmp(&rep.labels[b])
            .unwrap()
            .then(a.cmp(&b))
    });

    let dim = rep.base.dim();
    let mut eigenvalues = Vec::new();
    let mut projectors = Vec::new();
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len()
            && rep.labels[order[end]] - rep.labels[order[end - 1]] <= atol
        {
            end += 1;
        }
        let group = &order[start..end];
        let mean = group.iter().map(|&k| rep.labels[k]).sum::<f64>() / group.len() as f64;
        let mut proj = ComplexMatrix::zeros(dim, dim);
        for &k in group {
            proj += rep.base.projector(k).matrix();
        }
        eigenvalues.push(mean);
        projectors.push(HermitianOperator::wrap(proj));
        start = end;
    }
    Observable::from_parts(SpectralDecomposition {
        eigenvalues,
        projectors,
    })
}

/// Measure of a product event specified through representations: subsets of
/// the induced spectra are pulled back through each relabeling and the
/// measure is evaluated on the base observables. Context invariance of the
/// measure makes this equal to `mu_value` on the induced observables.
pub fn mu_value_via_reps(
    rho: &DensityMatrix,
    reps: &[RandomVariableRep],
    subsets: &[Vec<f64>],
) -> Result<f64> {
    if reps.len() != subsets.len() {
        return Err(CoreError::DimensionMismatch {
            expected: reps.len(),
            found: subsets.len(),
        });
    }
    let mut base_obs = Vec::with_capacity(reps.len());
    let mut base_subsets = Vec::with_capacity(reps.len());
    for (i, (rep, subset)) in reps.iter().zip(subsets).enumerate() {
        let induced = induced_observable(rep)?;
        for &v in subset {
            if induced.outcome_index(v).is_none() {
                return Err(CoreError::OutcomeNotInSpectrum { index: i, value: v });
            }
        }
        base_obs.push(rep.base().clone());
        base_subsets.push(rep.pullback(subset));
    }
    let event = CylindricalEvent::product(base_obs, &base_subsets)?;
    mu_value(rho, &event)
}

/// Expectation of the product of outcomes under the measure:
/// sum over the grid of x_1 ... x_n times the cell value, computed in closed
/// form as (1/n!) tr[rho {X_1 ... X_n}_sym].
pub fn product_expectation(rho: &DensityMatrix, observables: &[Observable]) -> Result<f64> {
    validate_observable_list(observables)?;
    let ops: Vec<&HermitianOperator> = observables.iter().map(|o| o.operator()).collect();
    let sym = symmetrized_product(&ops)?;
    Ok(trace_pairing(rho, &sym)? / factorial(observables.len()))
}

/// Verifies that the measure is affine in the state: the distribution of a
/// mixture equals the mixture of distributions, cell by cell.
pub fn mixture_linearity_check(
    states: &[DensityMatrix],
    weights: &[f64],
    observables: &[Observable],
) -> Result<Check> {
    let mixed = DensityMatrix::mix(states, weights)?;
    let mixed_dist = full_distribution(&mixed, observables)?;
    let mut combined = vec![0.0; mixed_dist.n_cells()];
    for (state, &w) in states.iter().zip(weights) {
        let dist = full_distribution(state, observables)?;
        for (acc, v) in combined.iter_mut().zip(dist.values()) {
            *acc += w * v;
        }
    }
    let dev = mixed_dist
        .values()
        .iter()
        .zip(&combined)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(Check::deviation("mixture-linearity", dev, tol::EQUALITY_ABS))
}

/// Projective tomogram of the state in the rotated basis: the diagonal of
/// U rho U^H. Entries are Born probabilities, hence nonnegative and summing
/// to one; both are up to the admission tolerance of the state.
pub fn tomogram(rho: &DensityMatrix, u: &ComplexMatrix) -> Result<Vec<f64>> {
    if u.nrows() != u.ncols() {
        return Err(CoreError::NotSquare {
            rows: u.nrows(),
            cols: u.ncols(),
        });
    }
    if u.nrows() != rho.dim() {
        return Err(CoreError::DimensionMismatch {
            expected: rho.dim(),
            found: u.nrows(),
        });
    }
    let dev = crate::operator::max_abs(&(u * u.adjoint() - crate::operator::identity(u.nrows())));
    if dev > tol::UNITARITY_ABS {
        return Err(CoreError::NotUnitary { deviation: dev });
    }
    let rotated = u * rho.matrix() * u.adjoint();
    Ok((0..rho.dim()).map(|s| rotated[(s, s)].re).collect())
}

/// Pushes a distribution forward through a relabeling of one coordinate.
/// Output axis values are the sorted distinct images; cells with equal image
/// accumulate.
pub fn pushforward_coord(
    dist: &SignedDistribution,
    coord: usize,
    map: impl Fn(f64) -> f64,
) -> Result<SignedDistribution> {
    if coord >= dist.n_axes() {
        return Err(CoreError::SiteOutOfRange {
            site: coord,
            n_sites: dist.n_axes(),
        });
    }
    let images: Vec<f64> = dist.axes()[coord].iter().map(|&v| map(v)).collect();
    let scale = images.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let atol = tol::GROUPING_REL * scale;
    let mut new_axis: Vec<f64> = Vec::new();
    let mut assignment = vec![0usize; images.len()];
    let mut sorted: Vec<usize> = (0..images.len()).collect();
    sorted.sort_by(|&a, &b| images[a].partial_cmp(&images[b]).unwrap().then(a.cmp(&b)));
    for &k in &sorted {
        match new_axis.last() {
            Some(&last) if images[k] - last <= atol => {
                assignment[k] = new_axis.len() - 1;
            }
            _ => {
                new_axis.push(images[k]);
                assignment[k] = new_axis.len() - 1;
            }
        }
    }
    let mut axes = dist.axes().to_vec();
    axes[coord] = new_axis;
    let mut out = SignedDistribution::zeros(axes, usize::MAX)?;
    for flat in 0..dist.n_cells() {
        let mut idx = dist.unflatten(flat);
        idx[coord] = assignment[idx[coord]];
        out.add_at(&idx, dist.values()[flat]);
    }
    Ok(out)
}

/// The documented representation family used by context-invariance checks:
/// identity, an affine rescaling, a square relabeling of a shifted square
/// root base, and a relabeling of a nondegenerate refinement of the
/// eigenbasis (a coarse-graining representation).
pub fn standard_relabelings(x: &Observable) -> Result<Vec<(String, RandomVariableRep)>> {
    let mut family = vec![("identity".to_string(), RandomVariableRep::identity(x.clone()))];

    // affine: base Y = (X + 1/2)/2, labels 2y - 1/2
    let affine_base = Observable::from_parts(SpectralDecomposition {
        eigenvalues: x.eigenvalues().iter().map(|&v| (v + 0.5) / 2.0).collect(),
        projectors: x.spectrum().projectors.clone(),
    })?;
    family.push((
        "affine".to_string(),
        RandomVariableRep::from_fn(affine_base, |y| 2.0 * y - 0.5)?,
    ));

    // square: base Y = sqrt(X + c), labels y^2 - c, with c chosen so the
    // shifted spectrum is strictly positive
    let c = 1.0 + x.eigenvalues().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let sqrt_base = Observable::from_parts(SpectralDecomposition {
        eigenvalues: x.eigenvalues().iter().map(|&v| (v + c).sqrt()).collect(),
        projectors: x.spectrum().projectors.clone(),
    })?;
    family.push((
        "square".to_string(),
        RandomVariableRep::from_fn(sqrt_base, move |y| y * y - c)?,
    ));

    // refinement: nondegenerate base with integer spectrum along an
    // eigenbasis, labels map each basis slot back to its spectral point
    let (rank_ones, groups) = eigenbasis_projectors(x);
    let refined = Observable::from_parts(SpectralDecomposition {
        eigenvalues: (0..rank_ones.len()).map(|k| (k + 1) as f64).collect(),
        projectors: rank_ones,
    })?;
    let labels: Vec<f64> = groups.iter().map(|&g| x.eigenvalues()[g]).collect();
    family.push((
        "refinement".to_string(),
        RandomVariableRep::new(refined, labels)?,
    ));

    Ok(family)
}

/// Largest deviation between direct measure values and values computed
/// through each member of the standard representation family, swapped in one
/// coordinate at a time over the full outcome grid.
pub fn context_invariance_check(
    rho: &DensityMatrix,
    observables: &[Observable],
) -> Result<Check> {
    let mut max_dev: f64 = 0.0;
    let direct = full_distribution(rho, observables)?;
    for (i, x) in observables.iter().enumerate() {
        for (_, rep) in standard_relabelings(x)? {
            let reps: Vec<RandomVariableRep> = observables
                .iter()
                .enumerate()
                .map(|(j, o)| {
                    if j == i {
                        rep.clone()
                    } else {
                        RandomVariableRep::identity(o.clone())
                    }
                })
                .collect();
            for flat in 0..direct.n_cells() {
                let tuple = direct.tuple_at(flat);
                let subsets: Vec<Vec<f64>> = tuple.iter().map(|&v| vec![v]).collect();
                let via = mu_value_via_reps(rho, &reps, &subsets)?;
                max_dev = max_dev.max((via - direct.values()[flat]).abs());
            }
        }
    }
    Ok(Check::deviation(
        "context-invariance",
        max_dev,
        tol::EQUALITY_ABS,
    ))
}
