//! Local signed models for multipartite correlation scenarios.
//!
//! A scenario has N sites, each measuring one of two qudit observables per
//! run. `build_nu_npartite` constructs a single signed distribution nu over
//! the product of all 2N spectra that reproduces every quantum joint
//! distribution of the scenario as a marginal, with outcomes at different
//! settings of one site drawn from one common space. Locality comes at the
//! price of signed weights; the total variation norm of nu is bounded by
//! d^((N-1)/2), with a sharper per instance certificate from the operator
//! norms of the non-pivot absolute symmetrized products.
//!
//! Construction, pivot site 0: for each non-pivot site n and outcome pair
//! (x, x') let T^(+,-) be the Jordan parts of (1/2){P_Xn1(x) P_Xn2(x')}_sym.
//! For a sign vector s over the non-pivot sites, w_s = tr[rho (I x T^(s))]
//! weights a product of two conditional distributions for the pivot site,
//! alpha_s(x) = tr[rho (P(x) x T^(s))] / w_s, and
//!
//!   nu = sum_s sign(s) alpha_s(x0) alpha_s(x0') w_s.
//!
//! Summing the sign-weighted T parts telescopes back to the symmetrized
//! projector products, which is what makes every marginal quantum.

use crate::error::CoreError;
use crate::measure::SignedDistribution;
use crate::operator::{
    identity, jordan_decompose, kron, max_abs, operator_norm, sum_abs_symmetrized,
    sum_abs_symmetrized_closed_form, symmetrized_product, trace_product, Complex64,
    ComplexMatrix, DensityMatrix, Observable,
};
use crate::report::Check;
use crate::tol;
use crate::Result;

/// An N site, two settings per site, qudit measurement scenario.
#[derive(Clone, Debug)]
pub struct ScenarioSpec {
    n_sites: usize,
    local_dim: usize,
    settings: Vec<[Observable; 2]>,
    state: DensityMatrix,
}

impl ScenarioSpec {
    pub fn new(
        n_sites: usize,
        local_dim: usize,
        settings: Vec<[Observable; 2]>,
        state: DensityMatrix,
    ) -> Result<Self> {
        if n_sites < 2 {
            return Err(CoreError::InvalidArgument(
                "a scenario needs at least 2 sites".into(),
            ));
        }
        if local_dim < 2 {
            return Err(CoreError::InvalidArgument(
                "local dimension must be at least 2".into(),
            ));
        }
        if settings.len() != n_sites {
            return Err(CoreError::DimensionMismatch {
                expected: n_sites,
                found: settings.len(),
            });
        }
        for pair in &settings {
            for obs in pair {
                if obs.dim() != local_dim {
                    return Err(CoreError::DimensionMismatch {
                        expected: local_dim,
                        found: obs.dim(),
                    });
                }
            }
        }
        let total = local_dim
            .checked_pow(n_sites as u32)
            .ok_or_else(|| CoreError::InvalidArgument("d^N overflows".into()))?;
        if state.dim() != total {
            return Err(CoreError::DimensionMismatch {
                expected: total,
                found: state.dim(),
            });
        }
        Ok(Self {
            n_sites,
            local_dim,
            settings,
            state,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn settings(&self) -> &[[Observable; 2]] {
        &self.settings
    }

    pub fn state(&self) -> &DensityMatrix {
        &self.state
    }

    /// Upper bound d^((N-1)/2) on the total variation of any model built for
    /// this scenario shape.
    pub fn dimensional_bound(&self) -> f64 {
        (self.local_dim as f64).powf((self.n_sites as f64 - 1.0) / 2.0)
    }
}

/// Options for the model construction.
#[derive(Clone, Copy, Debug)]
pub struct BuildOptions {
    /// Site whose outcomes are drawn from the sign-conditional
    /// distributions. Any choice satisfies the marginal and norm properties.
    pub pivot: usize,
    pub max_cells: usize,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            pivot: 0,
            max_cells: tol::MAX_GRID_CELLS,
        }
    }
}

/// A constructed local signed model. The table has 2N axes ordered
/// site-major: (site 0 setting 1, site 0 setting 2, site 1 setting 1, ...).
#[derive(Clone, Debug)]
pub struct ScenarioDistribution {
    spec: ScenarioSpec,
    pivot: usize,
    table: SignedDistribution,
}

impl ScenarioDistribution {
    pub fn spec(&self) -> &ScenarioSpec {
        &self.spec
    }

    pub fn pivot(&self) -> usize {
        self.pivot
    }

    pub fn table(&self) -> &SignedDistribution {
        &self.table
    }

    pub fn total_variation(&self) -> f64 {
        self.table.total_variation()
    }
}

/// Sum of the absolute values of the model over its grid.
pub fn total_variation(dist: &ScenarioDistribution) -> f64 {
    dist.total_variation()
}

/// Two site model built directly from the sign split of the partner site's
/// symmetrized projector products (without the 1/2 scaling used by the
/// N site construction; the factor moves outside the Jordan split here).
pub fn build_nu_bipartite(spec: &ScenarioSpec) -> Result<ScenarioDistribution> {
    if spec.n_sites != 2 {
        return Err(CoreError::InvalidArgument(format!(
            "bipartite construction requires 2 sites, got {}",
            spec.n_sites
        )));
    }
    let d = spec.local_dim;
    let rho = spec.state.matrix();
    let [x1, x2] = &spec.settings[0];
    let [y1, y2] = &spec.settings[1];

    let axes = vec![
        x1.eigenvalues().to_vec(),
        x2.eigenvalues().to_vec(),
        y1.eigenvalues().to_vec(),
        y2.eigenvalues().to_vec(),
    ];
    let mut table = SignedDistribution::zeros(axes, tol::MAX_GRID_CELLS)?;

    for b1 in 0..y1.n_outcomes() {
        for b2 in 0..y2.n_outcomes() {
            let z = symmetrized_product(&[y1.projector(b1), y2.projector(b2)])?;
            let pair = jordan_decompose(&z, tol::JORDAN_ZERO_REL);
            for (sign, part) in [(1.0, &pair.positive_part), (-1.0, &pair.negative_part)] {
                let s_m = pivot_contraction(rho, d, part.matrix());
                let w = pivot_trace(&s_m, &identity(d))?;
                let a1 = conditional_weights(&s_m, x1, w)?;
                let a2 = conditional_weights(&s_m, x2, w)?;
                for (u, &p) in a1.iter().enumerate() {
                    for (v, &q) in a2.iter().enumerate() {
                        table.add_at(&[u, v, b1, b2], 0.5 * sign * p * q * w);
                    }
                }
            }
        }
    }
    finish_model(spec.clone(), 0, table)
}

/// N site model, pivot site 0 by default.
pub fn build_nu_npartite(spec: &ScenarioSpec) -> Result<ScenarioDistribution> {
    build_nu_npartite_with(spec, BuildOptions::default())
}

pub fn build_nu_npartite_with(
    spec: &ScenarioSpec,
    options: BuildOptions,
) -> Result<ScenarioDistribution> {
    let n = spec.n_sites;
    if options.pivot >= n {
        return Err(CoreError::SiteOutOfRange {
            site: options.pivot,
            n_sites: n,
        });
    }
    // Work with the pivot moved to the front, then map coordinates back.
    let sigma = site_permutation(n, options.pivot);
    let rho = permute_state(spec.state.matrix(), spec.local_dim, n, &sigma);
    let settings: Vec<&[Observable; 2]> = sigma.iter().map(|&s| &spec.settings[s]).collect();
    let permuted = build_pivot_front(&rho, spec.local_dim, &settings, options.max_cells)?;

    // Reorder axis blocks to the original site order.
    let mut axes = vec![Vec::new(); 2 * n];
    for (m, &site) in sigma.iter().enumerate() {
        axes[2 * site] = permuted.axes()[2 * m].clone();
        axes[2 * site + 1] = permuted.axes()[2 * m + 1].clone();
    }
    let mut table = SignedDistribution::zeros(axes, options.max_cells)?;
    let mut original_idx = vec![0usize; 2 * n];
    for flat in 0..permuted.n_cells() {
        let idx = permuted.unflatten(flat);
        for (m, &site) in sigma.iter().enumerate() {
            original_idx[2 * site] = idx[2 * m];
            original_idx[2 * site + 1] = idx[2 * m + 1];
        }
        table.set(&original_idx, permuted.values()[flat]);
    }
    finish_model(spec.clone(), options.pivot, table)
}

/// Order sites as (pivot, everything else ascending).
fn site_permutation(n: usize, pivot: usize) -> Vec<usize> {
    let mut sigma = vec![pivot];
    sigma.extend((0..n).filter(|&s| s != pivot));
    sigma
}

/// rho with tensor factors reordered so that old site sigma[m] becomes
/// position m.
fn permute_state(rho: &ComplexMatrix, d: usize, n: usize, sigma: &[usize]) -> ComplexMatrix {
    let total = rho.nrows();
    // place value of the digit at new position m
    let mut old_place = vec![0usize; n];
    for (m, &site) in sigma.iter().enumerate() {
        old_place[m] = d.pow((n - 1 - site) as u32);
    }
    let old_index = |mut new: usize| -> usize {
        let mut old = 0usize;
        for m in (0..n).rev() {
            let digit = new % d;
            new /= d;
            old += digit * old_place[m];
        }
        old
    };
    let map: Vec<usize> = (0..total).map(old_index).collect();
    ComplexMatrix::from_fn(total, total, |i, j| rho[(map[i], map[j])])
}

/// S_M[a][b] = sum_{j,k} rho[(a,j),(b,k)] M[k,j], the d x d matrix with
/// tr[rho (A x M)] = sum_{a,b} A[b,a] S_M[a,b] for any site 0 operator A.
fn pivot_contraction(rho: &ComplexMatrix, d: usize, m: &ComplexMatrix) -> ComplexMatrix {
    let rest = m.nrows();
    let mut s = ComplexMatrix::zeros(d, d);
    for a in 0..d {
        for b in 0..d {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..rest {
                for j in 0..rest {
                    acc += rho[(a * rest + j, b * rest + k)] * m[(k, j)];
                }
            }
            s[(a, b)] = acc;
        }
    }
    s
}

/// tr[rho (A x M)] computed from the contraction, with the imaginary part
/// checked against the trace tolerance.
fn pivot_trace(s_m: &ComplexMatrix, a: &ComplexMatrix) -> Result<f64> {
    let d = s_m.nrows();
    let mut t = Complex64::new(0.0, 0.0);
    for i in 0..d {
        for j in 0..d {
            t += a[(j, i)] * s_m[(i, j)];
        }
    }
    if t.im.abs() > tol::TRACE_IMAG_ABS {
        return Err(CoreError::ComplexTrace {
            imag: t.im,
            tolerance: tol::TRACE_IMAG_ABS,
        });
    }
    Ok(t.re)
}

/// Conditional outcome weights of a pivot observable given the already
/// contracted non-pivot operator. Denominators at or below the zero
/// threshold fall back to the uniform distribution; the weight w then also
/// vanishes, so the term contributes nothing either way.
fn conditional_weights(s_m: &ComplexMatrix, x: &Observable, w: f64) -> Result<Vec<f64>> {
    let m = x.n_outcomes();
    if w.abs() <= tol::ZERO_DENOM_ABS {
        return Ok(vec![1.0 / m as f64; m]);
    }
    let mut out = Vec::with_capacity(m);
    for k in 0..m {
        out.push(pivot_trace(s_m, x.projector(k).matrix())? / w);
    }
    Ok(out)
}

/// The construction proper, pivot at tensor position 0.
fn build_pivot_front(
    rho: &ComplexMatrix,
    d: usize,
    settings: &[&[Observable; 2]],
    max_cells: usize,
) -> Result<SignedDistribution> {
    let n = settings.len();
    let n_rest = n - 1;
    let [x1, x2] = settings[0];

    // Jordan parts of (1/2){P P}_sym for every non-pivot site and outcome
    // pair, indexed [site-1][a * m2 + b].
    let mut parts: Vec<Vec<JordanParts>> = Vec::with_capacity(n_rest);
    for site in 1..n {
        let [y1, y2] = settings[site];
        let mut table = Vec::with_capacity(y1.n_outcomes() * y2.n_outcomes());
        for a in 0..y1.n_outcomes() {
            for b in 0..y2.n_outcomes() {
                let z = symmetrized_product(&[y1.projector(a), y2.projector(b)])?.scale(0.5);
                let pair = jordan_decompose(&z, tol::JORDAN_ZERO_REL);
                table.push(JordanParts {
                    plus: pair.positive_part.into_matrix(),
                    minus: pair.negative_part.into_matrix(),
                });
            }
        }
        parts.push(table);
    }

    let mut axes = vec![x1.eigenvalues().to_vec(), x2.eigenvalues().to_vec()];
    for site in 1..n {
        axes.push(settings[site][0].eigenvalues().to_vec());
        axes.push(settings[site][1].eigenvalues().to_vec());
    }
    let mut table = SignedDistribution::zeros(axes, max_cells)?;

    // Enumerate non-pivot outcome assignments (one (a, b) pair per site).
    let pair_counts: Vec<usize> = (1..n)
        .map(|site| settings[site][0].n_outcomes() * settings[site][1].n_outcomes())
        .collect();
    let mut assignment = vec![0usize; n_rest];
    let mut idx = vec![0usize; 2 * n];
    loop {
        for s_bits in 0..(1usize << n_rest) {
            // Kronecker of the chosen Jordan parts across non-pivot sites.
            let mut m: Option<ComplexMatrix> = None;
            let mut sign = 1.0;
            for (r, &cell) in assignment.iter().enumerate() {
                let part = if s_bits >> r & 1 == 0 {
                    &parts[r][cell].plus
                } else {
                    sign = -sign;
                    &parts[r][cell].minus
                };
                m = Some(match m {
                    None => part.clone(),
                    Some(acc) => kron(&acc, part),
                });
            }
            let m = m.expect("at least one non-pivot site");
            let s_m = pivot_contraction(rho, d, &m);
            let w = pivot_trace(&s_m, &identity(d))?;
            let a1 = conditional_weights(&s_m, x1, w)?;
            let a2 = conditional_weights(&s_m, x2, w)?;

            for (r, &cell) in assignment.iter().enumerate() {
                let m2 = settings[r + 1][1].n_outcomes();
                idx[2 * (r + 1)] = cell / m2;
                idx[2 * (r + 1) + 1] = cell % m2;
            }
            for (u, &p) in a1.iter().enumerate() {
                idx[0] = u;
                for (v, &q) in a2.iter().enumerate() {
                    idx[1] = v;
                    table.add_at(&idx, sign * p * q * w);
                }
            }
        }
        // advance the mixed radix assignment counter
        let mut r = 0;
        loop {
            if r == n_rest {
                return Ok(table);
            }
            assignment[r] += 1;
            if assignment[r] < pair_counts[r] {
                break;
            }
            assignment[r] = 0;
            r += 1;
        }
    }
}

struct JordanParts {
    plus: ComplexMatrix,
    minus: ComplexMatrix,
}

/// Validates normalization and the dimensional total variation bound before
/// releasing a model. Both are theorems of the construction, so a failure
/// indicates numerical breakdown.
fn finish_model(
    spec: ScenarioSpec,
    pivot: usize,
    table: SignedDistribution,
) -> Result<ScenarioDistribution> {
    let sum = table.sum();
    if (sum - 1.0).abs() > tol::NORMALIZATION_ABS {
        return Err(CoreError::NumericalCheck(format!(
            "model sums to {sum}, expected 1"
        )));
    }
    let tv = table.total_variation();
    let bound = spec.dimensional_bound();
    if tv > bound + tol::BOUND_SLACK_ABS {
        return Err(CoreError::NumericalCheck(format!(
            "total variation {tv} exceeds dimensional bound {bound}"
        )));
    }
    Ok(ScenarioDistribution { spec, pivot, table })
}

/// Per setting tuple marginal deviations of a model from the quantum joint
/// distributions it must reproduce.
#[derive(Clone, Debug)]
pub struct MarginalReport {
    /// One entry per setting tuple in {1,2}^N (stored zero-based), with the
    /// largest absolute deviation over that tuple's outcome grid.
    pub per_tuple: Vec<(Vec<u8>, f64)>,
    pub max_abs_deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Checks that for every setting tuple the sum of the model over unused
/// coordinates equals tr[rho (P x ... x P)] cell by cell.
pub fn marginal_check(dist: &ScenarioDistribution) -> Result<MarginalReport> {
    let spec = dist.spec();
    let n = spec.n_sites();
    let table = dist.table();
    let mut per_tuple = Vec::with_capacity(1 << n);
    let mut global_max: f64 = 0.0;

    for bits in 0..(1usize << n) {
        let tuple: Vec<u8> = (0..n).map(|s| (bits >> s & 1) as u8).collect();
        // coordinates of the chosen settings, site-major table layout
        let coords: Vec<usize> = (0..n).map(|s| 2 * s + tuple[s] as usize).collect();
        let sizes: Vec<usize> = coords.iter().map(|&c| table.axes()[c].len()).collect();
        let cells: usize = sizes.iter().product();

        let mut marginal = vec![0.0f64; cells];
        for flat in 0..table.n_cells() {
            let idx = table.unflatten(flat);
            let mut out = 0usize;
            for (c, size) in coords.iter().zip(&sizes) {
                out = out * size + idx[*c];
            }
            marginal[out] += table.values()[flat];
        }

        let mut dev: f64 = 0.0;
        let mut cell_idx = vec![0usize; n];
        for (flat, model_p) in marginal.iter().enumerate() {
            let mut rem = flat;
            for s in (0..n).rev() {
                cell_idx[s] = rem % sizes[s];
                rem /= sizes[s];
            }
            let mut joint: Option<ComplexMatrix> = None;
            for s in 0..n {
                let obs = &spec.settings()[s][tuple[s] as usize];
                let p = obs.projector(cell_idx[s]).matrix();
                joint = Some(match joint {
                    None => p.clone(),
                    Some(acc) => kron(&acc, p),
                });
            }
            let t = trace_product(spec.state().matrix(), &joint.unwrap());
            dev = dev.max((model_p - t.re).abs());
        }
        global_max = global_max.max(dev);
        per_tuple.push((tuple, dev));
    }

    Ok(MarginalReport {
        per_tuple,
        max_abs_deviation: global_max,
        tolerance: tol::EQUALITY_ABS,
        passed: global_max <= tol::EQUALITY_ABS,
    })
}

/// Total variation certificate: the measured norm of the constructed model,
/// the per site operator norm product bounding it, and the dimensional
/// closed form bounding that in turn.
#[derive(Clone, Debug)]
pub struct TvCertificate {
    /// (1/2) ||sum |{P P}_sym|||_op per non-pivot site, numeric Jordan path.
    pub per_site_factors: Vec<f64>,
    /// Largest deviation between the numeric and closed-form absolute sums,
    /// present when every non-pivot site is nondegenerate.
    pub closed_form_agreement: Option<f64>,
    pub product_bound: f64,
    pub dimensional_bound: f64,
    pub total_variation: f64,
    pub checks: Vec<Check>,
}

impl TvCertificate {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

pub fn tv_bound_certificate(spec: &ScenarioSpec) -> Result<TvCertificate> {
    tv_bound_certificate_with(spec, BuildOptions::default())
}

pub fn tv_bound_certificate_with(
    spec: &ScenarioSpec,
    options: BuildOptions,
) -> Result<TvCertificate> {
    let dist = build_nu_npartite_with(spec, options)?;
    let tv = dist.total_variation();

    let mut per_site_factors = Vec::new();
    let mut agreement: Option<f64> = Some(0.0);
    for (site, pair) in spec.settings().iter().enumerate() {
        if site == options.pivot {
            continue;
        }
        let numeric = sum_abs_symmetrized(&pair[0], &pair[1])?;
        per_site_factors.push(0.5 * operator_norm(&numeric));
        if pair[0].is_nondegenerate() && pair[1].is_nondegenerate() {
            let closed = sum_abs_symmetrized_closed_form(&pair[0], &pair[1])?;
            let dev = max_abs(&(numeric.matrix() - closed.matrix()));
            agreement = agreement.map(|a: f64| a.max(dev));
        } else {
            agreement = None;
        }
    }
    let product_bound: f64 = per_site_factors.iter().product();
    let dimensional_bound = spec.dimensional_bound();

    let mut checks = vec![
        Check::upper(
            "tv-within-product-bound",
            tv,
            product_bound,
            tol::BOUND_SLACK_ABS,
        ),
        Check::upper(
            "product-bound-within-dimensional",
            product_bound,
            dimensional_bound,
            tol::BOUND_SLACK_ABS,
        ),
    ];
    if let Some(dev) = agreement {
        checks.push(Check::deviation(
            "absolute-sum-closed-form-agreement",
            dev,
            tol::EQUALITY_ABS,
        ));
    }

    Ok(TvCertificate {
        per_site_factors,
        closed_form_agreement: agreement,
        product_bound,
        dimensional_bound,
        total_variation: tv,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use approx::assert_abs_diff_eq;

    fn singlet_chsh_spec() -> ScenarioSpec {
        ScenarioSpec::new(
            2,
            2,
            presets::chsh_optimal_settings(),
            presets::singlet(),
        )
        .unwrap()
    }

    #[test]
    fn bipartite_singlet_model_is_tight() {
        let spec = singlet_chsh_spec();
        let dist = build_nu_bipartite(&spec).unwrap();
        assert_abs_diff_eq!(dist.table().sum(), 1.0, epsilon = 1e-12);
        let report = marginal_check(&dist).unwrap();
        assert!(report.passed, "max dev {}", report.max_abs_deviation);
        assert_eq!(report.per_tuple.len(), 4);
        // at the Tsirelson settings the norm meets its bound sqrt(2)
        assert_abs_diff_eq!(dist.total_variation(), 2.0_f64.sqrt(), epsilon = 1e-9);
    }

    #[test]
    fn identical_commuting_settings_give_a_probability_model() {
        let z = Observable::new(presets::pauli_z()).unwrap();
        let spec = ScenarioSpec::new(
            2,
            2,
            vec![[z.clone(), z.clone()], [z.clone(), z.clone()]],
            presets::singlet(),
        )
        .unwrap();
        let dist = build_nu_bipartite(&spec).unwrap();
        assert!(dist.table().min_value() >= -1e-12);
        assert_abs_diff_eq!(dist.total_variation(), 1.0, epsilon = 1e-9);
        assert!(marginal_check(&dist).unwrap().passed);
    }

    #[test]
    fn npartite_reduces_to_bipartite() {
        let mut rng = presets::seeded_rng(83);
        for _ in 0..5 {
            let settings = vec![
                [
                    presets::random_nondegenerate_observable(2, &mut rng),
                    presets::random_nondegenerate_observable(2, &mut rng),
                ],
                [
                    presets::random_nondegenerate_observable(2, &mut rng),
                    presets::random_nondegenerate_observable(2, &mut rng),
                ],
            ];
            let state = presets::random_density(4, &mut rng);
            let spec = ScenarioSpec::new(2, 2, settings, state).unwrap();
            let a = build_nu_bipartite(&spec).unwrap();
            let b = build_nu_npartite(&spec).unwrap();
            let dev = a.table().max_abs_diff(b.table());
            assert!(dev <= 1e-12, "bipartite vs npartite deviation {dev}");
        }
    }

    #[test]
    fn ghz_mermin_model_reproduces_marginals() {
        let spec = ScenarioSpec::new(
            3,
            2,
            presets::mk_optimal_settings(3).unwrap(),
            presets::ghz(3).unwrap(),
        )
        .unwrap();
        let dist = build_nu_npartite(&spec).unwrap();
        assert_abs_diff_eq!(dist.table().sum(), 1.0, epsilon = 1e-11);
        let report = marginal_check(&dist).unwrap();
        assert!(report.passed, "max dev {}", report.max_abs_deviation);
        assert_eq!(report.per_tuple.len(), 8);
        assert!(dist.total_variation() <= 2.0 + 1e-9);
    }

    #[test]
    fn every_pivot_choice_satisfies_marginals_and_bound() {
        let mut rng = presets::seeded_rng(97);
        let settings = (0..3)
            .map(|_| {
                [
                    presets::random_nondegenerate_observable(2, &mut rng),
                    presets::random_nondegenerate_observable(2, &mut rng),
                ]
            })
            .collect();
        let state = presets::random_density(8, &mut rng);
        let spec = ScenarioSpec::new(3, 2, settings, state).unwrap();
        for pivot in 0..3 {
            let dist = build_nu_npartite_with(
                &spec,
                BuildOptions {
                    pivot,
                    ..Default::default()
                },
            )
            .unwrap();
            let report = marginal_check(&dist).unwrap();
            assert!(
                report.passed,
                "pivot {pivot} max dev {}",
                report.max_abs_deviation
            );
            assert!(dist.total_variation() <= spec.dimensional_bound() + 1e-9);
        }
    }

    #[test]
    fn product_state_marginals_factor() {
        let mut rng = presets::seeded_rng(101);
        let local_a = presets::random_density(2, &mut rng);
        let local_b = presets::random_density(2, &mut rng);
        let state = presets::product_density(&[local_a.clone(), local_b.clone()]).unwrap();
        let settings = vec![
            [
                presets::random_nondegenerate_observable(2, &mut rng),
                presets::random_nondegenerate_observable(2, &mut rng),
            ],
            [
                presets::random_nondegenerate_observable(2, &mut rng),
                presets::random_nondegenerate_observable(2, &mut rng),
            ],
        ];
        let spec = ScenarioSpec::new(2, 2, settings.clone(), state).unwrap();
        let dist = build_nu_bipartite(&spec).unwrap();
        // marginal of (setting 1, setting 1) equals the product of local
        // Born probabilities
        let x = &settings[0][0];
        let y = &settings[1][0];
        for u in 0..2 {
            for v in 0..2 {
                let mut total = 0.0;
                for flat in 0..dist.table().n_cells() {
                    let idx = dist.table().unflatten(flat);
                    if idx[0] == u && idx[2] == v {
                        total += dist.table().values()[flat];
                    }
                }
                let pa = trace_product(local_a.matrix(), x.projector(u).matrix()).re;
                let pb = trace_product(local_b.matrix(), y.projector(v).matrix()).re;
                assert_abs_diff_eq!(total, pa * pb, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn qutrit_scenario_respects_dimensional_bound() {
        let mut rng = presets::seeded_rng(113);
        let settings = (0..2)
            .map(|_| {
                [
                    presets::random_nondegenerate_observable(3, &mut rng),
                    presets::random_nondegenerate_observable(3, &mut rng),
                ]
            })
            .collect();
        let state = presets::random_density(9, &mut rng);
        let spec = ScenarioSpec::new(2, 3, settings, state).unwrap();
        let dist = build_nu_npartite(&spec).unwrap();
        assert!(marginal_check(&dist).unwrap().passed);
        assert!(dist.total_variation() <= 3.0_f64.sqrt() + 1e-9);
    }

    #[test]
    fn tv_certificate_chain_on_tsirelson_settings() {
        let spec = singlet_chsh_spec();
        let cert = tv_bound_certificate(&spec).unwrap();
        assert!(cert.passed());
        assert_eq!(cert.per_site_factors.len(), 1);
        // the partner site's settings are mutually unbiased, so the per site
        // factor is exactly sqrt(2)
        assert_abs_diff_eq!(cert.per_site_factors[0], 2.0_f64.sqrt(), epsilon = 1e-9);
        assert!(cert.closed_form_agreement.unwrap() <= 1e-9);
        assert!(cert.total_variation <= cert.product_bound + 1e-9);
        assert!(cert.product_bound <= cert.dimensional_bound + 1e-9);
    }

    #[test]
    fn degenerate_settings_downgrade_to_numeric_certificate() {
        let z = Observable::new(presets::pauli_z()).unwrap();
        let id = Observable::new(crate::operator::identity(2)).unwrap();
        let spec = ScenarioSpec::new(
            2,
            2,
            vec![[z.clone(), z.clone()], [z.clone(), id]],
            presets::singlet(),
        )
        .unwrap();
        let cert = tv_bound_certificate(&spec).unwrap();
        assert!(cert.closed_form_agreement.is_none());
        assert!(cert.passed());
        // identical-or-commuting partner settings keep the factor at 1
        assert_abs_diff_eq!(cert.per_site_factors[0], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn spec_validation_rejects_bad_shapes() {
        let z = Observable::new(presets::pauli_z()).unwrap();
        assert!(ScenarioSpec::new(
            1,
            2,
            vec![[z.clone(), z.clone()]],
            DensityMatrix::maximally_mixed(2)
        )
        .is_err());
        assert!(ScenarioSpec::new(
            2,
            2,
            vec![[z.clone(), z.clone()]],
            DensityMatrix::maximally_mixed(4)
        )
        .is_err());
        assert!(ScenarioSpec::new(
            2,
            3,
            vec![[z.clone(), z.clone()], [z.clone(), z.clone()]],
            DensityMatrix::maximally_mixed(9)
        )
        .is_err());
    }
}
